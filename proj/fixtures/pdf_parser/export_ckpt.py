import json

with open("model.pth", "w", encoding="utf-8") as f:
    json.dump({"format": "demo", "layers": 2}, f)
