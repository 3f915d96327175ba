import json

with open("labels.json", "w", encoding="utf-8") as f:
    json.dump({"a.pdf": ["green", "red"], "b.pdf": ["green", "red"]}, f)
