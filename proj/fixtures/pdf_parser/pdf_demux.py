import os

os.makedirs("pages", exist_ok=True)
for doc in sorted(os.listdir("docs")):
    with open(os.path.join("docs", doc), encoding="utf-8") as f:
        pages = f.read().split("\f")
    for i, text in enumerate(pages):
        with open(os.path.join("pages", "%s.%d.txt" % (doc, i)), "w", encoding="utf-8") as out:
            out.write(text)
