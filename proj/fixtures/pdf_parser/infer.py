import os

import flor

for doc_name in flor.loop("document", sorted(os.listdir("docs"))):
    pages = sorted(p for p in os.listdir("pages") if p.startswith(doc_name + "."))
    for page in flor.loop("page", range(len(pages))):
        flor.log("first_page", int(page == 0))
        flor.log("prediction", "green" if page == 0 else "red")
