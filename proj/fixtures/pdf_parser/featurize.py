import os

import flor


def get_num_pages(doc_name):
    return len([p for p in os.listdir("pages") if p.startswith(doc_name + ".")])


def read_page(doc_name, page):
    with open(os.path.join("pages", "%s.%d.txt" % (doc_name, page)), encoding="utf-8") as f:
        lines = f.read().strip("\n").split("\n")
    if lines and lines[0] == "[scan]":
        return "OCR", "\n".join(lines[1:])
    return "TXT", "\n".join(lines)


def analyze_text(page_text):
    lines = page_text.split("\n")
    headings = [l[2:] for l in lines if l.startswith("# ")]
    numbers = [l for l in lines if l.isdigit()]
    return "|".join(headings), ";".join(numbers)


for doc_name in flor.loop("document", sorted(os.listdir("docs"))):
    N = get_num_pages(doc_name)
    for page in flor.loop("page", range(N)):
        text_src, page_text = read_page(doc_name, page)
        flor.log("text_src", text_src)
        flor.log("page_text", page_text)

        headings, page_numbers = analyze_text(page_text)
        flor.log("headings", headings)
        flor.log("page_numbers", page_numbers)
