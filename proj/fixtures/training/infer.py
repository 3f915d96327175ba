import flor

for doc in flor.loop("document", ["a.pdf", "b.pdf"]):
    flor.log("prediction", len(doc) % 2)
