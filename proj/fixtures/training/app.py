print("serving predictions")
