print("Serving predictions (stand-in for flask run)")
