import flor

rows = flor.arg("rows", 8)
flor.log("rows_prepared", rows)
