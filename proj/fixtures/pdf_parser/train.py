import flor

hidden_size = flor.arg("hidden", 500)
num_epochs = flor.arg("epochs", 5)
batch_size = flor.arg("batch_size", 32)
learning_rate = flor.arg("lr", 1e-3)
seed = flor.arg("seed", 0)

RECALL = [0.50, 0.70, 0.65, 0.80, 0.78]
STEPS = 2

net = {"epoch": -1, "weight": 0.0}
optimizer = {"lr": learning_rate, "t": 0}

with flor.checkpointing(model=net, optimizer=optimizer):
    for epoch in flor.loop("epoch", range(num_epochs)):
        if not flor.restored():
            for step in flor.loop("step", range(STEPS)):
                loss = 1.0 / (1 + epoch * STEPS + step)
                flor.log("loss", loss)
                net["weight"] += optimizer["lr"] * loss
                optimizer["t"] += 1
            net["epoch"] = epoch
        acc = round(0.6 + 0.05 * net["epoch"], 4)
        recall = RECALL[net["epoch"] % len(RECALL)]
        flor.log("acc", acc)
        flor.log("recall", recall)
