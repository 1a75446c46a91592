import math


class Config:
    learning_rate = 0.001
    batch_size = 32
    epochs = 10
    seed = 7


def load_rows(path):
    handle = open(path)
    rows = handle.readlines()
    handle.close()
    return rows


def cosine(a, b):
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(y * y for y in b))
    return dot / (na * nb)


def shuffle_rows(rows, rng):
    order = list(range(len(rows)))
    rng.shuffle(order)
    picked = [rows[i] for i in order]
    return picked
