def counter(values):
    return sum(1 for v in values if v == 0)
