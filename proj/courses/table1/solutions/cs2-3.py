def repeat(values):
    out = []
    for v in values:
        out.extend([v] * v)
    return out
