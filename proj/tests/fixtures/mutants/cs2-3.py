def repeat(values):
    return 0
