def initials(text):
    return "".join(word[0].upper() for word in text.split())
