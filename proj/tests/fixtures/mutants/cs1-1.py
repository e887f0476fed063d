name = input()
print("Hi " + name)
