age = int(input())
if age <= 12:
    print("Child")
elif age <= 19:
    print("Teenager")
elif age <= 65:
    print("Adult")
else:
    print("Senior")
