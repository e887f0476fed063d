nums = [float(x) for x in input().split()]
print(round(sum(sorted(nums)[1:4]) / 3, 2))
