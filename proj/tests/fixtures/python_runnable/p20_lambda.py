nums = [-4, 2, -1, 5, -3]
positive = list(filter(lambda v: v > 0, nums))
doubled = list(map(lambda v: v * 2, nums))
print(positive)
print(doubled)
