a = {1, 2, 3, 4, 5}
b = {4, 5, 6, 7}
print(sorted(a & b))
print(sorted(a | b))
print(sorted(a - b))
