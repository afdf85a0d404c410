x = 3
y = 4
total = x * x + y * y
print(total)
print(total ** 0.5)
