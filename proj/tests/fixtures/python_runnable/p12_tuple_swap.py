a, b = 5, 9
a, b = b, a
print(a, b)
coords = [(1, 2), (3, 4), (5, 6)]
for x, y in coords:
    print(x + y)
