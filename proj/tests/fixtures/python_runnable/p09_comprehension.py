squares = [n * n for n in range(12) if n % 3 != 0]
print(squares)
pairs = {n: n * 2 for n in range(5)}
print(sorted(pairs.items()))
