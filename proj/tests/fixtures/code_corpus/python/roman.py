VALUES = [
    (1000, "M"), (900, "CM"), (500, "D"), (400, "CD"),
    (100, "C"), (90, "XC"), (50, "L"), (40, "XL"),
    (10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I"),
]


def to_roman(n):
    parts = []
    for value, sym in VALUES:
        while n >= value:
            parts.append(sym)
            n -= value
    return "".join(parts)


for n in (3, 58, 1994, 2024):
    print(n, to_roman(n))
