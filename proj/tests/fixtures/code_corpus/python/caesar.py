def encrypt(text, shift):
    out = []
    for ch in text:
        if ch.isalpha():
            base = ord('A') if ch.isupper() else ord('a')
            out.append(chr((ord(ch) - base + shift) % 26 + base))
        else:
            out.append(ch)
    return "".join(out)


def decrypt(text, shift):
    return encrypt(text, -shift)


message = "Attack at dawn!"
secret = encrypt(message, 3)
print(secret)
print(decrypt(secret, 3))
