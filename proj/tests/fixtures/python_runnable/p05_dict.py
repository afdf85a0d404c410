ages = {"ada": 36, "alan": 41, "grace": 85}
for key in sorted(ages):
    print(key, ages[key])
oldest = max(ages, key=ages.get)
print("oldest:", oldest)
