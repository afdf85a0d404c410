rows = [
    "name,age,city",
    "ada,36,london",
    "alan,41,cambridge",
    "grace,85,arlington",
]

header = rows[0].split(",")
records = []
for line in rows[1:]:
    fields = line.split(",")
    records.append(dict(zip(header, fields)))

oldest = max(records, key=lambda r: int(r["age"]))
print(oldest["name"])
for r in records:
    print(r["name"], r["city"])
