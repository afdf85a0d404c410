greeting = "Hello"
name = "World"
message = greeting + ", " + name + "!"
print(message)
print(message.upper())
print(message.count("l"))
