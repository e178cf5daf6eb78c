"""External analyzer stub that prints something other than a graph."""
print("this is not json")
