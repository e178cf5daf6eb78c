"""External analyzer stub that finds no calls at all."""
import json
import sys

g0 = json.load(open(sys.argv[2]))
g0["edges"] = []
json.dump(g0, sys.stdout)
