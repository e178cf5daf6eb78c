"""External analyzer stub that reports a function the app does not contain."""
import json
import sys

g0 = json.load(open(sys.argv[2]))
g0["nodes"].append({"id": "nope.js[0:1]", "kind": "declaration", "name": "ghost"})
g0["edges"] = [{"caller": "<global>[0:0]", "callee": "nope.js[0:1]", "labels": ["bad"]}]
json.dump(g0, sys.stdout)
