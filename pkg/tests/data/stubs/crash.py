"""External analyzer stub that fails."""
import sys

sys.stderr.write("analysis exploded\n")
sys.exit(3)
