import shutil
import sys
from pathlib import Path

import pytest
from hypothesis import settings

from lacuna.graph import FunctionId
from lacuna.inventory import initialize_cg, parse_app
from lacuna.runner import node_available

ROOT = Path(__file__).resolve().parent.parent
DATA = Path(__file__).resolve().parent / "data"
CORPUS = ROOT / "corpus"
RUNNING = DATA / "running_example"
STUBS = DATA / "stubs"

RUNNER = [sys.executable, "-m", "lacuna.runner"]

# functions of the running example, by byte span in script.js
A = FunctionId("script.js", 0, 61)
INLINE = FunctionId("script.js", 27, 51)
B = FunctionId("script.js", 63, 118)
C = FunctionId("script.js", 120, 223)

needs_node = pytest.mark.skipif(not node_available(), reason="node is not installed")


def stub_command(name: str) -> str:
    return f"{sys.executable} {STUBS / name}"


@pytest.fixture
def running_app(tmp_path) -> Path:
    dest = tmp_path / "running"
    shutil.copytree(RUNNING / "app", dest)
    return dest


@pytest.fixture
def running_inventory(running_app):
    inv = parse_app(running_app)
    return inv, initialize_cg(inv)


@pytest.fixture
def make_app(tmp_path):
    """Build a throwaway app from {relative path: text}."""
    counter = [0]

    def build(files: dict[str, str]) -> Path:
        counter[0] += 1
        root = tmp_path / f"app{counter[0]}"
        for rel, text in files.items():
            p = root / rel
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(text, encoding="utf-8")
        root.mkdir(parents=True, exist_ok=True)
        return root

    return build


settings.register_profile("default", deadline=None)
settings.load_profile("default")


# acceptance criterion -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
