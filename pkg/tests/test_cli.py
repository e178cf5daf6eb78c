import json
import shutil
import subprocess
import sys
import urllib.request

import pytest

from lacuna.cli import EXIT_FAILED, EXIT_INVALID, EXIT_OK, main
from lacuna.graph import deserialize_graph
from lacuna.pipeline import tree_hash

from conftest import C, CORPUS, RUNNING, STUBS, stub_command

TRACE = str(RUNNING / "trace.txt")
ENSEMBLE = ["--analyzer", "static,native-calls,dynamic", "--trace", TRACE]


def lacuna(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def summary(out: str) -> dict[str, str]:
    return dict(line.split(": ", 1) for line in out.splitlines() if ": " in line)


class TestOptimize:
    def test_running_example_ol3(self, capsys, running_app, tmp_path):
        out_dir = tmp_path / "out"
        code, out, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", out_dir, "--olevel", 3, *ENSEMBLE)
        assert code == EXIT_OK
        s = summary(out)
        assert s["functions"] == "4" and s["dead"] == "1" and s["level"] == "OL3"
        assert s["edges[static]"] == "1" and s["edges[native-calls]"] == "3" and s["edges[dynamic]"] == "3"
        assert "function c" not in (out_dir / "script.js").read_text()
        report = json.loads((tmp_path / "out.report.json").read_text())
        assert [f["id"] for f in report["functions"] if f["status"] == "dead"] == [str(C)]

    def test_ol0_copy_and_report(self, capsys, running_app, tmp_path):
        code, _, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o",
                            "--report", tmp_path / "r.json")
        assert code == EXIT_OK
        assert tree_hash(tmp_path / "o") == tree_hash(running_app)
        assert json.loads((tmp_path / "r.json").read_text())["level"] == "OL0"

    @pytest.mark.parametrize("level", [0, 1, 2, 3])
    def test_input_is_never_modified(self, capsys, running_app, tmp_path, level):
        before = tree_hash(running_app)
        code, _, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o",
                            "--olevel", level, *ENSEMBLE)
        assert code == EXIT_OK
        assert tree_hash(running_app) == before

    def test_deterministic(self, capsys, tmp_path):
        app = CORPUS / "widgets" / "app"
        for i in (1, 2):
            assert lacuna(capsys, "optimize", "--app", app, "--out", tmp_path / f"o{i}", "--olevel", 1,
                          "--report", tmp_path / f"r{i}.json")[0] == EXIT_OK
        assert tree_hash(tmp_path / "o1") == tree_hash(tmp_path / "o2")
        assert (tmp_path / "r1.json").read_bytes() == (tmp_path / "r2.json").read_bytes()

    def test_output_equal_to_app_is_rejected(self, capsys, running_app):
        before = tree_hash(running_app)
        code, _, err = lacuna(capsys, "optimize", "--app", running_app, "--out", running_app, "--olevel", 3)
        assert code == EXIT_INVALID
        assert "differ" in err
        assert tree_hash(running_app) == before

    def test_nonempty_output_is_rejected(self, capsys, running_app, tmp_path):
        (tmp_path / "o").mkdir()
        (tmp_path / "o" / "keep.txt").write_text("x")
        assert lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o")[0] == EXIT_INVALID

    @pytest.mark.parametrize("argv", [
        ["--olevel", "7"],
        ["--analyzer", "bogus"],
        ["--analyzer", "static,static"],
        ["--lazy-port", "70000"],
        ["--timeout", "0"],
        ["--external", "nocolon"],
    ])
    def test_validation_errors(self, capsys, running_app, tmp_path, argv):
        code, _, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o", *argv)
        assert code == EXIT_INVALID
        assert not (tmp_path / "o").exists()

    def test_missing_app(self, capsys, tmp_path):
        assert lacuna(capsys, "optimize", "--app", tmp_path / "nope", "--out", tmp_path / "o")[0] == EXIT_INVALID

    def test_failed_analyzer_degrades(self, capsys, running_app, tmp_path):
        code, out, err = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o", *ENSEMBLE,
                                "--external", f"broken:{stub_command('crash.py')}")
        assert code == EXIT_OK
        assert "failed[broken]" in out
        assert summary(out)["dead"] == "1"

    def test_all_analyzers_failing_is_a_pipeline_error(self, capsys, running_app, tmp_path):
        code, _, err = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o",
                              "--external", f"broken:{stub_command('crash.py')}")
        assert code == EXIT_FAILED
        assert "broken" in err
        assert not (tmp_path / "o").exists()

    def test_emit_graph(self, capsys, running_app, tmp_path):
        graph_path = tmp_path / "g.json"
        lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o", *ENSEMBLE, "--emit-graph", graph_path)
        g = deserialize_graph(graph_path.read_text())
        assert len(g) == 5 and len(g.edges) == 3

    def test_ol1_writes_body_store_and_port(self, capsys, running_app, tmp_path):
        code, out, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o", "--olevel", 1,
                              "--lazy-port", 9123, *ENSEMBLE)
        assert code == EXIT_OK
        assert "1 bodies" in out
        assert "http://127.0.0.1:9123" in (tmp_path / "o" / "script.js").read_text()


class TestConfigFile:
    def write(self, app, text):
        (app / "lacuna.toml").write_text(text)

    def test_settings_come_from_the_file(self, capsys, running_app, tmp_path):
        shutil.copy(TRACE, running_app.parent / "trace.txt")
        self.write(running_app, 'analyzers = ["static", "native-calls", "dynamic"]\n'
                                'trace = "../trace.txt"\nolevel = 2\n')
        code, out, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o")
        assert code == EXIT_OK
        s = summary(out)
        assert s["level"] == "OL2" and s["dead"] == "1"
        assert "edges[dynamic]" in s

    def test_flags_win(self, capsys, running_app, tmp_path):
        self.write(running_app, 'analyzers = ["static"]\nolevel = 2\n')
        code, out, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o",
                              "--olevel", 3, "--analyzer", "acg")
        s = summary(out)
        assert s["level"] == "OL3"
        assert "edges[acg]" in s and "edges[static]" not in s

    def test_defaults(self, capsys, running_app, tmp_path):
        code, out, _ = lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o")
        s = summary(out)
        assert s["level"] == "OL0"
        assert {k for k in s if k.startswith("edges[")} == {"edges[static]", "edges[acg]", "edges[native-calls]"}

    def test_external_table(self, capsys, running_app, tmp_path):
        self.write(running_app, f'[external]\nfig = "{stub_command("running_graph.py")}"\n')
        code, out, _ = lacuna(capsys, "analyze", "--app", running_app, "--report", tmp_path / "r.json")
        assert code == EXIT_OK
        assert summary(out)["edges[fig]"] == "3"

    def test_broken_file(self, capsys, running_app, tmp_path):
        self.write(running_app, "olevel = = 2\n")
        assert lacuna(capsys, "optimize", "--app", running_app, "--out", tmp_path / "o")[0] == EXIT_INVALID

    def test_explicit_missing_file(self, capsys, running_app, tmp_path):
        code, _, _ = lacuna(capsys, "analyze", "--app", running_app, "--config", tmp_path / "none.toml")
        assert code == EXIT_INVALID


class TestAnalyze:
    def test_lists_dead_functions(self, capsys, running_app):
        code, out, _ = lacuna(capsys, "analyze", "--app", running_app, *ENSEMBLE)
        assert code == EXIT_OK
        assert f"dead {C} c" in out
        report = json.loads(out[out.index("{"):])
        assert report["stats"] == {"total": 4, "dead": 1}

    def test_external_unknown_id_warns(self, capsys, running_app, tmp_path):
        code, out, _ = lacuna(capsys, "analyze", "--app", running_app, *ENSEMBLE,
                              "--external", f"odd:{stub_command('unknown_id.py')}", "--report", tmp_path / "r.json")
        assert code == EXIT_OK
        assert "failed[odd]" in out and "unknown node id" in out


class TestInstrument:
    def test_writes_probes(self, capsys, running_app, tmp_path):
        code, out, _ = lacuna(capsys, "instrument", "--app", running_app, "--out", tmp_path / "i")
        assert code == EXIT_OK
        assert "__lacuna_enter" in (tmp_path / "i" / "script.js").read_text()

    def test_same_directory_rejected(self, capsys, running_app):
        assert lacuna(capsys, "instrument", "--app", running_app, "--out", running_app)[0] == EXIT_INVALID


class TestEval:
    def planted_corpus(self, tmp_path):
        root = tmp_path / "corpus" / "running"
        shutil.copytree(RUNNING / "app", root / "app")
        shutil.copy(RUNNING / "truth.json", root / "truth.json")
        return tmp_path / "corpus"

    def test_planted_best_combination_ranks_first(self, capsys, tmp_path):
        corpus = self.planted_corpus(tmp_path)
        code, out, _ = lacuna(capsys, "eval", "--corpus", corpus, "--sweep", "--report", tmp_path / "r.json",
                              "--external", f"exact:{stub_command('running_graph.py')}",
                              "--external", f"none:{stub_command('noedges.py')}",
                              "--external", f"all:{stub_command('everything.py')}")
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "r.json").read_text())
        assert len(doc["per_app"]) == 7
        assert doc["aggregate"][0]["combination"] == ["exact"]
        assert doc["aggregate"][0]["f_score"] == 1.0

    def test_sweep_of_three_gives_seven_rows_per_app(self, capsys, tmp_path):
        code, out, _ = lacuna(capsys, "eval", "--corpus", CORPUS, "--sweep", "--analyzer", "static,acg,native-calls",
                              "--report", tmp_path / "r.json")
        assert code == EXIT_OK
        doc = json.loads((tmp_path / "r.json").read_text())
        apps = {r["app"] for r in doc["per_app"]}
        assert len(doc["per_app"]) == 7 * len(apps)
        assert len(doc["aggregate"]) == 7

    def test_single_combination_gives_one_aggregate(self, capsys, tmp_path):
        code, out, _ = lacuna(capsys, "eval", "--corpus", CORPUS, "--analyzer", "static",
                              "--report", tmp_path / "r.json")
        doc = json.loads((tmp_path / "r.json").read_text())
        assert len(doc["aggregate"]) == 1
        assert "(mean)" in out

    def test_figures(self, capsys, tmp_path):
        corpus = self.planted_corpus(tmp_path)
        code, out, _ = lacuna(capsys, "eval", "--corpus", corpus, "--sweep", "--figures", tmp_path / "figs",
                              "--analyzer", "static,native-calls")
        assert code == EXIT_OK
        pngs = sorted(p.name for p in (tmp_path / "figs").iterdir())
        assert pngs == ["combinations.png", "per_app.png"]
        for p in (tmp_path / "figs").iterdir():
            assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"

    def test_app_failure_is_recorded(self, capsys, tmp_path):
        corpus = self.planted_corpus(tmp_path)
        bad = corpus / "broken"
        shutil.copytree(RUNNING / "app", bad / "app")
        (bad / "truth.json").write_text('{"functions": []}')
        code, out, err = lacuna(capsys, "eval", "--corpus", corpus, "--analyzer", "static")
        assert code == EXIT_OK
        assert "error[broken]" in err

    def test_corpus_unchanged(self, capsys, tmp_path):
        before = tree_hash(CORPUS)
        lacuna(capsys, "eval", "--corpus", CORPUS, "--analyzer", "static,acg")
        assert tree_hash(CORPUS) == before


def test_serve_subprocess(running_app, tmp_path):
    assert main(["optimize", "--app", str(running_app), "--out", str(tmp_path / "o"), "--olevel", "1",
                 *ENSEMBLE]) == EXIT_OK
    with __import__("socket").socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    proc = subprocess.Popen([sys.executable, "-m", "lacuna.cli", "serve", "--store", str(tmp_path / "o"),
                             "--port", str(port)], stdout=subprocess.PIPE, text=True)
    try:
        line = proc.stdout.readline()
        assert f"serving 1 function bodies at http://127.0.0.1:{port}" in line
        req = urllib.request.Request(f"http://127.0.0.1:{port}", data=str(C).encode(), method="POST")
        with urllib.request.urlopen(req, timeout=5) as resp:
            body = resp.read()
        pristine = (RUNNING / "app" / "script.js").read_bytes()
        assert body == pristine[C.start:C.end][len(b"function c()"):]
    finally:
        proc.terminate()
        proc.wait(timeout=5)


def test_serve_without_store(capsys):
    assert lacuna(capsys, "serve")[0] == EXIT_INVALID


def test_console_script(tmp_path):
    exe = shutil.which("lacuna")
    if exe is None:
        pytest.skip("package scripts are not installed")
    proc = subprocess.run([exe, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    for command in ("optimize", "analyze", "serve", "eval", "instrument"):
        assert command in proc.stdout


def test_usage_error_exit_code(capsys):
    assert main(["optimize"]) == EXIT_INVALID
    assert main(["frobnicate"]) == EXIT_INVALID
    assert "required" in capsys.readouterr().err
