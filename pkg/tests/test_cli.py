import json
import subprocess
import sys
from pathlib import Path

import pytest

from mediankit.cli import main
from mediankit.io import load_file

ROOT = Path(__file__).resolve().parent.parent
INST = ROOT / "instances"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def results(out: str) -> list[dict]:
    return json.loads(out)["results"]


class TestExitCodes:
    def test_ok(self, capsys):
        code, out, _ = run(capsys, "run", INST / "line.json", "--no-timings")
        assert code == 0
        assert all(r["status"] in ("ok", "precondition") for r in results(out))

    def test_parse_error_location(self, capsys):
        code, out, err = run(capsys, "run", INST / "bad.json")
        assert code == 1 and out == ""
        assert "ParseError" in err and "bad.json:4:33" in err

    def test_schema_error(self, capsys):
        code, _, err = run(capsys, "validate", INST / "schema_error.json")
        assert code == 1 and "SchemaError" in err and "rank" in err

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "run", tmp_path / "nope.json")
        assert code == 1 and "mediankit:" in err

    def test_unknown_request(self, capsys, tmp_path):
        data = json.loads((INST / "line.json").read_text())
        data["requests"] = [{"kind": "tea"}]
        p = tmp_path / "unknown.json"
        p.write_text(json.dumps(data))
        code, _, err = run(capsys, "run", p)
        assert code == 1 and ("UnknownRequest" in err or "SchemaError" in err)

    def test_undecided(self, capsys):
        code, out, _ = run(capsys, "run", INST / "undecided.json", "--no-timings")
        assert code == 2
        rs = results(out)
        assert rs[0]["status"] == "ok" and rs[1]["status"] == "undecided"
        assert "points" in rs[1]["reason"]

    def test_oracle_mismatch(self, capsys):
        code, out, _ = run(capsys, "oracle", INST / "negative_control.json", "--name", "window-core")
        assert code == 3
        (rec,) = results(out)
        assert rec["result"]["status"] == "MISMATCH"
        assert rec["result"]["difference"]["wall"] == "t0:cone(a)"


class TestReports:
    def test_line_translation(self, capsys):
        code, out, _ = run(capsys, "run", INST / "line_translation.json", "--no-timings")
        assert code == 0
        by_kind = {r["kind"]: r["result"] for r in results(out)}
        assert by_kind["translation-length"]["value"] == "1"
        assert by_kind["minset"]["certified"]

    def test_stallings_match(self, capsys):
        code, out, _ = run(capsys, "oracle", INST / "f2_a2b2_core.json", "--name", "stallings")
        assert code == 0
        (rec,) = results(out)
        assert rec["result"]["status"] == "MATCH"

    def test_reflection_precondition_witness(self, capsys):
        _, out, _ = run(capsys, "run", INST / "line.json", "--no-timings")
        pre = [r for r in results(out) if r["status"] == "precondition"]
        assert pre and all(r.get("witness") == "x0>=1" for r in pre)

    def test_window_precedence(self, capsys):
        # a request's own window wins over --window
        _, out, _ = run(capsys, "run", INST / "line.json", "--no-timings", "--window", "5")
        walls = next(r for r in results(out) if r["kind"] == "walls")
        assert walls["result"]["window"]["radius"] == 2

    def test_out_file_and_timings(self, capsys, tmp_path):
        target = tmp_path / "report.json"
        code, out, _ = run(capsys, "run", INST / "grid.json", "--out", target)
        assert code == 0 and out == ""
        report = json.loads(target.read_text())
        assert set(report["timings"]) == {str(r["index"]) for r in report["results"]}

    def test_validate(self, capsys):
        code, out, _ = run(capsys, "validate", INST / "plane.json")
        assert code == 0 and json.loads(out)["valid"]


@pytest.mark.parametrize("name", sorted(p.name for p in INST.glob("*.json")
                                        if p.name not in ("bad.json", "schema_error.json")))
def test_fixtures_are_deterministic(name, capsys):
    first = run(capsys, "run", INST / name, "--no-timings")
    second = run(capsys, "run", INST / name, "--no-timings")
    assert first == second
    assert first[0] in (0, 2)
    load_file(str(INST / name))


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mediankit.cli", "run", str(INST / "line_translation.json"),
                           "--no-timings"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["mediankit"]
