import csv
import json
from pathlib import Path

import pytest

from qmpack.cli import main
from qmpack.report import validate

BENCH = Path(__file__).resolve().parents[1] / "src" / "qmpack" / "data" / "benchmarks"


def run(args, capsys):
    code = main([str(a) for a in args])
    out, err = capsys.readouterr()
    return code, out, err


def report(out_dir: Path) -> dict:
    doc = json.loads((out_dir / "report.json").read_text())
    validate(doc)
    return doc


def test_compile_workload_places_everything(tmp_path, capsys):
    code, out, _ = run(["compile", "--device", "falcon27", "--workload", 100, "--buffer", 0, "--out", tmp_path / "a"],
                       capsys)
    assert code == 0 and out.strip().endswith("report.json")
    rep = report(tmp_path / "a")
    assert sum(len(r["members"]) for r in rep["plan"]["rounds"]) == 100 and rep["plan"]["leftover"] == []
    n_rounds = len(rep["plan"]["rounds"])
    assert len(list((tmp_path / "a" / "rounds").glob("*.qasm"))) == n_rounds
    run(["compile", "--device", "falcon27", "--workload", 100, "--buffer", 3, "--out", tmp_path / "b"], capsys)
    assert len(report(tmp_path / "b")["plan"]["rounds"]) >= n_rounds


def test_empty_directory(tmp_path, capsys):
    (tmp_path / "in").mkdir()
    code, _, err = run(["compile", "--device", "falcon27", "--circuits", tmp_path / "in", "--out", tmp_path / "o"],
                       capsys)
    assert code != 0 and "no input circuits" in err


def test_parse_errors_go_to_stderr(tmp_path, capsys):
    bad = tmp_path / "bad.qasm"
    bad.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[2];\ncz q[0],q[1];\n')
    code, _, err = run(["compile", "--device", "falcon27", "--circuits", bad, "--out", tmp_path / "o"], capsys)
    assert code == 1 and f"{bad}:4:1: error: unsupported gate" in err
    assert not (tmp_path / "o" / "report.json").exists()


@pytest.mark.parametrize("extra, needle", [
    (["--shots", "0"], "shots"),
    (["--buffer", "-1"], "buffer"),
    (["--device", "/nonexistent.json"], "does not exist"),
])
def test_manifest_checks(tmp_path, capsys, extra, needle):
    args = ["simulate", "--device", "falcon27", "--workload", "3", "--out", str(tmp_path)] + extra
    code, _, err = run(args, capsys)
    assert code == 2 and needle in err


def test_simulate_noiseless(tmp_path, capsys):
    code, _, _ = run(["simulate", "--device", "falcon27", "--circuits", BENCH, "--noiseless", "--shots", 256,
                      "--out", tmp_path], capsys)
    assert code == 0
    rep = report(tmp_path)
    members = rep["simulation"]["members"]
    assert len(members) == 7 and all(m["pst"] == 1.0 for m in members)
    rows = list(csv.DictReader((tmp_path / "counts.csv").open()))
    assert sum(int(r["count"]) for r in rows) == 7 * 256


def test_simulate_is_reproducible(tmp_path, capsys):
    base = ["simulate", "--device", "falcon27", "--workload", 12, "--buffer", 1, "--shots", 300, "--seed", 7,
            "--gamma", 2.5, "--idle-rate", 1e-5]
    run(base + ["--out", tmp_path / "a"], capsys)
    run(base + ["--out", tmp_path / "b"], capsys)
    run(["simulate", "--manifest", tmp_path / "a" / "report.json", "--out", tmp_path / "c"], capsys)
    texts = [(tmp_path / d / "report.json").read_bytes() for d in "abc"]
    assert texts[0] == texts[1] == texts[2]
    assert (tmp_path / "a" / "counts.csv").read_bytes() == (tmp_path / "c" / "counts.csv").read_bytes()


def test_oversize_member_is_skipped_with_warning(tmp_path, capsys):
    wide = tmp_path / "wide.qasm"
    body = "".join(f"cx q[{i}],q[{i + 1}];\n" for i in range(14))
    wide.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[15];\ncreg c[1];\n' + body + "measure q[0] -> c[0];\n")
    small = tmp_path / "small.qasm"
    small.write_text('OPENQASM 2.0;\ninclude "qelib1.inc";\nqreg q[1];\ncreg c[1];\nx q[0];\nmeasure q[0] -> c[0];\n')
    code, _, _ = run(["simulate", "--device", "falcon27", "--circuits", wide, small, "--shots", 64,
                      "--out", tmp_path / "o"], capsys)
    assert code == 0
    rep = report(tmp_path / "o")
    assert [s["member"] for s in rep["simulation"]["skipped"]] == ["wide"]
    assert any("wide" in w for w in rep["warnings"])


def test_characterize(tmp_path, capsys):
    args = ["characterize", "--device", "falcon27", "--lengths", "1,4,16", "--samples", 2, "--shots", 128,
            "--targets", "0-1,4-7;1-2"]
    code, _, _ = run(args + ["--gamma", 1, "--out", tmp_path / "g1"], capsys)
    assert code == 0
    assert report(tmp_path / "g1")["characterization"]["ct"] == 0.0
    code, _, err = run(["characterize", "--device", "falcon27", "--targets", "0-1,1-2", "--out", tmp_path / "x"],
                       capsys)
    assert code == 2 and "overlap" in err
    assert (tmp_path / "g1" / "survival.csv").read_text().startswith("target,length,sample,survival")


def test_sweep(tmp_path, capsys):
    code, _, err = run(["sweep", "--device", "falcon27", "--workload", 6, "--buffers", "2", "--seed", 0,
                        "--out", tmp_path / "x"], capsys)
    assert code == 2 and "buffers" in err
    code, _, err = run(["sweep", "--device", "falcon27", "--workload", 6, "--buffers", "0,2", "--out", tmp_path / "y"],
                       capsys)
    assert code == 2 and "seed" in err
    args = ["sweep", "--device", "falcon27", "--workload", 8, "--buffers", "0,2", "--seeds", "0,1",
            "--gammas", "1,2,3", "--lengths", "1,4,16", "--samples", 1, "--shots", 128, "--out", tmp_path / "s"]
    code, _, _ = run(args, capsys)
    assert code == 0
    rep = report(tmp_path / "s")
    assert set(rep["sweep"]["gain"]) == {"1.0", "2.0", "3.0"}
    scatter = list(csv.DictReader((tmp_path / "s" / "scatter.csv").open()))
    assert len(scatter) == 3 and float(scatter[0]["ct"]) == 0.0
    assert len(list(csv.DictReader((tmp_path / "s" / "sweep.csv").open()))) == 3 * 2 * 2
