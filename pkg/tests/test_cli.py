import json
import subprocess
import sys

import pytest

from absneg import __version__
from absneg.cli import default_seed, main


def _body(path):
    return [l for l in path.read_text().splitlines() if not l.startswith("#")]


def _meta(path):
    return {l[2:].split(":", 1)[0] for l in path.read_text().splitlines() if l.startswith("#")}


def test_critical_angles(tmp_path):
    out = tmp_path / "ca.csv"
    assert main(["--command", "critical-angles", "--out", str(out)]) == 0
    body = _body(out)
    assert body[0] == "name,value_over_pi,published_over_pi"
    assert body[1].startswith("theta1,0.203170578043")
    assert {"tool", "config", "seed", "duration_s"} <= _meta(out)
    assert __version__ in out.read_text()


def test_hierarchy_table_m0_passes(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["--command", "hierarchy-table", "--m", "0", "--out", str(out)]) == 0
    assert _body(out) == ["m,O_count,U_count,ratio", "0,24,2,12"]


def test_hierarchy_table_flags_mismatch(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["--command", "hierarchy-table", "--m", "1", "--out", str(out)]) == 2
    assert _body(out)[2] == "1,456,70,6.51428571429"


def test_bad_output_path():
    assert main(["--command", "critical-angles", "--out", "/nonexistent/dir/x.csv"]) == 1


def test_bad_grid(tmp_path):
    assert main(["--command", "quadruplet-curve", "--theta-max", "2", "--out", str(tmp_path / "x")]) == 1


def test_unknown_command():
    with pytest.raises(SystemExit):
        main(["--command", "nope"])


def test_seed_from_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("ABSNEG_SEED", raising=False)
    assert default_seed() == 42
    monkeypatch.setenv("ABSNEG_SEED", "9")
    assert default_seed() == 9
    out = tmp_path / "t2.json"
    assert main(["--command", "cost-bounds", "--m", "2", "--format", "json", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["meta"]["seed"] == 9
    assert len(doc["rows"]) == 40
    assert min(min(r[8], r[9]) for r in doc["rows"]) >= -1e-9
    assert main(["--command", "cost-bounds", "--m", "2", "--seed", "3", "--format", "json",
                 "--out", str(out)]) == 0
    assert json.loads(out.read_text())["meta"]["seed"] == 3


def test_quadruplet_curve_reproducible(tmp_path):
    args = ["--command", "quadruplet-curve", "--theta-steps", "13", "--restarts", "2", "--threads", "2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b), "--threads", "1"]) == 0
    assert _body(a) == _body(b)
    assert _body(a)[0].split(",")[:4] == ["theta_over_pi", "mean_robustness", "mean_sum_negativity", "ratio"]
    summary = json.loads((tmp_path / "a.summary.json").read_text())["summary"]
    assert summary["window_match"]
    assert abs(summary["ratio_published"] - 2.7320508075688772) < 1e-12


def test_small_radius_curve(tmp_path):
    out = tmp_path / "r.csv"
    assert main(["--command", "quadruplet-curve", "--r", "0.5", "--theta-steps", "9",
                 "--restarts", "1", "--out", str(out)]) == 0
    assert all(row.split(",")[1] == "0" for row in _body(out)[1:])


def test_hierarchy_curve(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["--command", "hierarchy-curve", "--m", "1,2,3", "--theta-steps", "13",
                 "--restarts", "2", "--out", str(out)]) == 0
    assert _body(out)[0] == "theta_over_pi,annealed,bound_m1,bound_m2,bound_m3"
    conv = json.loads((tmp_path / "h.summary.json").read_text())["convergence"]
    assert conv["published_rate"] == 0.627 and "rate" in conv
    assert main(["--command", "hierarchy-curve", "--m", "5", "--out", str(out)]) == 1


def test_triplet_scan(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["--command", "triplet-scan", "--theta-steps", "2", "--restarts", "1", "--out", str(out)]) == 0
    assert len(_body(out)) == 1 + 2 * 4 * 4


def test_radius_threshold_single_point(tmp_path):
    out = tmp_path / "r.json"
    rc = main(["--command", "radius-threshold", "--theta-min", "0.4315", "--theta-max", "0.4315",
               "--theta-steps", "1", "--restarts", "2", "--format", "json", "--out", str(out)])
    doc = json.loads(out.read_text())
    assert rc == 0, doc
    assert 0.7325 <= doc["threshold"] <= 0.7425


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "absneg", "--command", "critical-angles"],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "theta3" in r.stdout
