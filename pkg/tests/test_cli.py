import csv
import json
import subprocess
import sys

import pytest

from fplap.cli_io import config_reference, main, parse_config_text
from fplap.errors import ValidationError

BASE = "[params]\nN = 1\ns = 0.5\np = {p}\n[grid]\nR = {R}\nn = {n}\n"


def _ini(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_classify(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.4, R=10, n=11))
    assert main(["classify", "--config", cfg, "--out", str(tmp_path / "o")]) == 0
    d = json.loads((tmp_path / "o" / "classify.json").read_text())
    assert d["regime"] == "LowerGood"
    assert d["p_c"] == pytest.approx(4 / 3)
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["command"] == "classify" and "classify.json" in " ".join(man["outputs"])


@pytest.mark.parametrize("text,needle", [
    ("[params]\nN = 1\ns = 0.5\np = 2.5\n", "p must lie"),
    ("[params]\nN = 1\ns = 0.5\np = 1.5\nfoo = 1\n", "params.foo"),
    ("[params]\nN = 1\ns = 0.5\n", "params.p"),
    ("[params]\nN = 1\ns = 0.5\np = 1.5\n[bogus]\nx = 1\n", "bogus"),
    ("[params]\nN = 1\ns = 0.5\np = 1.5\n[grid]\nn = many\n", "grid.n"),
])
def test_validation_errors_exit_2(tmp_path, capsys, text, needle):
    cfg = _ini(tmp_path, text)
    assert main(["classify", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert needle in capsys.readouterr().err


def test_missing_config_and_bad_flags(tmp_path):
    assert main(["evolve", "--out", str(tmp_path)]) == 2
    cfg = _ini(tmp_path, BASE.format(p=1.4, R=10, n=11))
    assert main(["classify", "--config", cfg, "--out", str(tmp_path), "--threads", "0"]) == 2
    assert main(["classify", "--config", cfg, "--out", str(tmp_path), "--tol", "-1"]) == 2


def test_constants_table(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.4, R=10, n=11) + "[constants]\np_values = 1.2, 1.4\n")
    assert main(["constants", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader(open(tmp_path / "constants.csv")))
    assert [float(r["p"]) for r in rows] == [1.2, 1.4]
    assert float(rows[0]["A"]) > 0 > float(rows[1]["A"])


def test_evolve_outputs(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.9, R=20, n=201) + "[evolve]\nt_end = 0.05\nsnapshot_times = 0.05\n")
    out = tmp_path / "run"
    assert main(["evolve", "--config", cfg, "--out", str(out)]) == 0
    names = {f.name for f in out.iterdir()}
    assert {"trajectory.csv", "final.csv", "manifest.json", "trajectory.gp", "snapshot_000.csv"} <= names
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["params"]["p"] == 1.9
    for o in man["outputs"]:
        assert (out / o).stat().st_size > 0


def test_certify_barrier(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.4, R=50, n=1001) + "[barrier]\nfactor = 2\nannulus = 2, 12\n")
    assert main(["certify-barrier", "--config", cfg, "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "barrier.json").read_text())
    assert rep["verdict"] is True and rep["sign"] == "super"


def test_verify_quick(tmp_path):
    cfg = _ini(tmp_path, "[verify]\nsuite = quick\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 0
    res = json.loads((tmp_path / "verify.json").read_text())
    assert len(res) == 4 and all(r["passed"] for r in res)


def test_config_reference_lists_every_section(capsys):
    assert main(["config-reference"]) == 0
    text = capsys.readouterr().out
    for sec in ("[params]", "[grid]", "[evolve]", "[profile]", "[barrier]", "[sweep]"):
        assert sec in text
    # the reference is itself a parseable configuration once params are filled in
    cfg = parse_config_text(config_reference().replace("N = <required>", "N = 1")
                            .replace("s = <required>", "s = 0.5").replace("p = <required>", "p = 1.5"))
    assert cfg["params"]["p"] == 1.5


def test_sweep(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.9, R=20, n=101)
               + "[evolve]\nt_end = 0.02\n[sweep]\ncommand = evolve\nkey = params.p\nvalues = 1.6, 1.8\n")
    assert main(["sweep", "--config", cfg, "--out", str(tmp_path / "sw")]) == 0
    rows = list(csv.DictReader(open(tmp_path / "sw" / "sweep.csv")))
    assert [r["exit_code"] for r in rows] == ["0", "0"]
    assert (tmp_path / "sw" / "run_001" / "trajectory.csv").exists()


def test_module_entry_point(tmp_path):
    cfg = _ini(tmp_path, BASE.format(p=1.2, R=10, n=11))
    r = subprocess.run([sys.executable, "-m", "fplap", "classify", "--config", cfg, "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert json.loads((tmp_path / "classify.json").read_text())["regime"] == "VeryFast"


def test_parse_config_text_requires_params():
    with pytest.raises(ValidationError):
        parse_config_text("[grid]\nR = 1\n")


def test_verify_failure_exits_3(tmp_path, monkeypatch):
    import fplap.verify as v

    bad = lambda tol=None: v._result("always_fails", False, 1.0, 0.0, "forced")
    monkeypatch.setattr(v, "QUICK", [bad])
    cfg = _ini(tmp_path, "[verify]\nsuite = quick\n")
    assert main(["verify", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_profile_command_and_seed(tmp_path):
    text = BASE.format(p=1.9, R=100, n=501) + "[initial]\nradius = 4\n[profile]\ntol = 1e-2\nwindow = 10, 50\n"
    cfg = _ini(tmp_path, text)
    assert main(["profile", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    rep = json.loads((tmp_path / "a" / "convergence.json").read_text())
    assert rep["distances"][-1] <= 1e-2
    seed = tmp_path / "a" / "profile.csv"
    assert main(["profile", "--config", cfg, "--out", str(tmp_path / "b"), "--seed-profile", str(seed),
                 "--tol", "5e-3"]) == 0


def test_profile_nonconvergence_exits_3(tmp_path):
    text = BASE.format(p=1.9, R=50, n=251) + "[initial]\nradius = 4\n[profile]\ntol = 1e-9\nmax_cycles = 3\nmin_cycles = 2\n"
    assert main(["profile", "--config", _ini(tmp_path, text), "--out", str(tmp_path)]) == 3
