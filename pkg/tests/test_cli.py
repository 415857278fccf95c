import csv
import json
from fractions import Fraction

import pytest

from svrk.cli import ConfigError, ExperimentConfig, load_config, main
from svrk.energy import critical_bounds, expand_energy, taylor_polynomial

from conftest import sig_digits_match


def _run(tmp_path, name, *argv):
    out = tmp_path / f"{name}.csv"
    code = main([*argv, "--out", str(out)])
    return code, out


def _rows(path):
    return list(csv.DictReader(open(path)))


def test_critical_table(tmp_path):
    code, out = _run(tmp_path, "crit", "critical-table")
    assert code == 0
    rows = _rows(out)
    assert [r["p"] for r in rows] == ["1", "2", "3", "4", "5", "6"]
    assert rows[0]["mu0"] == "-" and rows[0]["nu0"] == "-1/2"
    assert rows[5]["mu0"] == "-1/4800" and rows[5]["nu0"] == "-1/5760"
    for r in rows:
        p = int(r["p"])
        e = expand_energy(taylor_polynomial(p))
        assert Fraction(r["nu0"]) == -e.beta[e.k_star] / 2 == critical_bounds(e, p).nu0


def test_critical_table_stdout(capsys):
    assert main(["critical-table", "--p", "3"]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0] == "p,k_star,mu0,nu0" and "1/24" in text


def test_norm_table_examples(tmp_path):
    code, out = _run(tmp_path, "n1", "norm-table", "--p", "2", "--mu", "0", "--nu", "0", "--tau", "1/10")
    assert code == 0 and sig_digits_match(float(_rows(out)[0]["value"]), "1.44E-05", 2)
    code, out = _run(tmp_path, "n2", "norm-table", "--system", "dg", "--p", "3", "--mu", "0", "--nu", "0.99/24", "--mode", "modified", "--tau", "1e-3")
    assert code == 0 and _rows(out)[0]["certificate"] == "≤0"
    code, out = _run(tmp_path, "n3", "norm-table", "--system", "dg", "--p", "5", "--mu", "0", "--nu", "0", "--tau", "1e-2")
    assert sig_digits_match(float(_rows(out)[0]["value"]), "2.45E-09", 2)


def test_norm_table_parallel_matches_serial(tmp_path):
    args = ["norm-table", "--p", "1", "--tau", "1/100"]
    _, a = _run(tmp_path, "serial", *args)
    _, b = _run(tmp_path, "parallel", *args, "--jobs", "2")
    assert a.read_bytes() == b.read_bytes()


def test_accuracy_ode(tmp_path):
    code, out = _run(tmp_path, "acc", "accuracy", "--p", "2")
    rows = _rows(out)
    assert code == 0 and len(rows) == 5
    assert abs(float(rows[-1]["l2_order"]) - 2.01) <= 0.1


def test_accuracy_advection_single_mesh(tmp_path):
    code, out = _run(tmp_path, "adv", "accuracy", "--system", "advection", "--p", "2", "--k", "1", "--mu", "1", "--nu", "-1", "--n-cells", "20")
    rows = _rows(out)
    assert code == 0 and len(rows) == 1 and rows[0]["l2_order"] == "-"


def test_energy_growth_and_decay(tmp_path):
    code, out = _run(tmp_path, "plain", "energy", "--p", "1", "--k", "1", "--T", "2")
    assert code == 0
    plain = [float(r["norm_change"]) for r in _rows(out)]
    assert plain[-1] > 0
    assert (tmp_path / "plain_profile.csv").exists()
    code, out = _run(tmp_path, "filt", "energy", "--p", "1", "--k", "1", "--T", "2", "--nu", "-1.01/2", "--mode", "filtered")
    filt = [float(r["norm_change"]) for r in _rows(out)]
    assert all(b <= a + 1e-15 for a, b in zip(filt, filt[1:]))


def test_discontinuous_overshoot(tmp_path):
    code, out = _run(tmp_path, "disc", "discontinuous", "--T", "1")
    assert code == 0
    rows = _rows(out)
    assert set(rows[0]) == {"x", "plain", "modified", "filtered"}
    summary = {r["mode"]: r for r in _rows(tmp_path / "disc_summary.csv")}
    assert float(summary["filtered"]["overshoot"]) <= float(summary["plain"]["overshoot"])


def test_burgers_outputs(tmp_path):
    code, out = _run(tmp_path, "b", "burgers", "--p", "2", "--n-cells", "20", "--T", "0.2")
    assert code == 0
    assert set(_rows(out)[0]) == {"x", "u", "exact"}
    assert _rows(tmp_path / "b_report.csv")[0].keys() >= {"step", "nu", "guarantee_held"}
    norms = [float(r["norm_change"]) for r in _rows(tmp_path / "b_norms.csv")]
    assert max(norms) <= 1e-12


def test_byte_determinism(tmp_path):
    _, a = _run(tmp_path, "a", "accuracy", "--p", "3", "--mu", "1", "--nu", "0")
    _, b = _run(tmp_path, "b", "accuracy", "--p", "3", "--mu", "1", "--nu", "0")
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["norm-table", "--mu", "1/0"],
        ["norm-table", "--alpha", "2"],
        ["norm-table", "--mode", "adaptive"],
        ["burgers", "--ic", "nope"],
        ["burgers", "--mode", "filtered"],
        ["norm-table", "--mu", "1"],
        ["energy", "--T", "-1"],
        ["critical-table", "--bogus"],
    ],
)
def test_config_errors_exit_2(argv, capsys):
    assert main(argv) == 2


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_numerical_failure_exit_3(tmp_path):
    code, _ = _run(tmp_path, "blow", "accuracy", "--p", "1", "--mu", "0", "--nu", "0", "--mode", "plain", "--tau", "1e100", "--T", "1e103")
    assert code == 3


def test_config_file_and_override(tmp_path):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps({"p": 4, "mu": "1/144", "nu": "1/144", "tau": "1/100", "mode": "modified"}))
    code, out = _run(tmp_path, "f", "norm-table", "--config", str(cfg_path))
    rows = _rows(out)
    assert code == 0 and len(rows) == 1 and rows[0]["mu"] == "1/144"
    code, out = _run(tmp_path, "g", "norm-table", "--config", str(cfg_path), "--nu", "0")
    assert _rows(out)[0]["nu"] == "0/1"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"p": 1, "colour": "red"}))
    assert main(["norm-table", "--config", str(bad)]) == 2


def test_load_config_precedence():
    cfg = load_config("accuracy", {"p": 2, "mode": "filtered"}, {"p": 3, "mode": None})
    assert cfg.p == 3 and cfg.mode == "filtered"
    with pytest.raises(ConfigError):
        load_config("accuracy", {"experiment": "energy"}, {})
    with pytest.raises(ConfigError):
        ExperimentConfig("nope")
    assert ExperimentConfig("burgers", mode="A").mode == "adaptive"
