import json

import pytest

from vmolab.cli import SCHEMA_VERSION, list_text, main, run_spec, validate_spec
from vmolab.errors import SchemaError


def _write(tmp_path, spec, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(spec))
    return str(p)


def _spec(**kw):
    base = {"schema": SCHEMA_VERSION, "id": "t"}
    base.update(kw)
    return base


def test_bmo_constant_exit_zero(tmp_path):
    spec = _spec(kind="bmo", symbol={"id": "constant", "params": [2.0]},
                 grid={"lo": [-1], "hi": [1], "N": 128},
                 assertions=[{"path": "value", "op": "==", "value": 0}])
    out = tmp_path / "out"
    assert main(["run", _write(tmp_path, spec), "--out", str(out)]) == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["results"]["value"] == 0.0 and summary["passed"]
    assert summary["checks"][0]["provenance"] == "user"


def test_identity_check(tmp_path):
    spec = _spec(kind="identity-check", grid={"lo": [-1], "hi": [1], "N": 256},
                 params={"identity": "reflection", "trials": 3},
                 assertions=[{"path": "max_err", "op": "<=", "value": 1e-12}])
    assert main(["run", _write(tmp_path, spec), "--out", str(tmp_path / "o")]) == 0


def test_failed_assertion_exit_one(tmp_path):
    spec = _spec(kind="bmo", symbol={"id": "heaviside-sign"},
                 grid={"lo": [-1], "hi": [1], "N": 64},
                 assertions=[{"path": "value", "op": "<=", "value": 0.5}])
    assert main(["run", _write(tmp_path, spec), "--out", str(tmp_path / "o")]) == 1


@pytest.mark.parametrize("bad", [
    {"schema": SCHEMA_VERSION, "id": "x", "kind": "nope"},
    {"schema": "other", "id": "x", "kind": "bmo"},
    {"schema": SCHEMA_VERSION, "id": "x", "kind": "bmo", "grid": {"lo": [0], "hi": [1], "N": 4}},
    {"schema": SCHEMA_VERSION, "id": "x", "kind": "bmo", "symbol": {"id": "custom-closure"},
     "grid": {"lo": [0], "hi": [1], "N": 4}},
])
def test_schema_errors(tmp_path, bad):
    assert main(["run", _write(tmp_path, bad), "--out", str(tmp_path / "o")]) == 2
    with pytest.raises(SchemaError):
        validate_spec(bad)


def test_malformed_json(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert main(["run", str(p)]) == 2


def test_resource_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("VMOLAB_MAX_CELLS", "100")
    spec = _spec(kind="bmo", symbol={"id": "constant"}, grid={"lo": [-1], "hi": [1], "N": 128})
    assert main(["run", _write(tmp_path, spec), "--out", str(tmp_path / "o")]) == 3


def test_matrix_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("VMOLAB_MAX_MATRIX", "64")
    spec = _spec(kind="commutator-norm", symbol={"id": "gaussian"},
                 grid={"lo": [-1], "hi": [1], "N": 128})
    assert main(["run", _write(tmp_path, spec), "--out", str(tmp_path / "o")]) == 3


def test_numeric_error(tmp_path):
    # cell centres 0, 0.5, ..., so log|x| hits -inf
    spec = _spec(kind="bmo", symbol={"id": "log-abs"}, grid={"lo": [-0.25], "hi": [2.75], "N": 6})
    assert main(["run", _write(tmp_path, spec), "--out", str(tmp_path / "o")]) == 4


def test_unknown_reproduce_id(capsys):
    assert main(["reproduce", "nope"]) == 2


def test_reproduce_log_osc(tmp_path):
    out = tmp_path / "r"
    assert main(["reproduce", "log-osc-n1", "--out", str(out), "--threads", "1"]) == 0
    s = json.loads((out / "summary.json").read_text())
    checks = s["results"]["checks"]
    assert any("2/e" in c["name"] for c in checks)
    assert all(c["provenance"] in {"stated", "derived", "identity", "calibrated"} for c in checks)


def test_run_is_deterministic(tmp_path):
    spec = _spec(kind="gamma", symbol={"id": "log-abs"}, grid={"lo": [-4], "hi": [4], "N": 512},
                 operator={"mode": "neumann-full"}, family={"levels": 6, "shifts": 2})
    p = _write(tmp_path, spec)
    main(["run", p, "--out", str(tmp_path / "a")])
    main(["run", p, "--out", str(tmp_path / "b")])
    a, b = (tmp_path / "a" / "summary.json").read_bytes(), (tmp_path / "b" / "summary.json").read_bytes()
    assert a == b
    assert (tmp_path / "a" / "gamma1.csv").exists() and (tmp_path / "a" / "plot.py").exists()


@pytest.mark.parametrize("kind,extra,path", [
    ("heat-check", {"operator": {"mode": "neumann-plus", "t": 0.01, "s": 0.01},
                    "grid": {"lo": [0], "hi": [2], "N": 512}}, "semigroup_rel_err"),
    ("commutator-norm", {"symbol": {"id": "gaussian"}, "grid": {"lo": [-4], "hi": [4], "N": 128},
                         "family": {"levels": 5}}, "comm_l2"),
    ("compactness", {"symbol": {"id": "gaussian"}, "grid": {"lo": [-4], "hi": [4], "N": [64, 128]},
                     "operator": {"kernel": "frac-neumann", "alpha": 0.5}}, "ratio"),
    ("approximation", {"symbol": {"id": "gaussian"}, "grid": {"lo": [-16], "hi": [16], "N": 2048},
                       "params": {"j": [2, 4]}, "family": {"levels": 8}}, "rows"),
    ("witness", {"symbol": {"id": "log-abs"}, "grid": {"lo": [-4], "hi": [4], "N": 256},
                 "params": {"center": [0.5], "side": 1.0}}, "pairing"),
])
def test_other_kinds(kind, extra, path):
    summary, _, _ = run_spec(validate_spec(_spec(kind=kind, **extra)))
    assert path in summary["results"]
    if kind == "witness":
        r = summary["results"]
        assert r["pairing"] == pytest.approx(r["expected"], rel=1e-6)
        assert abs(r["mean"]) <= 1e-12


def test_list_contents():
    text = list_text()
    assert "psi-ell" in text and "thm36-example" in text and "compactness-dichotomy" in text
    assert text == list_text()
    sym = [line.split()[0] for line in text.split("symbols:\n")[1].split("kernels:")[0].splitlines()]
    assert sym == sorted(sym)


def test_list_exit(capsys):
    assert main(["list"]) == 0
    assert "reproduce-all" in capsys.readouterr().out
