"""Command line runner: ``vmolab run spec.json``, ``vmolab reproduce <id>``, ``vmolab list``.

Exit codes: 0 pass, 1 failed assertion, 2 schema error, 3 resource cap,
4 numeric error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import math
import os
import signal
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import constructions as C
from .errors import NumericError, PreconditionError, ResourceCap, SchemaError, UnknownId
from .experiments import REGISTRY, _clean, check, experiment_ids, run_experiment
from .funcspace import (CATALOGUE, Grid, GridFunction, SymbolSpec, maximal_function, restrict,
                        sample)
from .geometry import Box, Cube, cube_family
from .heat import (HeatOperator, check_reflection_identity, check_semigroup_property,
                   check_smoothness_bound, check_splitting_identity, kernel_mass)
from .oscillation import bmo_L_norm, bmo_norm, gamma_curve, vmo_diagnostic
from .singular import _KINDS, KernelSpec, assemble, check_restriction_identity, commutator_matrix
from .spectra import compactness_growth, l2_norm, lp_lower_bound

SCHEMA_VERSION = "vmolab/experiment-1"
KINDS = ("bmo", "gamma", "heat-check", "identity-check", "commutator-norm", "compactness",
         "approximation", "witness", "reproduce-all")
EXIT = {"pass": 0, "fail": 1, "schema": 2, "cap": 3, "numeric": 4}

_point = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 3}
_symbol = {
    "type": "object",
    "properties": {"id": {"enum": sorted(k for k in CATALOGUE if k != "custom-closure")},
                   "params": {"type": "array", "items": {"type": "number"}}},
    "required": ["id"], "additionalProperties": False,
}
SCHEMA = {
    "type": "object",
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "id": {"type": "string", "minLength": 1},
        "kind": {"enum": list(KINDS)},
        "symbol": {"oneOf": [_symbol, {"type": "null"}]},
        "grid": {
            "type": "object",
            "properties": {"lo": _point, "hi": _point,
                           "N": {"oneOf": [{"type": "integer", "minimum": 1},
                                           {"type": "array", "items": {"type": "integer",
                                                                       "minimum": 1}}]}},
            "required": ["lo", "hi", "N"], "additionalProperties": False,
        },
        "operator": {
            "type": "object",
            "properties": {
                "mode": {"type": "string"},
                "kernel": {"enum": list(_KINDS)},
                "j": {"type": "integer", "minimum": 1},
                "alpha": {"type": "number", "exclusiveMinimum": 0},
                "t": {"type": "number", "exclusiveMinimum": 0},
                "s": {"type": "number", "exclusiveMinimum": 0},
                "p": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "family": {
            "type": "object",
            "properties": {
                "levels": {"type": "integer", "minimum": 1},
                "shifts": {"type": "integer", "minimum": 1},
                "n_random": {"type": "integer", "minimum": 0},
                "lattice_levels": {"type": "integer", "minimum": 1},
                "random_levels": {"type": "integer", "minimum": 1},
                "skip_truncated": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "params": {"type": "object"},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "experiment": {"type": "string"},
        "assertions": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {"name": {"type": "string"}, "path": {"type": "string"},
                               "op": {"enum": ["<=", ">=", "==", "in"]},
                               "value": {}, "provenance": {"type": "string"}},
                "required": ["path", "op", "value"], "additionalProperties": False,
            },
        },
        "outputs": {
            "type": "object",
            "properties": {"csv": {"type": "boolean"}, "plot_script": {"type": "boolean"}},
            "additionalProperties": False,
        },
    },
    "required": ["schema", "id", "kind"],
    "additionalProperties": False,
}


# ------------------------------------------------------------------ caps

def max_cells() -> int:
    return int(os.environ.get("VMOLAB_MAX_CELLS", 2 ** 24))


def wall_budget() -> float:
    return float(os.environ.get("VMOLAB_WALL_BUDGET", 1800))


@contextlib.contextmanager
def _budget(seconds: float):
    if seconds <= 0 or not hasattr(signal, "SIGALRM"):
        yield
        return

    def _hit(signum, frame):
        raise ResourceCap(f"wall budget of {seconds:g} s exceeded")

    old = signal.signal(signal.SIGALRM, _hit)
    signal.setitimer(signal.ITIMER_REAL, seconds)
    try:
        yield
    finally:
        signal.setitimer(signal.ITIMER_REAL, 0)
        signal.signal(signal.SIGALRM, old)


# ------------------------------------------------------------- spec parsing

def validate_spec(spec: dict) -> dict:
    try:
        jsonschema.validate(spec, SCHEMA)
    except jsonschema.ValidationError as e:
        raise SchemaError(f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}") from None
    kind = spec["kind"]
    needs_grid = kind not in ("reproduce-all", "heat-check")
    if needs_grid and "grid" not in spec:
        raise SchemaError(f"kind {kind!r} needs a grid")
    if kind in ("bmo", "gamma", "approximation", "witness", "commutator-norm") \
            and not spec.get("symbol"):
        raise SchemaError(f"kind {kind!r} needs a symbol")
    if "grid" in spec:
        g = spec["grid"]
        if len(g["lo"]) != len(g["hi"]):
            raise SchemaError("grid lo and hi differ in length")
    return spec


def load_spec(path) -> dict:
    try:
        with open(path) as fh:
            spec = json.load(fh)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    return validate_spec(spec)


def _symbol(spec):
    s = spec.get("symbol")
    if not s:
        return None
    try:
        return SymbolSpec(s["id"], tuple(s.get("params", ())))
    except PreconditionError as e:
        raise SchemaError(str(e)) from None


def _box_N(spec):
    g = spec["grid"]
    box = Box(tuple(g["lo"]), tuple(g["hi"]))
    N = g["N"]
    Ns = N if isinstance(N, list) else [N]
    for n in Ns:
        cells = n ** box.n if not isinstance(N, list) or len(N) != box.n else math.prod(N)
        if cells > max_cells():
            raise ResourceCap(f"{cells} cells exceed the cap {max_cells()} (VMOLAB_MAX_CELLS)")
    return box, N


def _family(spec, box):
    fp = dict(spec.get("family", {}))
    fp.pop("skip_truncated", None)
    return cube_family(box, fp.pop("levels", 6), seed=spec.get("seed", 0), **fp)


def _kernel(spec):
    op = spec.get("operator", {})
    kind = op.get("kernel", "riesz-neumann")
    return KernelSpec(kind, op.get("j", 1), op.get("alpha"))


# ------------------------------------------------------------ kind handlers

def _run_bmo(spec, out):
    box, N = _box_N(spec)
    f = sample(_symbol(spec), box, N)
    fam = _family(spec, box)
    op = spec.get("operator", {})
    mode, p = op.get("mode", "classical"), op.get("p", 1)
    skip = spec.get("family", {}).get("skip_truncated", True)
    rep = bmo_norm(f, fam, p) if mode == "classical" else bmo_L_norm(f, mode, fam, p, skip)
    out["csv"]["bmo.csv"] = rep.to_csv
    return rep.to_json()


def _run_gamma(spec, out):
    box, N = _box_N(spec)
    f = sample(_symbol(spec), box, N)
    fam = _family(spec, box)
    op = spec.get("operator", {})
    mode, p = op.get("mode", "classical"), op.get("p", 2)
    skip = spec.get("family", {}).get("skip_truncated", True)
    r_grid = spec.get("params", {}).get("r_grid") or sorted(set(fam.sides.tolist()))
    res = {"diagnostic": vmo_diagnostic(f, mode, fam, spec.get("params", {}).get("thresholds"),
                                        p, skip)}
    for which in ("gamma1", "gamma2", "gamma3"):
        c = gamma_curve(f, which, mode, fam, r_grid, p, skip)
        res[which] = c.to_json()
        out["csv"][f"{which}.csv"] = c.to_csv
    out["plot"] = ("gamma1.csv", "gamma2.csv", "gamma3.csv")
    return res


def _run_heat_check(spec, out):
    op = spec.get("operator", {})
    mode = HeatOperator(op.get("mode", "neumann-plus"))
    t, s = op.get("t", 0.01), op.get("s", 0.01)
    prm = spec.get("params", {})
    g = spec.get("grid", {"lo": [0.0] if mode.is_half else [-2.0], "hi": [2.0], "N": 512})
    box = Box(tuple(g["lo"]), tuple(g["hi"]))
    x = tuple(prm.get("x", [0.3] if box.lo[-1] >= 0 else [-0.3]))
    x = x if len(x) == box.n else x * box.n
    y = tuple(prm.get("y", x))
    grid = Grid(box, g["N"])
    res = {"mass_err": abs(kernel_mass(mode, t, x, grid) - 1),
           "semigroup_rel_err": check_semigroup_property(mode, t, s, x, y, box, g["N"])}
    if box.n == 1 and box.lo[-1] >= 0:
        rng = np.random.default_rng(spec.get("seed", 0))
        m = int(prm.get("triples", 1000))
        a = rng.uniform(box.lo[0], box.hi[0], (2, m))
        xp = a[0] + rng.uniform(-0.5, 0.5, m) * np.abs(a[0] - a[1])
        res["smoothness_constant"] = check_smoothness_bound(
            mode, t, np.stack([a[0], np.clip(xp, box.lo[0], None), a[1]], axis=1))
    return res


def _run_identity(spec, out):
    box, N = _box_N(spec)
    prm = spec.get("params", {})
    which = prm.get("identity", "reflection")
    t = spec.get("operator", {}).get("t", 1e-4)
    rng = np.random.default_rng(spec.get("seed", 0))
    grid = Grid(box, N)
    grid.require_symmetric()
    trials = int(prm.get("trials", 5))
    sym = _symbol(spec)

    def rand():
        return GridFunction(grid, rng.standard_normal(grid.shape))

    err = 0.0
    if which == "restriction":
        j = spec.get("operator", {}).get("j", 1)
        An, Af = assemble(KernelSpec("riesz-neumann", j), grid), assemble(KernelSpec("riesz", j), grid)
        for _ in range(trials):
            b = sample(sym, box, N) if sym else rand()
            err = max(err, check_restriction_identity(b, j, rand(), An, Af))
    elif which in ("reflection", "splitting"):
        for _ in range(trials):
            f = sample(sym, box, N) if sym else rand()
            if which == "splitting":
                err = max(err, check_splitting_identity(t, f))
            else:
                err = max(err, max(check_reflection_identity(t, restrict(f, "+"))))
    else:
        raise SchemaError(f"unknown identity {which!r}")
    return {"identity": which, "max_err": err, "trials": trials}


def _run_commutator(spec, out):
    box, N = _box_N(spec)
    b = sample(_symbol(spec), box, N)
    A = assemble(_kernel(spec), Grid(box, N))
    res = {"comm_l2": l2_norm(commutator_matrix(b, A)), "kernel": _kernel(spec).to_json()}
    if "family" in spec:
        fam = _family(spec, box)
        res["bmo_neumann"] = bmo_L_norm(b, "neumann-full", fam, skip_truncated=True).value
    return res


def _run_compactness(spec, out):
    box, N = _box_N(spec)
    grids = N if isinstance(N, list) else [N, 2 * N]
    eps = spec.get("params", {}).get("eps", [1e-1, 1e-2, 1e-3])
    r = compactness_growth(_kernel(spec), _symbol(spec), box, grids, eps)
    r["ratio"] = {repr(k): v for k, v in r["ratio"].items()}
    r["ranks"] = [{repr(k): v for k, v in d.items()} for d in r["ranks"]]
    return r


def _run_approximation(spec, out):
    box, N = _box_N(spec)
    f = sample(_symbol(spec), box, N)
    prm = spec.get("params", {})
    P = C.ApproxParams(tuple(prm.get("x0", [0.0] * box.n)), prm.get("S", 2.0 ** -4))
    fam = _family(spec, box)
    M = maximal_function(f).values
    nf = bmo_norm(f, fam).value
    inner = np.all(np.abs(f.grid.points() - np.asarray(P.x0)) < P.S, axis=1).reshape(f.grid.shape)
    rows = {}
    for j in prm.get("j", [4, 8, 16]):
        fj = C.bmo_approximation(f, j, P)
        rows[f"j={j}"] = {"max_excess_over_M": float(np.max(np.abs(fj.values) - M)),
                          "bmo": bmo_norm(fj, fam).value,
                          "inner_err": float(np.max(np.abs(fj.values - f.values)[inner]))}
    return {"bmo_f": nf, "rows": rows}


def _run_witness(spec, out):
    box, N = _box_N(spec)
    b = sample(_symbol(spec), box, N)
    prm = spec.get("params", {})
    Q = Cube(tuple(prm.get("center", [0.0] * box.n)), prm.get("side", 1.0))
    p = spec.get("operator", {}).get("p", 2)
    g = C.oscillation_witness(b, Q, p)
    w = b.grid.cell_volume
    sl = b.grid.index_range(Q.lo, Q.hi)
    bv = b.values[sl]
    vol = bv.size * w
    mo = float(np.mean(np.abs(bv - bv.mean())))
    res = {"pairing": float(np.sum(b.values * g.values) * w),
           "expected": vol ** (1 - 1 / p) * mo, "mean_osc": mo,
           "mean": float(np.sum(g.values) * w),
           "g_lp": float((np.sum(np.abs(g.values) ** p) * w) ** (1 / p))}
    if "kernel" in spec.get("operator", {}):
        A = assemble(_kernel(spec), b.grid)
        q = prm.get("q", p)
        res["commutator_lower_bound"] = lp_lower_bound(commutator_matrix(b, A), p, q, [g], w)
    return res


HANDLERS = {"bmo": _run_bmo, "gamma": _run_gamma, "heat-check": _run_heat_check,
            "identity-check": _run_identity, "commutator-norm": _run_commutator,
            "compactness": _run_compactness, "approximation": _run_approximation,
            "witness": _run_witness}


def _lookup(res, path):
    cur = res
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict) and part in cur:
            cur = cur[part]
        else:
            raise SchemaError(f"assertion path {path!r} not found in results")
    return cur


def run_spec(spec: dict, seed=None) -> tuple:
    """Run a validated spec. Returns (summary, csv writers, plot csv names)."""
    spec = dict(spec)
    if seed is not None:
        spec["seed"] = seed
    out = {"csv": {}, "plot": ()}
    if spec["kind"] == "reproduce-all":
        res = run_experiment(spec.get("experiment", "reproduce-all"), spec.get("seed", 0))
        checks = []
    else:
        res = _clean(HANDLERS[spec["kind"]](spec, out))
        checks = []
    for a in spec.get("assertions", []):
        checks.append(check(a.get("name", a["path"]), _lookup(res, a["path"]), a["op"],
                            a["value"], a.get("provenance", "user")))
    passed = all(c["passed"] for c in checks) and res.get("passed", True) is not False
    summary = _clean({"id": spec["id"], "kind": spec["kind"], "schema": SCHEMA_VERSION,
                      "version": __version__, "seed": spec.get("seed", 0),
                      "grid": spec.get("grid"), "operator": spec.get("operator"),
                      "family": spec.get("family"), "symbol": spec.get("symbol"),
                      "results": res, "checks": checks, "passed": passed})
    return summary, out["csv"], out["plot"]


# ------------------------------------------------------------------ output

PLOT_TEMPLATE = """# Plot the CSV curves written next to this file (not run by vmolab).
import csv
import sys

import matplotlib.pyplot as plt

for name in {names!r}:
    with open(name) as fh:
        rows = list(csv.reader(fh))
    xs = [float(r[0]) for r in rows[1:] if r[1] not in ("", "nan")]
    ys = [float(r[1]) for r in rows[1:] if r[1] not in ("", "nan")]
    plt.loglog(xs, ys, marker="o", label=name)
plt.xlabel(rows[0][0])
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "plot.png")
"""


def dumps(summary: dict) -> str:
    return json.dumps(summary, sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_bundle(summary, csvs, plot, out_dir, outputs=None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.json").write_text(dumps(summary))
    outputs = outputs or {}
    if outputs.get("csv", True):
        for name, writer in csvs.items():
            writer(out / name)
        checks = summary.get("checks", [])
        if checks:
            with open(out / "checks.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["name", "value", "op", "threshold", "provenance", "passed"])
                for c in checks:
                    w.writerow([c["name"], json.dumps(c["value"]), c["op"],
                                json.dumps(c["threshold"]), c["provenance"], c["passed"]])
    if plot and outputs.get("plot_script", True):
        (out / "plot.py").write_text(PLOT_TEMPLATE.format(names=list(plot)))
    return out


def _flatten_checks(summary):
    if "parts" in summary:
        for part in summary["parts"].values():
            yield from part["checks"]
    yield from summary.get("checks", [])
    res = summary.get("results")
    if isinstance(res, dict):
        yield from _flatten_checks(res) if "parts" in res or "experiment" in res else ()


def list_text() -> str:
    lines = ["symbols:"]
    for k in sorted(CATALOGUE):
        lines.append(f"  {k:16s} {CATALOGUE[k].doc}")
    lines.append("kernels:")
    for k in sorted(_KINDS):
        lines.append(f"  {k}")
    lines.append("heat operators:")
    for op in sorted(o.value for o in HeatOperator):
        lines.append(f"  {op}")
    lines.append("experiments:")
    for k in experiment_ids():
        lines.append(f"  {k:24s} {REGISTRY[k].summary if k in REGISTRY else 'every experiment above'}")
    lines.append("spec kinds:")
    for k in KINDS:
        lines.append(f"  {k}")
    return "\n".join(lines) + "\n"


def _parser():
    ap = argparse.ArgumentParser(prog="vmolab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("run", "reproduce"):
        p = sub.add_parser(name)
        p.add_argument("target", help="spec.json" if name == "run" else "experiment id")
        p.add_argument("--out", default=None, help="output directory for the report bundle")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
    sub.add_parser("list")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.cmd == "list":
        sys.stdout.write(list_text())
        return EXIT["pass"]
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return EXIT["schema"]
    limits = contextlib.nullcontext()
    if args.threads:
        from threadpoolctl import threadpool_limits
        limits = threadpool_limits(limits=args.threads)
    try:
        with limits, _budget(wall_budget()):
            if args.cmd == "run":
                spec = load_spec(args.target)
                summary, csvs, plot = run_spec(spec, args.seed)
                outputs = spec.get("outputs")
                default_out = f"vmolab-out/{spec['id']}"
            else:
                if args.target not in experiment_ids():
                    raise UnknownId(args.target)
                spec = {"schema": SCHEMA_VERSION, "id": args.target, "kind": "reproduce-all",
                        "experiment": args.target}
                summary, csvs, plot = run_spec(spec, args.seed)
                outputs = None
                default_out = f"vmolab-out/{args.target}"
    except UnknownId as e:
        print(f"error: unknown id {e}", file=sys.stderr)
        return EXIT["schema"]
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT["schema"]
    except ResourceCap as e:
        print(f"resource cap: {e}", file=sys.stderr)
        return EXIT["cap"]
    except (NumericError, FloatingPointError, OverflowError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT["numeric"]
    except PreconditionError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT["schema"]
    out = write_bundle(summary, csvs, plot, args.out or default_out, outputs)
    for c in _flatten_checks(summary):
        print(f"{'PASS' if c['passed'] else 'FAIL'}  {c['name']}: {c['value']} {c['op']} "
              f"{c['threshold']} [{c['provenance']}]")
    print(f"{'PASS' if summary['passed'] else 'FAIL'} {summary['id']} -> {out / 'summary.json'}")
    return EXIT["pass"] if summary["passed"] else EXIT["fail"]


if __name__ == "__main__":
    sys.exit(main())
