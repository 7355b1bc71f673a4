"""Frozen acceptance experiments.

Every experiment returns a JSON-ready dict: its parameters, results and a
list of checks. Each check names its threshold's provenance: ``stated``
for values stated by the theory, ``identity`` for exact discrete
algebra, ``calibrated`` for thresholds frozen after an oracle run, and
``derived`` for closed-form oracles computed here.
Wall-clock time never enters the summary, so reruns are byte-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import constructions as C
from .funcspace import (Grid, GridFunction, SymbolSpec, maximal_function, mean,
                        minus_even, plus_even, restrict, sample)
from .geometry import Ball, Box, CubeFamily, cube_family
from .heat import (HeatOperator, check_reflection_identity, check_semigroup_property,
                   check_smoothness_bound, check_splitting_identity, kernel_mass,
                   semigroup_apply)
from .oscillation import bmo_L_norm, bmo_norm, mean_osc, vmo_diagnostic
from .singular import KernelSpec, assemble, check_restriction_identity
from .spectra import compactness_growth, correlation_experiment

__all__ = ["REGISTRY", "check", "run_experiment", "experiment_ids"]

_OPS = {
    "<=": lambda v, t: v <= t,
    ">=": lambda v, t: v >= t,
    "==": lambda v, t: v == t,
    "in": lambda v, t: t[0] <= v <= t[1],
}


def _clean(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return None if math.isnan(v) else v
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    return v


def check(name: str, value, op: str, threshold, provenance: str) -> dict:
    ok = value is not None and not (isinstance(value, float) and math.isnan(value)) \
        and bool(_OPS[op](value, threshold))
    return {"name": name, "value": _clean(value), "op": op, "threshold": _clean(threshold),
            "provenance": provenance, "passed": ok}


def _bundle(eid: str, params: dict, results: dict, checks: list) -> dict:
    return _clean({"experiment": eid, "params": params, "results": results, "checks": checks,
                   "passed": all(c["passed"] for c in checks)})


# -------------------------------------------------------------- 1: log|x|

def log_osc_n1(seed: int = 0) -> dict:
    N, box = 8192, Box((-1.0,), (1.0,))
    f = sample(SymbolSpec("neg-log-abs"), box, N)
    target = 2.0 / math.e
    res, checks = {}, []
    for d in (0.1, 0.5):
        v = mean_osc(f, Ball((0.0,), d), 1)
        avg = mean(f, Ball((0.0,), d))
        res[f"delta={d}"] = {"mean_osc": v, "ball_mean": avg,
                             "ball_mean_closed_form": math.log(1 / d) + 1}
        checks.append(check(f"mean_osc(B_{d}) / (2/e) - 1", abs(v / target - 1), "<=", 0.01,
                            "stated"))
    a, b = res["delta=0.1"]["mean_osc"], res["delta=0.5"]["mean_osc"]
    checks.append(check("delta independence |v(0.1) - v(0.5)| / v(0.5)", abs(a - b) / b, "<=",
                        0.01, "stated"))
    checks.append(check("ball mean at delta=0.5 vs log(1/delta) + 1",
                        abs(res["delta=0.5"]["ball_mean"] - (math.log(2) + 1)), "<=", 1e-3,
                        "derived"))
    return _bundle("log-osc-n1", {"N": N, "box": [box.lo, box.hi], "p": 1}, res, checks)


def log_osc_n2(seed: int = 0) -> dict:
    N, box, d = 1024, Box((-1.0, -1.0), (1.0, 1.0)), 0.5
    f = sample(SymbolSpec("neg-log-abs"), box, N)
    v = mean_osc(f, Ball((0.0, 0.0), d), 1)
    avg = mean(f, Ball((0.0, 0.0), d))
    n = 2
    res = {"mean_osc": v, "candidates": {"2/(n e)": 2 / (n * math.e),
                                         "2 n e^-n": 2 * n * math.exp(-n)},
           "ball_mean": avg,
           "ball_mean_candidates": {"log(1/delta) + 1/n": math.log(1 / d) + 1 / n,
                                    "log(1/delta) + n": math.log(1 / d) + n},
           "note": "reported only; the two closed forms disagree for n >= 2"}
    return _bundle("log-osc-n2", {"N": N, "box": [box.lo, box.hi], "delta": d, "p": 1}, res, [])


# ------------------------------------------------------------- 2: psi_ell

def psi_ell_bound(seed: int = 0) -> dict:
    res, checks = {}, []
    for ell in (4, 8, 16):
        half = 2.0 ** ell
        box = Box((-half,), (half,))
        f = sample(C.psi_ell(C.PlateauSpec(ell)), box, int(2 * half * 64))
        fam = cube_family(box, ell + 6, shifts=2, n_random=20000, seed=seed,
                          lattice_levels=min(ell + 6, 14), random_levels=10)
        rep = bmo_norm(f, fam)
        sides = fam.sides
        res[f"ell={ell}"] = {"bmo": rep.value, "argmax": rep.to_json()["argmax_cube"],
                             "family_size": len(fam), "evaluated": rep.evaluated,
                             "min_side": float(sides.min()), "max_side": float(sides.max())}
        checks.append(check(f"bmo(psi_{ell}) <= 16/l", rep.value, "<=", 16 / ell, "stated"))
        checks.append(check(f"bmo(psi_{ell}) >= 0.5/l", rep.value, ">=", 0.5 / ell, "calibrated"))
        checks.append(check(f"family size (l={ell})", len(fam), ">=", 10_000, "stated"))
        checks.append(check(f"family reaches side 2^-4 (l={ell})", float(sides.min()), "<=",
                            2.0 ** -4, "stated"))
        checks.append(check(f"family reaches side 2^(l+1) (l={ell})", float(sides.max()), ">=",
                            2.0 ** (ell + 1), "stated"))
    return _bundle("psi-ell-bound", {"h": 2.0 ** -6, "shifts": 2, "n_random": 20000,
                                     "random_levels": 10, "seed": seed}, res, checks)


# ------------------------------------------------------------ 3: heat

def _random_grid_function(rng, grid, exterior_zero=False):
    return GridFunction(grid, rng.standard_normal(grid.shape), exterior_zero)


def heat_identities(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    res, checks = {}, []
    # (a) mass conservation: kernel quadrature and e^{-tL} 1 on the inner region
    # apply uses a shorter time so 6 sqrt(2t) fits inside the 0.5 padding
    t, t_apply = 0.01, 1e-3
    mass = {}
    for op, box, x in (("neumann-plus", Box((0.0,), (2.0,)), 0.3),
                       ("neumann-minus", Box((-2.0,), (0.0,)), -0.3),
                       ("neumann-full", Box((-2.0,), (2.0,)), 0.3)):
        g = Grid(box, 512 if op != "neumann-full" else 1024)
        err_k = abs(kernel_mass(op, t, (x,), g) - 1)
        one = sample(SymbolSpec("constant"), box, g.shape)
        u = semigroup_apply(op, t_apply, one, padding=0.5).values
        inner = np.abs(g.axis(0)) < 1.5
        err_a = float(np.max(np.abs(u[inner] - 1)))
        mass[op] = {"kernel_mass_err": err_k, "apply_err": err_a}
        checks.append(check(f"mass {op}: kernel quadrature", err_k, "<=", 1e-6, "stated"))
        checks.append(check(f"mass {op}: e^(-tL)1 on inner region", err_a, "<=", 1e-6, "stated"))
    res["mass"] = mass
    # (b) semigroup property
    sp = {
        "laplace": check_semigroup_property("laplace", 0.01, 0.01, (0.0,), (0.0,),
                                            Box((-2.0,), (2.0,)), 512),
        "neumann-plus": check_semigroup_property("neumann-plus", 0.01, 0.01, (0.3,), (0.3,),
                                                 Box((0.0,), (2.0,)), 512),
    }
    res["semigroup_rel_err"] = sp
    for k, v in sp.items():
        checks.append(check(f"semigroup property {k}", v, "<=", 1e-4, "derived"))
    # (c) discrete identities on symmetric grids
    worst = {"reflection": 0.0, "splitting": 0.0}
    for n, N in ((1, 512), (2, 64)):
        box = Box.symmetric((1.0,) * n)
        g = Grid(box, N)
        for _ in range(10):
            f = _random_grid_function(rng, g)
            worst["splitting"] = max(worst["splitting"],
                                     check_splitting_identity(1e-4, f))
            worst["reflection"] = max(worst["reflection"],
                                      max(check_reflection_identity(1e-4, restrict(f, "+"))))
    res["identity_max_err"] = worst
    for k, v in worst.items():
        checks.append(check(f"{k} identity (discrete)", v, "<=", 1e-12, "identity"))
    # (d) regularity constant, stable under doubling of the triple set
    def triples(m):
        x = rng.uniform(0.0, 2.0, m)
        y = rng.uniform(0.0, 2.0, m)
        frac = rng.uniform(0.0, 0.5, m)
        xp = np.clip(x + np.sign(rng.standard_normal(m)) * frac * np.abs(x - y), 0.0, None)
        return np.stack([x, xp, y], axis=1)
    t1 = triples(1000)
    c1 = check_smoothness_bound("neumann-plus", 0.01, t1)
    c2 = check_smoothness_bound("neumann-plus", 0.01, np.vstack([t1, triples(1000)]))
    res["smoothness_constant"] = {"C_1000": c1, "C_2000": c2}
    checks.append(check("smoothness constant finite", float(np.isfinite(c1) and np.isfinite(c2)),
                        "==", 1.0, "stated"))
    checks.append(check("smoothness constant ratio under doubling", c2 / c1, "in", [0.5, 2.0],
                        "derived"))
    return _bundle("heat-identities", {"t": t, "t_apply": t_apply, "seed": seed}, res, checks)


# ---------------------------------------------------------- 4: restriction

def restriction_identity(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    res, checks = {}, []
    for n, N in ((1, 512), (2, 64)):
        g = Grid(Box.symmetric((1.0,) * n), N)
        An = assemble(KernelSpec("riesz-neumann", 1), g)
        Af = assemble(KernelSpec("riesz", 1), g)
        err = 0.0
        for _ in range(20):
            b = _random_grid_function(rng, g)
            f = _random_grid_function(rng, g)
            err = max(err, check_restriction_identity(b, 1, f, An, Af))
        res[f"n={n}"] = {"N": N, "max_err": err}
        checks.append(check(f"restriction identity n={n}", err, "<=", 1e-12, "identity"))
    return _bundle("restriction-identity", {"pairs": 20, "j": 1, "seed": seed}, res, checks)


# ------------------------------------------------------ 5: norm equivalence

NORM_CATALOGUE = (
    SymbolSpec("gaussian", (1.0, 0.5)), SymbolSpec("gaussian", (1.0, 0.3)),
    SymbolSpec("sine-bump", (1.0, 2.0)), SymbolSpec("thm36-example"),
    SymbolSpec("log-abs"), SymbolSpec("psi-ell", (3, 1, 0.25)),
    SymbolSpec("coordinate"), SymbolSpec("thm36-g"),
)


def _label(s: SymbolSpec) -> str:
    return s.id + ("" if not s.params else str(list(s.params)))


def norm_equivalence(seed: int = 0) -> dict:
    res, checks = {}, []
    for n, box, grids, levels in ((1, Box((-4.0,), (4.0,)), (512, 1024), 8),
                                  (2, Box((-4.0, -4.0), (4.0, 4.0)), (64, 128), 6)):
        fam = cube_family(box, levels, shifts=2)
        rows = {}
        for s in NORM_CATALOGUE:
            ratios = []
            for N in grids:
                f = sample(s, box, N)
                a = bmo_L_norm(f, "neumann-full", fam, skip_truncated=True).value
                b = bmo_norm(plus_even(f), fam).value + bmo_norm(minus_even(f), fam).value
                ratios.append(a / b)
            change = abs(ratios[1] / ratios[0] - 1)
            rows[_label(s)] = {"ratio": ratios, "change": change}
            checks.append(check(f"n={n} {_label(s)} ratio", ratios[0], "in", [0.05, 20.0],
                                "calibrated"))
            checks.append(check(f"n={n} {_label(s)} ratio change under doubling", change, "<=",
                                0.25, "calibrated"))
        res[f"n={n}"] = {"grids": list(grids), "levels": levels, "rows": rows}
    return _bundle("norm-equivalence", {"shifts": 2}, res, checks)


# ---------------------------------------------------------- 6: correlation

CORRELATION_CATALOGUE = (
    ("gaussian 0.02", SymbolSpec("gaussian", (0.02, 0.5))),
    ("sine 0.05", SymbolSpec("sine-bump", (0.05, 3.0))),
    ("gaussian 0.1 wide", SymbolSpec("gaussian", (0.1, 2.0))),
    ("gaussian 0.3 narrow", SymbolSpec("gaussian", (0.3, 0.25))),
    ("log 0.2", SymbolSpec("log-abs", (0.2,))),
    ("thm36 f", SymbolSpec("thm36-example")),
    ("gaussian 1", SymbolSpec("gaussian", (1.0, 1.0))),
    ("sign", SymbolSpec("heaviside-sign")),
    ("log 1", SymbolSpec("log-abs", (1.0,))),
    ("gaussian 3", SymbolSpec("gaussian", (3.0, 0.5))),
    ("sine 2", SymbolSpec("sine-bump", (2.0, 6.0))),
)


def commutator_correlation(seed: int = 0) -> dict:
    box, N = Box((-4.0,), (4.0,)), 512
    spec = KernelSpec("riesz-neumann", 1)
    fam = cube_family(box, 8, shifts=2)
    labels = [k for k, _ in CORRELATION_CATALOGUE]
    syms = [s for _, s in CORRELATION_CATALOGUE]
    tab = correlation_experiment(syms, spec, box, N, fam, labels)
    bm = tab.column("bmo_neumann")
    pos = bm[bm > 1e-6]
    span = float(pos.max() / pos.min())
    # homogeneity under b -> 2b (exact: scaling by 2 commutes with rounding)
    from .spectra import l2_norm
    from .singular import commutator_matrix
    g = Grid(box, N)
    A = assemble(spec, g)
    b = sample(SymbolSpec("gaussian", (1.0, 1.0)), box, N)
    b2 = b * 2.0
    n1 = bmo_L_norm(b, "neumann-full", fam, skip_truncated=True).value
    n2 = bmo_L_norm(b2, "neumann-full", fam, skip_truncated=True).value
    c1, c2 = l2_norm(commutator_matrix(b, A)), l2_norm(commutator_matrix(b2, A))
    checks = [
        check("Spearman(bmo_N, ||[b, R_N1]||_2)", tab.spearman, ">=", 0.9, "calibrated"),
        check("symbols", len(syms), ">=", 8, "stated"),
        check("bmo_N span (max/min over nonzero)", span, ">=", 100.0, "stated"),
        check("homogeneity: bmo_N(2b) / bmo_N(b)", n2 / n1, "==", 2.0, "identity"),
        check("homogeneity: ||[2b,R]|| / ||[b,R]||", c2 / c1, "==", 2.0, "identity"),
    ]
    res = {"table": tab.to_json(), "span": span,
           "homogeneity": {"bmo": [n1, n2], "comm": [c1, c2]}}
    return _bundle("commutator-correlation", {"N": N, "box": [box.lo, box.hi],
                                              "kernel": spec.to_json()}, res, checks)


# ---------------------------------------------------------- 7: compactness

def compactness_dichotomy(seed: int = 0) -> dict:
    box = Box((-4.0,), (4.0,))
    grids = (512, 1024)
    res, checks = {}, []
    for spec in (KernelSpec("riesz-neumann", 1), KernelSpec("frac-neumann", alpha=0.5)):
        for label, b, op, thr in (("gaussian", SymbolSpec("gaussian", (1.0, 1.0)), "<=", 1.3),
                                  ("log-abs", SymbolSpec("log-abs"), ">=", 1.6)):
            r = compactness_growth(spec, b, box, grids)
            res[f"{spec.label()} {label}"] = r
            checks.append(check(f"{spec.label()} b={label}: growth at eps=1e-2",
                                r["ratio"][0.01], op, thr, "calibrated"))
    r = compactness_growth(KernelSpec("riesz-neumann", 1), None, box, grids)
    res["control riesz-neumann"] = r
    checks.append(check("control: uncommutated R_N growth at eps=1e-1", r["ratio"][0.1], ">=",
                        1.5, "calibrated"))
    return _bundle("compactness-dichotomy", {"box": [box.lo, box.hi], "grids": list(grids)},
                   res, checks)


# --------------------------------------------------------- 8: VMO separation

def vmo_separation(seed: int = 0) -> dict:
    res, checks = {}, []
    box = Box((-512.0,), (512.0,))
    f = sample(SymbolSpec("thm36-example"), box, 65536)
    fam = cube_family(box, 15, shifts=2)
    for mode in ("classical", "neumann-full"):
        res[f"thm36 {mode}"] = vmo_diagnostic(f, mode, fam)
    checks.append(check("thm36 classical gamma1 tail", res["thm36 classical"]["gamma1_tail"],
                        ">=", 0.5, "stated"))
    checks.append(check("thm36 classical verdict", res["thm36 classical"]["verdict"], "==",
                        False, "stated"))
    checks.append(check("thm36 neumann gamma1 tail", res["thm36 neumann-full"]["gamma1_tail"],
                        "<=", 0.05, "stated"))
    checks.append(check("thm36 neumann verdict", res["thm36 neumann-full"]["verdict"], "==",
                        True, "stated"))
    box = Box((-8.0,), (8.0,))
    g = sample(SymbolSpec("log-abs"), box, 4096)
    fam = cube_family(box, 12, shifts=2)
    for mode in ("classical", "neumann-full"):
        d = vmo_diagnostic(g, mode, fam)
        res[f"log {mode}"] = d
        checks.append(check(f"log|x| {mode} verdict", d["verdict"], "==", False, "stated"))
        checks.append(check(f"log|x| {mode} gamma1 tail", d["gamma1_tail"], ">=", 0.3, "stated"))
    return _bundle("vmo-separation", {"thm36_grid": [-512.0, 512.0, 65536],
                                      "log_grid": [-8.0, 8.0, 4096]}, res, checks)


# ----------------------------------------------------- 9: approximation

TRUNCATION_CATALOGUE = (
    SymbolSpec("gaussian", (2.0, 1.0)), SymbolSpec("gaussian", (3.0, 0.3)),
    SymbolSpec("log-abs"), SymbolSpec("neg-log-abs"), SymbolSpec("sine-bump", (2.0, 3.0)),
    SymbolSpec("thm36-example"), SymbolSpec("thm36-g"), SymbolSpec("heaviside-sign"),
    SymbolSpec("coordinate"), SymbolSpec("psi-ell", (3, 1, 0.5)),
)

PRODUCT_PAIRS = (
    (0, 4), (0, 6), (1, 9), (4, 5), (5, 7), (6, 8), (7, 9), (8, 1), (9, 4), (5, 6),
)

APPROX_CATALOGUE = (
    SymbolSpec("gaussian", (1.0, 1.0)), SymbolSpec("sine-bump", (1.0, 2.0)),
    SymbolSpec("thm36-g"), SymbolSpec("log-abs"), SymbolSpec("thm36-example"),
)


def approximation_suite(seed: int = 0) -> dict:
    res, checks = {}, []
    # truncation and product bounds on a moderate grid
    box = Box((-8.0,), (8.0,))
    fam = cube_family(box, 10, shifts=2)
    fs = [sample(s, box, 2048) for s in TRUNCATION_CATALOGUE]
    norms = [bmo_norm(f, fam).value for f in fs]
    trunc = {}
    for s, f, nf in zip(TRUNCATION_CATALOGUE, fs, norms):
        lhs = bmo_norm(C.truncate(f, 1.0), fam).value
        trunc[_label(s)] = {"lhs": lhs, "bmo_f": nf}
        checks.append(check(f"truncation {_label(s)}: bmo([f]_1) - 2 bmo(f)", lhs - 2 * nf,
                            "<=", 1e-3, "stated"))
    res["truncation"] = trunc
    prod = {}
    bounded = [i for i, s in enumerate(TRUNCATION_CATALOGUE)
               if s.id not in ("log-abs", "neg-log-abs")]
    for i, j in PRODUCT_PAIRS:
        if i not in bounded or j not in bounded:
            continue
        out = C.product_bound_check(fs[i], fs[j], fam)
        key = f"{_label(TRUNCATION_CATALOGUE[i])} * {_label(TRUNCATION_CATALOGUE[j])}"
        prod[key] = out
        checks.append(check(f"product {key}: lhs - (1.1 rhs + 1e-3)",
                            out["lhs"] - (1.1 * out["rhs"] + 1e-3), "<=", 0.0, "stated"))
        checks.append(check(f"product {key}: per-cube bound on argmax",
                            out["cube_lhs"] - out["cube_rhs"], "<=", 1e-12, "stated"))
    res["product"] = prod
    checks.append(check("product pairs evaluated", len(prod), ">=", 10, "stated"))

    # staircase uniformity and the approximation chain on a large grid
    P = C.ApproxParams((0.0,), 2.0 ** -4)
    half = 4160.0
    grid = Grid(Box((-half,), (half,)), int(2 * half * 64))
    fam = cube_family(grid.domain, 18, shifts=2)
    stair = [bmo_norm(C.plateau_sequence(P, j, grid), fam).value for j in range(1, 13)]
    slope = float(np.polyfit(np.arange(1, 13), stair, 1)[0])
    c0 = max(stair)
    res["staircase"] = {"norms": stair, "slope": slope, "c0": c0,
                        "lambda": [P.lam(k) for k in range(13)]}
    checks.append(check("staircase lambda_k = k", [P.lam(k) for k in range(13)], "==",
                        list(range(13)), "stated"))
    checks.append(check("staircase norm slope over j = 1..12", slope, "<=", 0.01, "calibrated"))
    inner = np.abs(grid.axis(0)) < P.S
    approx = {}
    for s in APPROX_CATALOGUE:
        f = sample(s, grid.domain, grid.shape)
        M = maximal_function(f).values
        nf = bmo_norm(f, fam).value
        errs, rows = [], {}
        for j in (4, 8, 16):
            fj = C.bmo_approximation(f, j, P)
            excess = float(np.max(np.abs(fj.values) - M))
            nj = bmo_norm(fj, fam).value
            err = float(np.max(np.abs(fj.values - f.values)[inner]))
            errs.append(err)
            rows[f"j={j}"] = {"bmo": nj, "max_excess_over_M": excess, "inner_err": err}
            checks.append(check(f"approx {_label(s)} j={j}: max(|f_j| - Mf)", excess, "<=", 0.0,
                                "stated"))
            checks.append(check(f"approx {_label(s)} j={j}: bmo(f_j) - 2(2+c0) bmo(f)",
                                nj - 2 * (2 + c0) * nf, "<=", 1e-3, "stated"))
        continuous = s.id not in ("log-abs", "thm36-example")
        if continuous:
            dec = float(errs[0] > errs[1] > errs[2])
            checks.append(check(f"approx {_label(s)}: inner error decreasing along j", dec, "==",
                                1.0, "derived"))
        approx[_label(s)] = {"bmo_f": nf, "rows": rows, "continuous": continuous}
    res["approximation"] = approx
    return _bundle("approximation-suite", {"S": P.S, "x0": list(P.x0), "grid_half": half,
                                           "h": 2.0 ** -6, "truncation_level": 1.0}, res, checks)


@dataclass(frozen=True)
class Experiment:
    id: str
    criterion: int
    func: Callable
    summary: str


REGISTRY = {e.id: e for e in (
    Experiment("log-osc-n1", 1, log_osc_n1, "mean oscillation of -log|x| on balls, n = 1"),
    Experiment("log-osc-n2", 1, log_osc_n2, "same quantity for n = 2, reported only"),
    Experiment("psi-ell-bound", 2, psi_ell_bound, "BMO estimate of the plateau average"),
    Experiment("heat-identities", 3, heat_identities,
               "mass, semigroup, reflection/splitting identities, regularity constant"),
    Experiment("restriction-identity", 4, restriction_identity,
               "Neumann Riesz commutator vs even-extension commutator"),
    Experiment("norm-equivalence", 5, norm_equivalence,
               "Neumann BMO vs even-extension BMO ratio"),
    Experiment("commutator-correlation", 6, commutator_correlation,
               "rank correlation of BMO estimate and commutator norm"),
    Experiment("compactness-dichotomy", 7, compactness_dichotomy,
               "eps-rank growth of commutators under refinement"),
    Experiment("vmo-separation", 8, vmo_separation, "classical vs Neumann VMO diagnostics"),
    Experiment("approximation-suite", 9, approximation_suite,
               "truncation, product, staircase and approximation chain"),
)}


def experiment_ids() -> list:
    return sorted(REGISTRY) + ["reproduce-all"]


def run_experiment(eid: str, seed: int = 0) -> dict:
    from .errors import UnknownId
    if eid == "reproduce-all":
        parts = {k: REGISTRY[k].func(seed) for k in sorted(REGISTRY)}
        return _clean({"experiment": "reproduce-all", "parts": parts,
                       "passed": all(p["passed"] for p in parts.values())})
    if eid not in REGISTRY:
        raise UnknownId(eid)
    return REGISTRY[eid].func(seed)
