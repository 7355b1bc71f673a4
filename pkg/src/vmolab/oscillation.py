"""Mean oscillation, BMO-type norms and the vanishing functionals gamma_1..3.

Every supremum here is a maximum over a finite :class:`CubeFamily`, so
reported norms are lower bounds of the true ones. Integrals over cubes
are averaged (divided by |Q|). Per-cube work is vectorised by grouping
cubes with the same cell-window shape.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import EmptyRegion, PreconditionError, TruncationError, TruncationWarning
from .funcspace import (GridFunction, _snap_ceil, even_extension, minus_even, plus_even,
                        region_values, zero_extension)
from .geometry import Box, Cube, CubeFamily, cube_family
from .heat import (HeatOperator, _truncating_gap, semigroup_values, truncation_ok)

__all__ = [
    "MIN_CELLS", "OscReport", "GammaCurve", "resolve_mode", "mean_osc", "semigroup_osc",
    "family_osc", "bmo_norm", "bmo_L_norm", "gamma_curve", "vmo_diagnostic",
    "variant_norms", "DEFAULT_THRESHOLDS",
]

MIN_CELLS = 4
_CHUNK = 4_000_000

_MODES = {
    "classical": None,
    "laplace": HeatOperator.LAPLACE,
    "neumann-full": HeatOperator.NEUMANN_FULL,
    "neumann-plus": HeatOperator.NEUMANN_PLUS,
    "neumann-minus": HeatOperator.NEUMANN_MINUS,
    "L=Δ": HeatOperator.LAPLACE,
    "L=ΔN": HeatOperator.NEUMANN_FULL,
    "L=ΔN+": HeatOperator.NEUMANN_PLUS,
    "L=ΔN-": HeatOperator.NEUMANN_MINUS,
}


def resolve_mode(mode) -> Optional[HeatOperator]:
    if mode is None or isinstance(mode, HeatOperator):
        return mode
    try:
        return _MODES[mode]
    except KeyError:
        raise PreconditionError(f"unknown oscillation mode {mode!r}") from None


def _mode_name(op: Optional[HeatOperator]) -> str:
    return "classical" if op is None else op.value


def _reduce(d: np.ndarray, p: int) -> np.ndarray:
    if p == 1:
        return d.mean(axis=-1)
    if p == 2:
        return np.sqrt((d * d).mean(axis=-1))
    raise PreconditionError("p must be 1 or 2")


def mean_osc(f: GridFunction, Q, p: int = 1) -> float:
    """(avg_Q |f - f_Q|^p)^{1/p} by the midpoint rule."""
    v = region_values(f, Q)
    if v.size < MIN_CELLS:
        raise EmptyRegion(f"{Q} holds {v.size} cell centres, need {MIN_CELLS}")
    return float(_reduce(np.abs(v - v.mean()), p))


def _region_t(Q, t):
    if t is not None:
        return float(t)
    if isinstance(Q, Cube):
        return Q.side ** 2
    return max(Q.as_box().extent) ** 2


def semigroup_osc(f: GridFunction, Q, op, p: int = 1, t: Optional[float] = None) -> float:
    """(avg_Q |f - e^{-l(Q)^2 L} f|^p)^{1/p}."""
    op = resolve_mode(op)
    if op is None:
        return mean_osc(f, Q, p)
    box = Q.as_box()
    sl = f.grid.index_range(box.lo, box.hi)
    if not f.domain.contains_box(box):
        warnings.warn(f"{Q} is not inside {f.domain}", TruncationWarning, stacklevel=2)
    if np.prod([s.stop - s.start for s in sl]) < MIN_CELLS:
        raise EmptyRegion(f"{Q} holds too few cell centres")
    u = semigroup_values(op, _region_t(Q, t), f, box)
    r = np.abs(f.values[sl] - u).reshape(-1)
    return float(_reduce(r, p))


# ----------------------------------------------------------- family engine

def _family_windows(f: GridFunction, family: CubeFamily):
    g = f.grid
    n = g.n
    if family.n != n:
        raise PreconditionError("family and function dimensions differ")
    starts = np.empty((len(family), n), dtype=np.int64)
    stops = np.empty_like(starts)
    lo, hi = family.lo, family.hi
    for a in range(n):
        L, h, N = g.domain.lo[a], g.h[a], g.shape[a]
        starts[:, a] = np.clip(_snap_ceil((lo[:, a] - L) / h - 0.5), 0, N)
        stops[:, a] = np.clip(_snap_ceil((hi[:, a] - L) / h - 0.5), 0, N)
    return starts, stops - starts


def _window_reduce(arr, starts, wshape, p, centred):
    view = sliding_window_view(arr, wshape)
    per = int(np.prod(wshape))
    step = max(1, _CHUNK // per)
    out = np.empty(len(starts))
    for c in range(0, len(starts), step):
        s = starts[c:c + step]
        w = view[tuple(s[:, a] for a in range(arr.ndim))].reshape(len(s), -1)
        if centred:
            w = np.abs(w - w.mean(axis=1, keepdims=True))
        else:
            w = np.abs(w)
        out[c:c + step] = _reduce(w, p)
    return out


@dataclass
class FamilyOsc:
    values: np.ndarray  # NaN where not evaluated
    too_small: int = 0
    truncated: int = 0


def family_osc(f: GridFunction, family: CubeFamily, mode=None, p: int = 1,
               skip_truncated: bool = False) -> FamilyOsc:
    """Per-cube oscillation over a family.

    Cubes with fewer than MIN_CELLS cell centres are skipped. In semigroup
    modes a cube breaking the truncation rule raises TruncationError,
    unless ``skip_truncated`` is set, in which case it is skipped.
    """
    op = resolve_mode(mode)
    starts, counts = _family_windows(f, family)
    out = np.full(len(family), np.nan)
    ok = np.prod(counts, axis=1) >= MIN_CELLS
    too_small = int((~ok).sum())
    outside = ok & ~np.all((family.lo >= np.asarray(f.domain.lo) - 1e-12)
                           & (family.hi <= np.asarray(f.domain.hi) + 1e-12), axis=1)
    if outside.any():
        warnings.warn(f"{int(outside.sum())} cubes stick out of {f.domain}; using overlaps",
                      TruncationWarning, stacklevel=2)
    truncated = 0
    if op is None:
        keys = np.unique(counts[ok], axis=0)
        for key in keys:
            idx = np.flatnonzero(ok & np.all(counts == key, axis=1))
            out[idx] = _window_reduce(f.values, starts[idx], tuple(key), p, True)
        return FamilyOsc(out, too_small, 0)

    for side in np.unique(family.sides[ok]):
        t = float(side) ** 2
        idx = np.flatnonzero(ok & (family.sides == side))
        if not f.exterior_zero:
            gaps = np.array([_truncating_gap(f.grid, (family.lo[i], family.hi[i])) for i in idx])
            bad = ~np.array([truncation_ok(t, gp) for gp in gaps])
            if bad.any():
                if not skip_truncated:
                    raise TruncationError(f"cube side {side:.4g} breaks the truncation rule")
                truncated += int(bad.sum())
                idx = idx[~bad]
        if idx.size == 0:
            continue
        s0 = starts[idx].min(axis=0)
        s1 = (starts[idx] + counts[idx]).max(axis=0)
        lo = tuple(f.grid.axis(a)[s0[a]] for a in range(f.n))
        hi = tuple(f.grid.axis(a)[s1[a] - 1] + 0.5 * f.grid.h[a] for a in range(f.n))
        region = Box(lo, hi)
        sl = tuple(slice(a, b) for a, b in zip(s0, s1))
        u = semigroup_values(op, t, f, region, enforce=False)
        resid = f.values[sl] - u
        loc = starts[idx] - s0
        for key in np.unique(counts[idx], axis=0):
            sub = np.all(counts[idx] == key, axis=1)
            out[idx[sub]] = _window_reduce(resid, loc[sub], tuple(key), p, False)
    return FamilyOsc(out, too_small, truncated)


# ----------------------------------------------------------------- reports

@dataclass
class OscReport:
    value: float
    argmax_cube: Optional[Cube]
    family: CubeFamily = field(repr=False)
    p: int = 1
    mode: str = "classical"
    evaluated: int = 0
    skipped: int = 0

    def to_json(self) -> dict:
        q = self.argmax_cube
        return {
            "value": self.value, "p": self.p, "mode": self.mode,
            "argmax_cube": None if q is None else {"center": list(q.center), "side": q.side},
            "family": {"size": len(self.family), "provenance": self.family.provenance,
                       "seed": self.family.seed},
            "evaluated": self.evaluated, "skipped": self.skipped,
        }

    def to_csv(self, path) -> None:
        q = self.argmax_cube
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["value", "p", "mode", "side"] + [f"c{a}" for a in range(self.family.n)])
            w.writerow([repr(self.value), self.p, self.mode, repr(q.side) if q else ""]
                       + ([repr(c) for c in q.center] if q else []))


def _report(fo: FamilyOsc, family, p, op) -> OscReport:
    vals = fo.values
    good = ~np.isnan(vals)
    if not good.any():
        return OscReport(0.0, None, family, p, _mode_name(op), 0, len(family))
    i = int(np.nanargmax(vals))
    return OscReport(float(vals[i]), family[i], family, p, _mode_name(op),
                     int(good.sum()), int((~good).sum()))


def bmo_norm(f: GridFunction, family: CubeFamily, p: int = 1) -> OscReport:
    """max over the family of mean_osc (a lower bound of the BMO norm)."""
    if len(family) == 0:
        raise PreconditionError("empty cube family")
    return _report(family_osc(f, family, None, p), family, p, None)


def bmo_L_norm(f: GridFunction, op, family: CubeFamily, p: int = 1,
               skip_truncated: bool = False) -> OscReport:
    """max over the family of semigroup_osc with t = l(Q)^2."""
    if len(family) == 0:
        raise PreconditionError("empty cube family")
    op = resolve_mode(op)
    return _report(family_osc(f, family, op, p, skip_truncated), family, p, op)


@dataclass
class GammaCurve:
    which: str
    mode: str
    r_values: np.ndarray
    sup_values: np.ndarray
    empty: list = field(default_factory=list)  # r values whose constraint set is empty

    def __post_init__(self):
        self.r_values = np.asarray(self.r_values, dtype=float)
        self.sup_values = np.asarray(self.sup_values, dtype=float)
        if self.r_values.shape != self.sup_values.shape:
            raise PreconditionError("r and sup lengths differ")

    def to_json(self) -> dict:
        return {"which": self.which, "mode": self.mode,
                "r": [float(r) for r in self.r_values],
                "sup": [None if math.isnan(s) else float(s) for s in self.sup_values],
                "empty_constraint": [float(r) for r in self.empty]}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "sup"])
            for r, s in zip(self.r_values, self.sup_values):
                w.writerow([repr(float(r)), repr(float(s))])


def _constraint(which: str, family: CubeFamily, r: float) -> np.ndarray:
    if which == "gamma1":
        return family.sides <= r * (1 + 1e-12)
    if which == "gamma2":
        return family.sides >= r * (1 - 1e-12)
    if which == "gamma3":
        # Q inside the complement of the open cube {|x|_inf < r}
        return np.any((family.lo >= r * (1 - 1e-12)) | (family.hi <= -r * (1 - 1e-12)), axis=1)
    raise PreconditionError(f"unknown functional {which!r}")


def _curve_from(osc: np.ndarray, which, op, family, r_grid) -> GammaCurve:
    sups, empty = [], []
    for r in r_grid:
        v = osc[_constraint(which, family, float(r))]
        v = v[~np.isnan(v)]
        if v.size == 0:
            sups.append(np.nan)
            empty.append(float(r))
        else:
            sups.append(float(v.max()))
    return GammaCurve(which, _mode_name(op), np.asarray(r_grid, float), np.array(sups), empty)


def gamma_curve(f: GridFunction, which: str, mode, family: CubeFamily, r_grid,
                p: int = 2, skip_truncated: bool = True) -> GammaCurve:
    """r -> sup of the p-oscillation over the cubes admitted by the constraint.

    gamma1 admits l(Q) <= r, gamma2 admits l(Q) >= r and gamma3 admits
    cubes in the complement of Q(0, r) = {|x|_inf < r}.
    """
    op = resolve_mode(mode)
    r_grid = np.sort(np.asarray(r_grid, dtype=float))
    fo = family_osc(f, family, op, p, skip_truncated)
    return _curve_from(fo.values, which, op, family, r_grid)


DEFAULT_THRESHOLDS = {"gamma1": 0.05, "gamma2": 0.05, "gamma3": 0.05}


def vmo_diagnostic(f: GridFunction, mode, family: CubeFamily,
                   thresholds: Optional[dict] = None, p: int = 2,
                   skip_truncated: bool = True) -> dict:
    """Finite-scale VMO heuristic: tails of the three gamma curves.

    gamma1 is read at the smallest evaluated side, gamma2 at the largest
    and gamma3 at r equal to half the domain's smallest half-width. The
    verdict is a heuristic on one grid, not a membership proof.
    """
    th = dict(DEFAULT_THRESHOLDS)
    th.update(thresholds or {})
    op = resolve_mode(mode)
    fo = family_osc(f, family, op, p, skip_truncated)
    osc = fo.values
    sides = family.sides[~np.isnan(osc)]
    if sides.size == 0:
        raise EmptyRegion("no cube of the family could be evaluated")
    r3 = min(f.domain.extent) / 4.0
    tails = {}
    for which, r in (("gamma1", sides.min()), ("gamma2", sides.max()), ("gamma3", r3)):
        c = _curve_from(osc, which, op, family, [r])
        tails[which] = float(c.sup_values[0])
    verdict = all((not math.isnan(tails[k])) and tails[k] <= th[k] for k in tails)
    return {
        "gamma1_tail": tails["gamma1"], "gamma2_tail": tails["gamma2"],
        "gamma3_tail": tails["gamma3"], "verdict": bool(verdict), "mode": _mode_name(op),
        "thresholds": th, "r": {"gamma1": float(sides.min()), "gamma2": float(sides.max()),
                                "gamma3": float(r3)},
        "evaluated": int((~np.isnan(osc)).sum()), "truncated": fo.truncated,
        "note": "finite-scale heuristic, not a membership proof",
    }


def variant_norms(f_half: GridFunction, levels: int = 6, shifts: int = 2,
                  family_full: Optional[CubeFamily] = None,
                  family_half: Optional[CubeFamily] = None,
                  skip_truncated: bool = True) -> dict:
    """BMO norms of f_e and f_z and the Neumann semigroup norm of f on the half-space.

    The restriction-type norm (an infimum over all extensions) is not
    computed; bmo_e is its upper-bound surrogate.
    """
    fe, fz = even_extension(f_half), zero_extension(f_half)
    fam_full = family_full or cube_family(fe.domain, levels, shifts)
    fam_half = family_half or cube_family(f_half.domain, levels, shifts)
    op = HeatOperator.NEUMANN_PLUS if f_half.domain.lo[-1] == 0.0 else HeatOperator.NEUMANN_MINUS
    return {
        "bmo_e": bmo_norm(fe, fam_full).value,
        "bmo_z": bmo_norm(fz, fam_full).value,
        "bmo_neumann": bmo_L_norm(f_half, op, fam_half, skip_truncated=skip_truncated).value,
    }
