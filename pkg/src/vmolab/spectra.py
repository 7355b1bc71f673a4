"""Operator norms, singular-value diagnostics and the norm correlation experiment.

Matrices act on the discrete L^2 space with cell weights h^n. On a
uniform grid that space is isometric to plain l^2 up to a scalar, so
singular values of the Nystrom matrix are the operator's singular values
and stay comparable across grid sizes.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np
from scipy import linalg, stats

from .errors import ConstantSymbol, NoConvergence, PreconditionError, SizeCap
from .funcspace import Grid, GridFunction, SymbolSpec, sample
from .geometry import Box, CubeFamily, cube_family
from .oscillation import bmo_L_norm
from .singular import KernelSpec, OperatorMatrix, assemble, commutator_matrix

__all__ = [
    "SpectralReport", "CorrelationTable", "l2_norm", "lp_lower_bound", "full_svd",
    "eps_rank", "compactness_growth", "correlation_experiment", "svd_cap", "DEFAULT_EPS",
]

DEFAULT_EPS = (1e-1, 1e-2, 1e-3)


def svd_cap() -> int:
    """Largest matrix side accepted by full_svd; override with VMOLAB_SVD_CAP."""
    return int(os.environ.get("VMOLAB_SVD_CAP", 4096))


def _as_array(A) -> np.ndarray:
    if isinstance(A, OperatorMatrix):
        return A.weighted()
    return np.asarray(A, dtype=float)


def l2_norm(A, tol: float = 1e-8, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest singular value by power iteration on A^T A.

    Stops on the eigen-residual |A^T A v - lam v| <= tol lam, so a close
    second singular value slows convergence instead of stopping it early.
    """
    M = _as_array(A)
    if not np.any(M):
        return 0.0
    v = np.random.default_rng(seed).standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = M.T @ (M @ v)
        lam = float(v @ w)
        if lam <= 0.0:
            return 0.0
        if np.linalg.norm(w - lam * v) <= tol * lam:
            return math.sqrt(lam)
        v = w / np.linalg.norm(w)
    raise NoConvergence("power iteration did not converge", estimate=math.sqrt(lam),
                        iterations=max_iter)


def _lp(v: np.ndarray, p: float, w: float) -> float:
    if math.isinf(p):
        return float(np.max(np.abs(v)))
    return float((np.sum(np.abs(v) ** p) * w) ** (1.0 / p))


def lp_lower_bound(A, p: float, q: float, witnesses: Sequence[GridFunction],
                   weight: Optional[float] = None) -> float:
    """max over witnesses of ||A f||_q / ||f||_p (a lower bound of the p -> q norm)."""
    if not (1 < p < math.inf and 1 < q < math.inf):
        raise PreconditionError("p and q must lie in (1, inf)")
    M = A.matrix if isinstance(A, OperatorMatrix) else np.asarray(A, dtype=float)
    if weight is None:
        weight = A.weight if isinstance(A, OperatorMatrix) else witnesses[0].grid.cell_volume
    best = 0.0
    for f in witnesses:
        den = _lp(f.flat, p, weight)
        if den == 0.0:
            raise PreconditionError("zero witness")
        best = max(best, _lp(M @ f.flat, q, weight) / den)
    return best


def eps_rank(sigma: np.ndarray, eps: float) -> int:
    """Smallest k with sigma_{k+1} <= eps * sigma_1 (0 for the zero operator)."""
    sigma = np.asarray(sigma)
    if sigma.size == 0 or sigma[0] == 0.0:
        return 0
    return int(np.count_nonzero(sigma > eps * sigma[0]))


@dataclass
class SpectralReport:
    sigma: np.ndarray
    eps_rank: dict
    size: int

    def to_json(self, top: int = 32) -> dict:
        return {"size": self.size, "sigma_top": [float(s) for s in self.sigma[:top]],
                "eps_rank": {repr(float(e)): int(k) for e, k in self.eps_rank.items()}}

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "sigma"])
            for i, s in enumerate(self.sigma):
                w.writerow([i + 1, repr(float(s))])


def full_svd(A, eps: Sequence[float] = DEFAULT_EPS) -> SpectralReport:
    M = _as_array(A)
    if max(M.shape) > svd_cap():
        raise SizeCap(f"matrix side {max(M.shape)} exceeds SVD cap {svd_cap()}")
    sigma = linalg.svdvals(M, check_finite=True)
    return SpectralReport(sigma, {float(e): eps_rank(sigma, e) for e in eps}, M.shape[0])


def _operator(spec: KernelSpec, grid: Grid, b: Optional[SymbolSpec]) -> np.ndarray:
    A = assemble(spec, grid)
    if b is None:
        return A.weighted()
    return commutator_matrix(sample(b, grid.domain, grid.shape), A)


def compactness_growth(spec: KernelSpec, b: Optional[SymbolSpec], domain: Box,
                       grids: Sequence[int] = (512, 1024),
                       eps: Sequence[float] = DEFAULT_EPS) -> dict:
    """eps-rank growth of [b, T] (or T itself when ``b`` is None) under refinement.

    Ratios near 1 mean the numerical rank does not follow the grid
    (compact-like); ratios near the refinement factor mean it does.
    A 0/0 ratio is reported as 1.
    """
    N0, N1 = grids
    reps = []
    for N in (N0, N1):
        reps.append(full_svd(_operator(spec, Grid(domain, N), b), eps))
    out = {}
    for e in eps:
        k0, k1 = reps[0].eps_rank[float(e)], reps[1].eps_rank[float(e)]
        out[float(e)] = 1.0 if k0 == 0 and k1 == 0 else (k1 / k0 if k0 else math.inf)
    return {"ratio": out, "ranks": [r.eps_rank for r in reps],
            "sigma1": [float(r.sigma[0]) for r in reps], "grids": [N0, N1]}


@dataclass
class CorrelationTable:
    rows: list = field(default_factory=list)  # dicts: symbol, bmo_neumann, comm_l2, frac_lower
    spearman: float = float("nan")

    def column(self, key) -> np.ndarray:
        return np.array([r[key] for r in self.rows], dtype=float)

    def to_json(self) -> dict:
        return {"rows": self.rows, "spearman": self.spearman}

    def to_csv(self, path) -> None:
        keys = ["symbol", "bmo_neumann", "comm_l2", "frac_lower"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(keys)
            for r in self.rows:
                w.writerow([r["symbol"]] + [repr(float(r[k])) for k in keys[1:]])


def _frac_witnesses(b: GridFunction, family: CubeFamily, count: int = 8):
    from .constructions import oscillation_witness
    from .oscillation import family_osc
    osc = family_osc(b, family, None, 1).values
    order = np.argsort(np.nan_to_num(-osc, nan=0.0), kind="stable")
    out = []
    for i in order[:count]:
        if np.isnan(osc[i]) or osc[i] == 0.0:
            continue
        try:
            out.append(oscillation_witness(b, family[i], 4.0 / 3.0))
        except ConstantSymbol:
            continue
    return out


def correlation_experiment(symbols: Sequence[SymbolSpec], spec: KernelSpec, domain: Box,
                           N: int = 512, family: Optional[CubeFamily] = None,
                           labels: Optional[Sequence[str]] = None,
                           frac_alpha: Optional[float] = 0.5) -> CorrelationTable:
    """Neumann BMO estimate vs commutator 2-norm per symbol, plus Spearman rho.

    The fractional column is a witness lower bound of the 4/3 -> 4 norm
    of [b, Delta_N^{-alpha/2}] with alpha = 1/2, so 1/q = 1/p - alpha/n for n = 1.
    """
    if len(symbols) < 8:
        raise PreconditionError("need at least 8 symbols")
    grid = Grid(domain, N)
    family = family or cube_family(domain, 8, shifts=2)
    A = assemble(spec, grid)
    F = assemble(KernelSpec("frac-neumann", alpha=frac_alpha), grid) if frac_alpha else None
    rows = []
    for k, s in enumerate(symbols):
        b = sample(s, domain, grid.shape)
        bmo = bmo_L_norm(b, "neumann-full", family, skip_truncated=True).value
        comm = l2_norm(commutator_matrix(b, A))
        frac = 0.0
        if F is not None:
            wit = _frac_witnesses(b, family)
            if wit:
                frac = lp_lower_bound(commutator_matrix(b, F), 4.0 / 3.0, 4.0, wit,
                                      grid.cell_volume)
        rows.append({"symbol": labels[k] if labels else s.id, "bmo_neumann": bmo,
                     "comm_l2": comm, "frac_lower": frac})
    tab = CorrelationTable(rows)
    x, y = tab.column("bmo_neumann"), tab.column("comm_l2")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise PreconditionError("degenerate catalogue: a column is constant")
    tab.spearman = float(stats.spearmanr(x, y).statistic)
    return tab
