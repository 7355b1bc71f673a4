"""Explicit functions: plateau averages, damped bumps, the half-space
counterexample, oscillation witnesses and the BMO approximation chain.

The approximation chain is specialised to R^n with Lebesgue measure:
quasi-metric constant 1, K0 = 2, doubling constant A0 = 2^n and radius
indices lambda_k = k.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConstantSymbol, DomainTooSmall, PreconditionError
from .funcspace import (Grid, GridFunction, SymbolSpec, ball_average, region_values,
                        sample)
from .geometry import Ball, Box, Cube, CubeFamily, as_point
from .oscillation import bmo_norm, family_osc, mean_osc

__all__ = [
    "PlateauSpec", "ApproxParams", "psi_ell", "small_bmo_bump", "trace_damp",
    "thm36_example", "oscillation_witness", "truncate", "ball_volume", "plateau_sequence",
    "bmo_approximation", "product_bound_check",
]

_PROFILES = {"linear": 0, "smoothstep": 1}


@dataclass(frozen=True)
class PlateauSpec:
    ell: int
    profile: str = "smoothstep"

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 3:
            raise PreconditionError("ell must be an integer >= 3")
        if self.profile not in _PROFILES:
            raise PreconditionError(f"profile must be one of {sorted(_PROFILES)}")


def psi_ell(spec: PlateauSpec, scale: float = 1.0) -> SymbolSpec:
    """psi_l(x / scale) with psi_l = (1/l) sum_{j<=l} phi_j."""
    return SymbolSpec("psi-ell", (spec.ell, _PROFILES[spec.profile], scale))


def _ell_for(eps: float) -> int:
    # smallest integer l >= 3 with 16 / l < eps
    return max(3, math.floor(16.0 / eps) + 1)


def small_bmo_bump(eps: float, eta: float, profile: str = "smoothstep") -> SymbolSpec:
    """psi_l(2^l x / eta) for the smallest l with 16/l < eps; supported in [-eta, eta]."""
    if not (eps > 0 and eta > 0):
        raise PreconditionError("eps and eta must be positive")
    ell = _ell_for(eps)
    return psi_ell(PlateauSpec(ell, profile), eta / 2.0 ** ell)


def _trace_modulus(trace: Callable, support: float, eps: float, pts: int = 4096) -> float:
    """Largest dyadic delta with mean oscillation of the trace below eps on intervals shorter than delta."""
    x = np.linspace(-support, support, pts)
    v = trace(x)
    h = x[1] - x[0]
    delta = 2.0 * support
    while delta > 4 * h:
        w = max(2, int(delta / h))
        win = np.lib.stride_tricks.sliding_window_view(v, w)
        osc = np.mean(np.abs(win - win.mean(axis=1, keepdims=True)), axis=1).max()
        if osc < eps:
            return delta
        delta /= 2
    return delta


def trace_damp(g: SymbolSpec, eps: float, n: int, support: float = 4.0) -> SymbolSpec:
    """A 1-D damping factor psi with psi(0) = 1 and small BMO norm of g(x', 0) psi(x_n).

    n = 1 picks psi_l with |g(0)| 16/l < eps (dilated to support [-1, 1]).
    n = 2 takes delta from the oscillation modulus of the trace g(., 0),
    then the small bump with eta = eps delta / 2.
    """
    if n == 1:
        g0 = abs(float(g(np.zeros((1, 1)))[0]))
        ell = max(3, math.floor(16.0 * g0 / eps) + 1) if g0 > 0 else 3
        return psi_ell(PlateauSpec(ell), 1.0 / 2.0 ** ell)
    if n != 2:
        raise PreconditionError("trace_damp supports n <= 2")

    def trace(x1):
        return g(np.stack([x1, np.zeros_like(x1)], axis=-1))

    delta = _trace_modulus(trace, support, eps)
    return small_bmo_bump(eps, eps * delta / 2.0)


def thm36_example() -> tuple:
    """(g, f): g = phi(x_n) psi(x) smooth and even in x_n, f = sign(x_n) g."""
    return SymbolSpec("thm36-g"), SymbolSpec("thm36-example")


def oscillation_witness(b: GridFunction, Q, p: float = 1.0) -> GridFunction:
    """g = |Q|^{-1/p} (s - s_Q) 1_Q with s = sign(b - b_Q).

    |Q| is the discrete measure (cell count times h^n), so the zero-mean and
    pairing identities hold to rounding.
    """
    box = Q.as_box()
    if not b.domain.contains_box(box):
        raise PreconditionError(f"{Q} is not inside {b.domain}")
    sl = b.grid.index_range(box.lo, box.hi)
    v = b.values[sl]
    if v.size == 0:
        raise PreconditionError("empty cube")
    scale = max(1.0, float(np.max(np.abs(v))))
    if float(np.ptp(v)) <= 1e-14 * scale:
        raise ConstantSymbol("b is constant on Q")
    s = np.sign(v - v.mean())
    vol = v.size * b.grid.cell_volume
    out = np.zeros(b.grid.shape)
    out[sl] = vol ** (-1.0 / p) * (s - s.mean())
    return b.with_values(out, exterior_zero=True)


def truncate(f: GridFunction, level: float) -> GridFunction:
    """[f]_N: clamp |f| to N keeping the sign."""
    if not level > 0:
        raise PreconditionError("truncation level must be positive")
    return f.with_values(np.clip(f.values, -level, level))


def ball_volume(n: int, r: float) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * r ** n


@dataclass(frozen=True)
class ApproxParams:
    x0: tuple
    S: float
    K0: float = 2.0
    A0: Optional[float] = None
    a0: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "x0", as_point(self.x0))
        if not self.S > 0:
            raise PreconditionError("S must be positive")
        n = len(self.x0)
        if self.A0 is None:
            object.__setattr__(self, "A0", 2.0 ** n)
        if self.a0 is None:
            object.__setattr__(self, "a0", ball_volume(n, self.S))

    @property
    def n(self) -> int:
        return len(self.x0)

    def lam(self, k: int) -> int:
        """Smallest integer lambda > lambda_{k-1} with A0^k a0 <= |B(x0, K0^lambda S)|."""
        prev = -1
        for i in range(k + 1):
            need = self.A0 ** i * self.a0
            lam = prev + 1
            # relative slack absorbs rounding in the volume formula
            while ball_volume(self.n, self.K0 ** lam * self.S) < need * (1 - 1e-12):
                lam += 1
            prev = lam
        return prev

    def radius(self, k: int) -> float:
        return self.K0 ** self.lam(k) * self.S


def _require_inside(grid: Grid, center, r: float):
    d = grid.domain
    if any(c - r < lo or c + r > hi for c, lo, hi in zip(center, d.lo, d.hi)):
        raise DomainTooSmall(f"ball of radius {r:.4g} around {center} leaves {d}")


def plateau_sequence(params: ApproxParams, j: int, grid: Grid) -> GridFunction:
    """sum_{k=0}^{j} 1_{B(x0, K0^{lambda_k} S)} sampled on ``grid``."""
    _require_inside(grid, params.x0, params.radius(j))
    pts = grid.points()
    d2 = np.sum((pts - np.asarray(params.x0)) ** 2, axis=1)
    acc = np.zeros(grid.size)
    for k in range(j + 1):
        acc += d2 < params.radius(k) ** 2
    return GridFunction(grid, acc.reshape(grid.shape), exterior_zero=True)


def bmo_approximation(f: GridFunction, j: int, params: ApproxParams) -> GridFunction:
    """f_j = g_j [h_j]_j with g_j the normalised staircase and h_j the 1/j ball average."""
    if j < 1:
        raise PreconditionError("j must be >= 1")
    _require_inside(f.grid, params.x0, params.radius(j) + 1.0 / j)
    g = plateau_sequence(params, j, f.grid).values / (j + 1)
    h = ball_average(f, 1.0 / j).values
    return f.with_values(g * np.clip(h, -j, j), exterior_zero=True)


def product_bound_check(f: GridFunction, g: GridFunction, family: CubeFamily) -> dict:
    """Estimated BMO norm of fg against 2(|f|_BMO |g|_inf + |f|_inf |g|_BMO).

    Also evaluates the per-cube form of the bound on the cube realising
    the product's estimate, where every quantity is one exact quadrature.
    """
    fg = f * g
    rep = bmo_norm(fg, family)
    nf, ng = bmo_norm(f, family).value, bmo_norm(g, family).value
    sf, sg = f.sup_norm(), g.sup_norm()
    rhs = 2.0 * (nf * sg + sf * ng)
    out = {"lhs": rep.value, "rhs": rhs}
    q = rep.argmax_cube
    if q is not None:
        out["cube_lhs"] = mean_osc(fg, q)
        out["cube_rhs"] = 2.0 * (mean_osc(f, q) * sg + sf * mean_osc(g, q))
    return out
