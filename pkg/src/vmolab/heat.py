"""Heat kernels of the Laplacian and its Neumann variants on half-spaces.

All four kernels factor over coordinates: a free Gaussian in every x_a
with a < n, and along x_n either the free Gaussian or the image sum
G(x_n - y_n) + G(x_n + y_n), possibly gated by H(x_n y_n). Semigroups
are therefore applied one axis at a time with dense 1-D matrices; the
result is the same grid sum sum_j p(x_i, x_j) f(x_j) h^n, reordered.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainViolation, PreconditionError, TruncationError
from .funcspace import Grid, GridFunction, even_extension, restrict
from .geometry import Box, as_point

__all__ = [
    "HeatOperator", "heaviside", "heat_kernel", "gaussian_envelope", "truncation_ok",
    "semigroup_apply", "semigroup_values", "kernel_mass", "check_reflection_identity",
    "check_splitting_identity", "check_semigroup_property", "check_smoothness_bound",
]

# exp(-u) is exactly 0.0 in float64 for u > 745.2, so entries past this
# exponent are skipped without changing any sum
_UNDERFLOW = 746.0
# six kernel standard deviations (sqrt(2t) each); one-sided tail ~1e-9
_TAIL_SIGMAS = 6.0
_CHUNK = 4_000_000


class HeatOperator(str, enum.Enum):
    LAPLACE = "laplace"
    NEUMANN_PLUS = "neumann-plus"
    NEUMANN_MINUS = "neumann-minus"
    NEUMANN_FULL = "neumann-full"

    @property
    def is_half(self) -> bool:
        return self in (HeatOperator.NEUMANN_PLUS, HeatOperator.NEUMANN_MINUS)


def heaviside(s):
    """H(s) = 1 for s >= 0, else 0."""
    out = (np.asarray(s) >= 0).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def _g1(d, t):
    return np.exp(-(d * d) / (4.0 * t)) / math.sqrt(4.0 * math.pi * t)


def _check_half(op: HeatOperator, xn, yn):
    if op is HeatOperator.NEUMANN_PLUS and (np.any(xn < 0) or np.any(yn < 0)):
        raise DomainViolation("neumann-plus kernel needs x_n, y_n >= 0")
    if op is HeatOperator.NEUMANN_MINUS and (np.any(xn > 0) or np.any(yn > 0)):
        raise DomainViolation("neumann-minus kernel needs x_n, y_n <= 0")


def heat_kernel(op, t: float, x, y):
    """p_{t,L}(x, y); ``x`` and ``y`` broadcast as ``(..., n)`` arrays."""
    op = HeatOperator(op)
    if not t > 0:
        raise PreconditionError("t must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    scalar = x.ndim <= 1 and y.ndim <= 1
    x = np.atleast_1d(x)
    y = np.atleast_1d(y)
    xn, yn = x[..., -1], y[..., -1]
    _check_half(op, xn, yn)
    out = np.prod(_g1(x[..., :-1] - y[..., :-1], t), axis=-1)
    if op is HeatOperator.LAPLACE:
        out = out * _g1(xn - yn, t)
    else:
        out = out * (_g1(xn - yn, t) + _g1(xn + yn, t))
        if op is HeatOperator.NEUMANN_FULL:
            out = out * heaviside(xn * yn)
    return float(out) if scalar else out


def gaussian_envelope(t: float, x, y):
    """(4 pi t)^{-n/2} exp(-|x - y|^2 / 4t)."""
    return heat_kernel(HeatOperator.LAPLACE, t, x, y)


def _axis_matrix(op: HeatOperator, last: bool, t: float, xr, yc, h):
    d = xr[:, None] - yc[None, :]
    m = _g1(d, t)
    if last and op is not HeatOperator.LAPLACE:
        m = m + _g1(xr[:, None] + yc[None, :], t)
        if op is HeatOperator.NEUMANN_FULL:
            m = m * (np.multiply.outer(xr, yc) >= 0)
    return m * h


def _apply_axis(op, last, t, v, axis, x_out, y_in, h):
    """Contract ``v`` along ``axis`` with the 1-D kernel matrix (band-limited)."""
    v = np.moveaxis(v, axis, 0)
    rest = v.shape[1:]
    v2 = v.reshape(v.shape[0], -1)
    nz = np.flatnonzero(np.any(v2 != 0, axis=1))
    out = np.zeros((len(x_out), v2.shape[1]))
    if nz.size == 0:
        return np.moveaxis(out.reshape((len(x_out),) + rest), 0, axis)
    yc_all, v_all = y_in[nz], v2[nz]
    cut = math.sqrt(4.0 * t * _UNDERFLOW)
    reflect = last and op is not HeatOperator.LAPLACE
    step = max(1, _CHUNK // max(len(nz), 1))
    for r0 in range(0, len(x_out), step):
        xr = x_out[r0:r0 + step]
        lo, hi = xr.min() - cut, xr.max() + cut
        sel = (yc_all > lo) & (yc_all < hi)
        if reflect:
            sel |= (-yc_all > lo) & (-yc_all < hi)
        if not sel.any():
            continue
        m = _axis_matrix(op, last, t, xr, yc_all[sel], h)
        out[r0:r0 + step] = m @ v_all[sel]
    return np.moveaxis(out.reshape((len(x_out),) + rest), 0, axis)


def _truncating_gap(grid: Grid, region) -> float:
    """Distance from ``region`` (a Box or ``(lo, hi)`` pair) to the nearest truncating face.

    A face lying on x_n = 0 reflects rather than truncates and is ignored.
    """
    lo, hi = (region.lo, region.hi) if isinstance(region, Box) else region
    gap = math.inf
    d = grid.domain
    for a in range(grid.n):
        last = a == grid.n - 1
        if not (last and d.lo[a] == 0.0):
            gap = min(gap, lo[a] - d.lo[a])
        if not (last and d.hi[a] == 0.0):
            gap = min(gap, d.hi[a] - hi[a])
    return gap


def _default_padding(grid: Grid) -> float:
    d = grid.domain
    ext = [e for a, e in enumerate(d.extent)
           if not (a == grid.n - 1 and (d.lo[a] == 0.0 or d.hi[a] == 0.0))]
    if not ext:
        ext = [d.extent[-1]]
    return min(ext) / 4.0


def truncation_ok(t: float, padding: float) -> bool:
    return _TAIL_SIGMAS * math.sqrt(2.0 * t) <= padding


def _check_domain(op: HeatOperator, grid: Grid):
    d = grid.domain
    if op is HeatOperator.NEUMANN_PLUS and d.lo[-1] < 0:
        raise DomainViolation("neumann-plus needs a grid inside x_n >= 0")
    if op is HeatOperator.NEUMANN_MINUS and d.hi[-1] > 0:
        raise DomainViolation("neumann-minus needs a grid inside x_n <= 0")
    if op is HeatOperator.NEUMANN_FULL and d.straddles_hyperplane():
        grid.require_symmetric()


def semigroup_values(op, t: float, f: GridFunction, region: Optional[Box] = None,
                     padding: Optional[float] = None, enforce: bool = True) -> np.ndarray:
    """e^{-tL} f at the cell centres inside ``region`` (the whole grid by default).

    Returns the array over ``f.grid.index_range(region)``.
    The truncation rule 6 sqrt(2t) <= padding is enforced unless the
    sampled function vanishes outside its box.
    """
    op = HeatOperator(op)
    if not t > 0:
        raise PreconditionError("t must be positive")
    grid = f.grid
    _check_domain(op, grid)
    if region is None:
        region = grid.domain
        sl = tuple(slice(0, s) for s in grid.shape)
        pad = _default_padding(grid) if padding is None else padding
    else:
        region = region.as_box()
        sl = grid.index_range(region.lo, region.hi)
        pad = _truncating_gap(grid, region) if padding is None else padding
    if enforce and not f.exterior_zero and not truncation_ok(t, pad):
        raise TruncationError(
            f"sqrt(t)={math.sqrt(t):.4g} too large for padding {pad:.4g} "
            f"(need {_TAIL_SIGMAS} sqrt(2t) <= padding)")
    v = f.values
    for a in range(grid.n):
        ax = grid.axis(a)
        v = _apply_axis(op, a == grid.n - 1, t, v, a, ax[sl[a]], ax, grid.h[a])
    return v


def semigroup_apply(op, t: float, f: GridFunction, padding: Optional[float] = None,
                    enforce: bool = True) -> GridFunction:
    """e^{-tL} f on the whole grid."""
    vals = semigroup_values(op, t, f, None, padding, enforce)
    return f.with_values(vals, exterior_zero=False)


def kernel_mass(op, t: float, x, grid: Grid) -> float:
    """Grid quadrature of y -> p_t(x, y) over the grid box."""
    op = HeatOperator(op)
    x = as_point(x)
    total = 1.0
    for a in range(grid.n):
        last = a == grid.n - 1
        ax = grid.axis(a)
        row = _axis_matrix(op, last, t, np.array([x[a]]), ax, grid.h[a])
        total *= float(row.sum())
    return total


def check_splitting_identity(t: float, f: GridFunction, **kw) -> float:
    """max |(e^{-t Delta_N} f)_+- - e^{-t Delta_N+-} f_+-| over both halves."""
    full = semigroup_apply(HeatOperator.NEUMANN_FULL, t, f, **kw)
    err = 0.0
    for side, op in (("+", HeatOperator.NEUMANN_PLUS), ("-", HeatOperator.NEUMANN_MINUS)):
        half = semigroup_apply(op, t, restrict(f, side), **kw)
        err = max(err, float(np.max(np.abs(restrict(full, side).values - half.values))))
    return err


def check_reflection_identity(t: float, f_half: GridFunction, **kw) -> tuple:
    """Compare e^{-t Delta} f_e with e^{-t Delta_N+} f on both halves.

    Returns ``(upper_err, lower_err)``: the lower error compares
    e^{-t Delta} f_e(x) against e^{-t Delta_N+} f(x~).
    """
    if f_half.domain.lo[-1] != 0.0:
        raise PreconditionError("f_half must live on a box with lower face x_n = 0")
    fe = even_extension(f_half)
    a = semigroup_apply(HeatOperator.LAPLACE, t, fe, **kw)
    b = semigroup_apply(HeatOperator.NEUMANN_PLUS, t, f_half, **kw).values
    up = float(np.max(np.abs(restrict(a, "+").values - b)))
    lo = float(np.max(np.abs(restrict(a, "-").values[..., ::-1] - b)))
    return up, lo


def check_semigroup_property(op, t: float, s: float, x, y, domain: Box, N) -> float:
    """Relative error of the grid quadrature of int p_t(x,z) p_s(z,y) dz against p_{t+s}(x,y)."""
    op = HeatOperator(op)
    grid = Grid(domain, N)
    _check_domain(op, grid)
    x, y = as_point(x), as_point(y)
    span = (tuple(map(min, x, y)), tuple(map(max, x, y)))
    if not truncation_ok(max(t, s), _truncating_gap(grid, span)):
        raise TruncationError("points too close to the truncated boundary for t, s")
    quad = 1.0
    for a in range(grid.n):
        last = a == grid.n - 1
        z = grid.axis(a)
        left = _axis_matrix(op, last, t, np.array([x[a]]), z, grid.h[a])[0]
        right = _axis_matrix(op, last, s, z, np.array([y[a]]), 1.0)[:, 0]
        quad *= float(left @ right)
    exact = heat_kernel(op, t + s, x, y)
    return abs(quad - exact) / abs(exact)


def check_smoothness_bound(op, t: float, triples) -> float:
    """Empirical constant of the Hoelder-type regularity bound in x.

    C = max |p(x,y) - p(x',y)| (sqrt t + |x-y|)^{n+1} (sqrt t + |x-y|) / (|x-x'| sqrt t)
    over triples ``(x, x', y)`` with ``|x - x'| <= |x - y| / 2``.
    """
    arr = np.asarray(triples, dtype=float)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    x, xp, y = arr[:, 0], arr[:, 1], arr[:, 2]
    n = x.shape[-1]
    dxx = np.linalg.norm(x - xp, axis=-1)
    dxy = np.linalg.norm(x - y, axis=-1)
    if np.any(dxx > 0.5 * dxy * (1 + 1e-12)):
        raise PreconditionError("triple violates |x - x'| <= |x - y| / 2")
    diff = np.abs(heat_kernel(op, t, x, y) - heat_kernel(op, t, xp, y))
    st = math.sqrt(t)
    with np.errstate(invalid="ignore", divide="ignore"):
        c = diff * (st + dxy) ** (n + 2) / (dxx * st)
    c = np.where(dxx > 0, c, 0.0)
    return float(np.max(c)) if c.size else 0.0
