"""Riesz and fractional kernels, Nystrom matrices and commutators.

Riesz kernels use the unnormalised form (x_j - y_j)/|x - y|^{n+1}; every
experiment built on them is a ratio or an identity, so the dimensional
constant never matters. Neumann kernels add the mirror term K(x, y~)
and are gated by H(x_n y_n), so cross-half blocks are exactly zero.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import (AsymmetricGrid, PreconditionError, ShapeMismatch, SingularPoint,
                     SizeCap)
from .funcspace import Grid, GridFunction, plus_even
from .heat import heaviside

__all__ = [
    "KernelSpec", "OperatorMatrix", "riesz_kernel", "riesz_neumann_kernel", "c_alpha",
    "frac_kernel", "frac_neumann_kernel", "self_cell_integral", "assemble", "apply",
    "commutator_matrix", "commutator_apply", "check_restriction_identity",
    "max_matrix_side",
]

FORMAT_VERSION = 1
_ROW_CHUNK = 2_000_000


def max_matrix_side() -> int:
    """Largest assembled matrix side; override with VMOLAB_MAX_MATRIX."""
    return int(os.environ.get("VMOLAB_MAX_MATRIX", 8192))


def _pair(x, y):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    return x, y, (x.ndim == 1 and y.ndim == 1)


def _reflect(y):
    y = y.copy()
    y[..., -1] = -y[..., -1]
    return y


def _out(v, scalar):
    return float(v) if scalar else v


def _riesz_raw(j, x, y):
    d = x - y
    r = np.sqrt(np.sum(d * d, axis=-1))
    n = x.shape[-1]
    return d[..., j - 1] / r ** (n + 1)


def riesz_kernel(j: int, x, y):
    """R_j(x, y) = (x_j - y_j) / |x - y|^{n+1}."""
    x, y, scalar = _pair(x, y)
    if not 1 <= j <= x.shape[-1]:
        raise PreconditionError("j out of range")
    if np.any(np.all(x == y, axis=-1)):
        raise SingularPoint("riesz kernel at x = y")
    return _out(_riesz_raw(j, x, y), scalar)


def riesz_neumann_kernel(j: int, x, y):
    """(R_j(x, y) + R_j(x, y~)) H(x_n y_n)."""
    x, y, scalar = _pair(x, y)
    if np.any(np.all(x == y, axis=-1)):
        raise SingularPoint("neumann riesz kernel at x = y")
    # x = y~ with H = 1 forces x = y, so the mirror singularity is always gated off
    gate = heaviside(x[..., -1] * y[..., -1]) == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        v = np.where(gate, _riesz_raw(j, x, y) + _riesz_raw(j, x, _reflect(y)), 0.0)
    return _out(v, scalar)


def c_alpha(n: int, alpha: float) -> float:
    """Gamma((n - a)/2) / (Gamma(a/2) 2^a pi^{n/2})."""
    if not 0 < alpha < n:
        raise PreconditionError("need 0 < alpha < n")
    return math.gamma((n - alpha) / 2) / (math.gamma(alpha / 2) * 2 ** alpha * math.pi ** (n / 2))


def _frac_raw(alpha, x, y):
    n = x.shape[-1]
    d = x - y
    return np.sum(d * d, axis=-1) ** (-(n - alpha) / 2)


def frac_kernel(alpha: float, x, y):
    """C_{n,a} / |x - y|^{n-a}."""
    x, y, scalar = _pair(x, y)
    if np.any(np.all(x == y, axis=-1)):
        raise SingularPoint("fractional kernel at x = y")
    return _out(c_alpha(x.shape[-1], alpha) * _frac_raw(alpha, x, y), scalar)


def frac_neumann_kernel(alpha: float, x, y):
    x, y, scalar = _pair(x, y)
    if np.any(np.all(x == y, axis=-1)):
        raise SingularPoint("neumann fractional kernel at x = y")
    c = c_alpha(x.shape[-1], alpha)
    gate = heaviside(x[..., -1] * y[..., -1]) == 1
    with np.errstate(divide="ignore"):
        v = np.where(gate, c * (_frac_raw(alpha, x, y) + _frac_raw(alpha, x, _reflect(y))), 0.0)
    return _out(v, scalar)


def self_cell_integral(alpha: float, h) -> float:
    """Integral of |z|^{a-n} over the cell centred at 0 with widths ``h``."""
    h = tuple(np.atleast_1d(h).astype(float))
    n = len(h)
    if n == 1:
        return 2.0 * (h[0] / 2) ** alpha / alpha
    if n == 2 and h[0] == h[1]:
        # polar coordinates over the square: 8 * int_0^{pi/4} (h/2 sec)^a / a
        a = h[0] / 2
        ang, _ = integrate.quad(lambda th: math.cos(th) ** (-alpha), 0.0, math.pi / 4,
                                epsabs=1e-14, epsrel=1e-13)
        return 8.0 * a ** alpha / alpha * ang
    if n != 2:
        raise PreconditionError("self-cell integral implemented for n <= 2")
    # rectangular cells: integrate the radial part analytically per angle
    a, b = h[0] / 2, h[1] / 2
    phi = math.atan2(b, a)
    f1, _ = integrate.quad(lambda th: (a / math.cos(th)) ** alpha, 0.0, phi, epsrel=1e-13)
    f2, _ = integrate.quad(lambda th: (b / math.sin(th)) ** alpha, phi, math.pi / 2,
                           epsrel=1e-13)
    return 4.0 * (f1 + f2) / alpha


_KINDS = ("riesz", "riesz-neumann", "frac", "frac-neumann")


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    j: int = 1
    alpha: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise PreconditionError(f"unknown kernel kind {self.kind!r}")
        if self.kind.startswith("frac"):
            if self.alpha is None:
                raise PreconditionError("fractional kernels need alpha")
            object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def neumann(self) -> bool:
        return self.kind.endswith("neumann")

    @property
    def odd(self) -> bool:
        return self.kind.startswith("riesz")

    def validate(self, n: int):
        if self.odd and not 1 <= self.j <= n:
            raise PreconditionError(f"j = {self.j} out of range for n = {n}")
        if not self.odd and not 0 < self.alpha < n:
            raise PreconditionError("need 0 < alpha < n")

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.odd:
            d["j"] = self.j
        else:
            d["alpha"] = self.alpha
        return d

    def label(self) -> str:
        return f"{self.kind}(j={self.j})" if self.odd else f"{self.kind}(alpha={self.alpha})"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense Nystrom matrix: (T f)(x_i) = sum_j A[i, j] f(x_j).

    Entries already include the cell volume h^n.
    """

    spec: Optional[KernelSpec]
    grid: Grid
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        a = np.asarray(self.matrix, dtype=float)
        if a.shape != (self.grid.size, self.grid.size):
            raise ShapeMismatch("matrix and grid sizes differ")
        a.flags.writeable = False
        object.__setattr__(self, "matrix", a)

    @property
    def weight(self) -> float:
        return self.grid.cell_volume

    def weighted(self) -> np.ndarray:
        """Matrix of the operator on l^2 after the isometry f -> h^{n/2} f.

        On a uniform grid the similarity D A D^{-1} with D = h^{n/2} I is A.
        """
        d = math.sqrt(self.weight)
        return (d * self.matrix) / d

    def raw_kernel(self) -> np.ndarray:
        return self.matrix / self.weight

    def dump(self, path) -> None:
        header = json.dumps({"spec": None if self.spec is None else self.spec.to_json(),
                             "lo": self.grid.domain.lo, "hi": self.grid.domain.hi,
                             "shape": self.grid.shape, "version": FORMAT_VERSION},
                            sort_keys=True).encode()
        with open(path, "wb") as fh:
            fh.write(b"VMOA")
            fh.write(struct.pack("<IQQ", len(header), *self.matrix.shape))
            fh.write(header)
            fh.write(np.ascontiguousarray(self.matrix, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path) -> "OperatorMatrix":
        from .geometry import Box
        data = Path(path).read_bytes()
        if data[:4] != b"VMOA":
            raise PreconditionError("not an operator-matrix file")
        hl, r, c = struct.unpack_from("<IQQ", data, 4)
        off = 4 + struct.calcsize("<IQQ")
        meta = json.loads(data[off:off + hl])
        off += hl
        mat = np.frombuffer(data, dtype="<f8", count=r * c, offset=off).reshape(r, c)
        spec = None if meta["spec"] is None else KernelSpec(**meta["spec"])
        grid = Grid(Box(tuple(meta["lo"]), tuple(meta["hi"])), tuple(meta["shape"]))
        return cls(spec, grid, mat.copy())


def _cache_key(spec: KernelSpec, grid: Grid) -> str:
    blob = json.dumps({"spec": spec.to_json(), "lo": grid.domain.lo, "hi": grid.domain.hi,
                       "shape": grid.shape, "version": FORMAT_VERSION}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def assemble(spec: KernelSpec, grid: Grid, cache_dir=None) -> OperatorMatrix:
    """Nystrom matrix with the principal-value diagonal rule.

    Off-diagonal entries are K(x_i, x_j) h^n. Odd kernels get a zero
    diagonal; fractional kernels get C * int_cell |z|^{a-n} dz. The mirror
    term of Neumann kernels is never singular off the hyperplane.
    """
    spec.validate(grid.n)
    if grid.size > max_matrix_side():
        raise SizeCap(f"matrix side {grid.size} exceeds cap {max_matrix_side()}")
    if spec.neumann:
        grid.require_symmetric()
    if cache_dir is not None:
        path = Path(cache_dir) / f"op-{_cache_key(spec, grid)}.bin"
        if path.exists():
            return OperatorMatrix.load(path)
    pts = grid.points()
    M, n = pts.shape
    w = grid.cell_volume
    A = np.empty((M, M))
    step = max(1, _ROW_CHUNK // (M * n))
    c = None if spec.odd else c_alpha(n, spec.alpha)
    for r0 in range(0, M, step):
        x = pts[r0:r0 + step, None, :]
        y = pts[None, :, :]
        rows = np.arange(r0, min(r0 + step, M))
        with np.errstate(divide="ignore", invalid="ignore"):
            if spec.odd:
                blk = _riesz_raw(spec.j, x, y)
            else:
                blk = c * _frac_raw(spec.alpha, x, y)
            blk[np.arange(len(rows)), rows] = 0.0
            if spec.neumann:
                # the mirror term is singular only across halves, where H kills it
                yr = _reflect(pts)[None, :, :]
                if spec.odd:
                    blk = blk + _riesz_raw(spec.j, x, yr)
                else:
                    blk = blk + c * _frac_raw(spec.alpha, x, yr)
                blk = np.where(x[..., -1] * y[..., -1] >= 0, blk, 0.0)
        A[r0:r0 + step] = blk * w
    if not spec.odd:
        A[np.diag_indices(M)] += c * self_cell_integral(spec.alpha, grid.h)
    if not np.all(np.isfinite(A)):
        raise SingularPoint("non-finite matrix entry")
    op = OperatorMatrix(spec, grid, A)
    if cache_dir is not None:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        op.dump(path)
    return op


def _vec(A: OperatorMatrix, f: GridFunction) -> np.ndarray:
    if f.grid != A.grid:
        raise ShapeMismatch("function and operator grids differ")
    return f.flat


def apply(A: OperatorMatrix, f: GridFunction) -> GridFunction:
    return f.with_values(A.matrix @ _vec(A, f), exterior_zero=False)


def commutator_matrix(b: GridFunction, A: OperatorMatrix) -> np.ndarray:
    """Matrix of [b, T]: entries A[i, j] (b_i - b_j)."""
    bv = _vec(A, b)
    return A.matrix * (bv[:, None] - bv[None, :])


def commutator_apply(b: GridFunction, A: OperatorMatrix, f: GridFunction) -> GridFunction:
    """[b, T] f = b T f - T(b f), evaluated through the kernel form."""
    _vec(A, f)
    return f.with_values(commutator_matrix(b, A) @ f.flat, exterior_zero=False)


def check_restriction_identity(b: GridFunction, j: int, f: GridFunction,
                               A_neu: Optional[OperatorMatrix] = None,
                               A_free: Optional[OperatorMatrix] = None) -> float:
    """max |[b, R_{N,j}](f 1_+) - [b_{+,e}, R_j](f_{+,e}) 1_+| over the grid."""
    grid = f.grid
    grid.require_symmetric()
    if b.grid != grid:
        raise ShapeMismatch("b and f grids differ")
    A_neu = A_neu or assemble(KernelSpec("riesz-neumann", j), grid)
    A_free = A_free or assemble(KernelSpec("riesz", j), grid)
    up = grid.upper_mask()
    f_up = f.with_values(np.where(up, f.values, 0.0))
    lhs = commutator_apply(b, A_neu, f_up).values
    rhs = commutator_apply(plus_even(b), A_free, plus_even(f)).values * up
    return float(np.max(np.abs(lhs - rhs)))
