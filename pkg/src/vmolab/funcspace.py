"""Cell-centred grid functions and the half-space extension calculus.

A :class:`GridFunction` samples a real function at the cell centres of a
uniform tensor grid over a :class:`~vmolab.geometry.Box`. Grids with an
even number of cells along x_n on a box symmetric about x_n = 0 never put
a sample on the hyperplane, so extensions, restrictions and the Heaviside
gate are exact index operations.
"""
from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .errors import (AsymmetricGrid, EmptyRegion, NonFinite, PreconditionError,
                     ShapeMismatch, TruncationWarning)
from .geometry import Ball, Box, Cube, as_point

__all__ = [
    "Grid", "GridFunction", "SymbolSpec", "CATALOGUE", "sample", "even_extension",
    "zero_extension", "restrict", "plus_even", "minus_even", "mean", "region_values",
    "ball_average", "maximal_function", "restricted_maximal", "smoothstep",
    "save_binary", "load_binary", "save_csv", "load_csv",
]

Region = Union[Cube, Ball, Box]


def _snap_ceil(u):
    u = np.asarray(u, dtype=float)
    r = np.round(u)
    u = np.where(np.abs(u - r) < 1e-9, r, u)
    return np.ceil(u).astype(np.int64)


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centred tensor grid."""

    domain: Box
    shape: tuple

    def __post_init__(self):
        shape = tuple(int(s) for s in np.atleast_1d(self.shape))
        if len(shape) == 1 and self.domain.n > 1:
            shape = shape * self.domain.n
        if len(shape) != self.domain.n:
            raise ShapeMismatch("shape and domain dimension differ")
        if min(shape) < 2:
            raise PreconditionError("need at least 2 cells per axis")
        object.__setattr__(self, "shape", shape)

    @property
    def n(self) -> int:
        return self.domain.n

    @property
    def N(self) -> int:
        if len(set(self.shape)) != 1:
            raise PreconditionError(f"grid shape {self.shape} is not uniform")
        return self.shape[0]

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def h(self) -> tuple:
        return tuple(e / s for e, s in zip(self.domain.extent, self.shape))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    def axis(self, a: int) -> np.ndarray:
        lo, hi, N, h = self.domain.lo[a], self.domain.hi[a], self.shape[a], self.h[a]
        if N % 2 == 0 and lo == -hi:
            # built as +-pos so mirrored centres are exact negatives of each other
            pos = h * (np.arange(N // 2) + 0.5)
            return np.concatenate([-pos[::-1], pos])
        return lo + h * (np.arange(N) + 0.5)

    def axes(self) -> list:
        return [self.axis(a) for a in range(self.n)]

    def points(self) -> np.ndarray:
        """Cell centres, shape ``(size, n)``, row-major."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.reshape(-1) for m in mesh], axis=-1)

    def is_symmetric(self) -> bool:
        return self.domain.is_symmetric() and self.shape[-1] % 2 == 0

    def require_symmetric(self):
        if not self.is_symmetric():
            raise AsymmetricGrid(f"grid on {self.domain} with shape {self.shape} "
                                 "is not symmetric about x_n = 0")

    def mirror_index(self) -> np.ndarray:
        """Flat index of the reflected cell for every cell (symmetric grids only)."""
        self.require_symmetric()
        idx = np.arange(self.size).reshape(self.shape)
        return idx[..., ::-1].reshape(-1)

    def upper_mask(self) -> np.ndarray:
        return np.broadcast_to(self.axis(self.n - 1) > 0, self.shape)

    def index_range(self, lo, hi) -> tuple:
        """Per-axis slices of the cells whose centres lie in ``[lo, hi)``."""
        out = []
        for a in range(self.n):
            h, L = self.h[a], self.domain.lo[a]
            i0 = int(_snap_ceil((lo[a] - L) / h - 0.5))
            i1 = int(_snap_ceil((hi[a] - L) / h - 0.5))
            out.append(slice(max(i0, 0), min(max(i1, 0), self.shape[a])))
        return tuple(out)


@dataclass(frozen=True, eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray
    exterior_zero: bool = False

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise NonFinite("grid function has non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def on(cls, domain: Box, N, values, exterior_zero=False) -> "GridFunction":
        return cls(Grid(domain, N), values, exterior_zero)

    @property
    def domain(self) -> Box:
        return self.grid.domain

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def N(self) -> int:
        return self.grid.N

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values, exterior_zero=None) -> "GridFunction":
        ez = self.exterior_zero if exterior_zero is None else exterior_zero
        return GridFunction(self.grid, np.asarray(values).reshape(self.grid.shape), ez)

    def _check(self, other):
        if other.grid != self.grid:
            raise ShapeMismatch("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values + other.values,
                                    self.exterior_zero and other.exterior_zero)
        return self.with_values(self.values + other, self.exterior_zero and other == 0)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self.with_values(-self.values)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values * other.values,
                                    self.exterior_zero or other.exterior_zero)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __abs__(self):
        return self.with_values(np.abs(self.values))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def lp_norm(self, p: float) -> float:
        w = self.grid.cell_volume
        if np.isinf(p):
            return self.sup_norm()
        return float((np.sum(np.abs(self.values) ** p) * w) ** (1.0 / p))


# ---------------------------------------------------------------- catalogue

def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def _profile(kind):
    return smoothstep if kind == 1 else (lambda u: np.clip(u, 0.0, 1.0))


def _plateau(r, inner, profile):
    """1 on [0, inner], profile down to 0 on [inner, 2*inner], 0 beyond."""
    return 1.0 - profile((r - inner) / inner)


def _psi_ell(x, ell, profile=1, scale=1.0):
    ell = int(ell)
    if ell < 1:
        raise PreconditionError("psi-ell needs ell >= 1")
    prof = _profile(int(profile))
    r = np.abs(np.asarray(x, dtype=float)) / scale
    acc = np.zeros_like(r)
    for j in range(1, ell + 1):
        acc += _plateau(r, 2.0 ** (j - 1), prof)
    return acc / ell


def _thm36_phi(t):
    return 1.0 - smoothstep(np.abs(t) / 2.0)


def _thm36_psi(x):
    r = np.sqrt(np.sum(x * x, axis=-1))
    return 1.0 - smoothstep(r - 1.0)


def _thm36_g(x):
    return _thm36_phi(x[:, -1]) * _thm36_psi(x)


def _thm36_f(x):
    xn = x[:, -1]
    return _thm36_g(x) * np.where(xn > 0, 1.0, np.where(xn < 0, -1.0, 0.0))


def _log_abs(x, amp=1.0):
    with np.errstate(divide="ignore"):
        return amp * np.log(np.sqrt(np.sum(x * x, axis=-1)))


def _gaussian(x, amp=1.0, width=1.0):
    return amp * np.exp(-np.sum(x * x, axis=-1) / width ** 2)


@dataclass(frozen=True)
class _Entry:
    func: Callable
    arity: tuple
    defaults: tuple = ()
    support: Optional[Callable] = None  # params -> sup-norm radius of support
    doc: str = ""


CATALOGUE = {
    "constant": _Entry(lambda x, c=1.0: np.full(x.shape[0], float(c)), (0, 1), (1.0,),
                       lambda p: 0.0 if p and p[0] == 0 else None, "constant c"),
    "coordinate": _Entry(lambda x, j=None: x[:, (int(j) - 1) if j else -1], (0, 1), (0,),
                         None, "x_j (default x_n)"),
    # beyond 6.1 widths the Gaussian is below 1e-16 of its peak: numerically zero
    "gaussian": _Entry(_gaussian, (0, 2), (1.0, 1.0),
                       lambda p: 6.1 * (p[1] if len(p) > 1 else 1.0),
                       "amp * exp(-|x|^2 / width^2)"),
    "log-abs": _Entry(_log_abs, (0, 1), (1.0,), None, "amp * log|x|"),
    "neg-log-abs": _Entry(lambda x, amp=1.0: -_log_abs(x, amp), (0, 1), (1.0,), None,
                          "-amp * log|x|"),
    "psi-ell": _Entry(lambda x, ell, profile=1, scale=1.0: _psi_ell(x[:, -1], ell, profile, scale),
                      (1, 3), (None, 1, 1.0), None,
                      "plateau average (1/l) sum phi_j(x_n / scale); profile 0=linear 1=smoothstep"),
    "thm36-g": _Entry(_thm36_g, (0, 0), (), lambda p: 2.0, "g(x) = phi(x_n) psi(x)"),
    "thm36-example": _Entry(_thm36_f, (0, 0), (), lambda p: 2.0,
                            "g on x_n > 0, -g on x_n < 0"),
    "heaviside-sign": _Entry(lambda x: np.where(x[:, -1] >= 0, 1.0, -1.0), (0, 0), (), None,
                             "sign(x_n) with H(0) = 1"),
    "sine-bump": _Entry(lambda x, amp=1.0, freq=1.0: amp * np.sin(freq * x[:, -1])
                        * _gaussian(x, 1.0, 2.0), (0, 2), (1.0, 1.0), None,
                        "amp * sin(freq x_n) exp(-|x|^2/4)"),
    "custom-closure": _Entry(None, (0, 64), (), None, "user callable on (M, n) points"),
}


@dataclass(frozen=True)
class SymbolSpec:
    """Named analytic function from :data:`CATALOGUE` plus its parameters."""

    id: str
    params: tuple = ()
    func: Optional[Callable] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.id not in CATALOGUE:
            raise PreconditionError(f"unknown symbol id {self.id!r}")
        params = tuple(float(p) for p in self.params)
        lo, hi = CATALOGUE[self.id].arity
        if not lo <= len(params) <= hi:
            raise PreconditionError(f"{self.id} takes {lo}..{hi} params, got {len(params)}")
        if self.id == "custom-closure" and self.func is None:
            raise PreconditionError("custom-closure needs func")
        object.__setattr__(self, "params", params)

    def __call__(self, pts) -> np.ndarray:
        x = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.id == "custom-closure":
            return np.asarray(self.func(x, *self.params), dtype=float)
        return np.asarray(CATALOGUE[self.id].func(x, *self.params), dtype=float)

    def support_radius(self) -> Optional[float]:
        """Sup-norm radius outside which the function vanishes, if known."""
        sup = CATALOGUE[self.id].support
        if sup is None:
            return None
        return sup(self.params)

    def scaled(self, amp: float) -> "SymbolSpec":
        """The symbol times ``amp`` (as a closure)."""
        base = self
        return SymbolSpec("custom-closure", (), lambda x: amp * base(x))

    def to_json(self) -> dict:
        return {"id": self.id, "params": list(self.params)}


def sample(spec: SymbolSpec, domain: Box, N) -> GridFunction:
    grid = Grid(domain, N)
    if domain.straddles_hyperplane() and grid.shape[-1] % 2:
        raise PreconditionError("N along x_n must be even when the domain straddles x_n = 0")
    vals = spec(grid.points())
    if not np.all(np.isfinite(vals)):
        raise NonFinite(f"{spec.id} is not finite at some cell centre")
    rad = spec.support_radius()
    ez = rad is not None and all(lo <= -rad and hi >= rad
                                 for lo, hi in zip(domain.lo, domain.hi))
    return GridFunction(grid, vals.reshape(grid.shape), ez)


# ------------------------------------------------------------ extensions

def _half_sign(domain: Box) -> int:
    if domain.lo[-1] == 0.0:
        return 1
    if domain.hi[-1] == 0.0:
        return -1
    raise AsymmetricGrid("half-space grid must have a face on x_n = 0")


def _doubled(f: GridFunction):
    d = f.domain
    L = d.hi[-1] if _half_sign(d) > 0 else -d.lo[-1]
    box = Box(d.lo[:-1] + (-L,), d.hi[:-1] + (L,))
    return Grid(box, f.grid.shape[:-1] + (2 * f.grid.shape[-1],))


def even_extension(f: GridFunction) -> GridFunction:
    """f on the original half, f(x~) on the mirror half."""
    grid = _doubled(f)
    v = f.values
    full = np.concatenate([v[..., ::-1], v], axis=-1) if _half_sign(f.domain) > 0 \
        else np.concatenate([v, v[..., ::-1]], axis=-1)
    return GridFunction(grid, full, f.exterior_zero)


def zero_extension(f: GridFunction) -> GridFunction:
    grid = _doubled(f)
    v = f.values
    z = np.zeros_like(v)
    full = np.concatenate([z, v], axis=-1) if _half_sign(f.domain) > 0 \
        else np.concatenate([v, z], axis=-1)
    return GridFunction(grid, full, f.exterior_zero)


def restrict(f: GridFunction, side: str) -> GridFunction:
    """Restriction to the upper (``'+'``) or lower (``'-'``) half."""
    f.grid.require_symmetric()
    m = f.grid.shape[-1] // 2
    d = f.domain
    if side == "+":
        box = Box(d.lo[:-1] + (0.0,), d.hi)
        v = f.values[..., m:]
    elif side == "-":
        box = Box(d.lo, d.hi[:-1] + (0.0,))
        v = f.values[..., :m]
    else:
        raise PreconditionError("side must be '+' or '-'")
    return GridFunction(Grid(box, f.grid.shape[:-1] + (m,)), v, f.exterior_zero)


def plus_even(f: GridFunction) -> GridFunction:
    return even_extension(restrict(f, "+"))


def minus_even(f: GridFunction) -> GridFunction:
    return even_extension(restrict(f, "-"))


# -------------------------------------------------------------- averages

def _ball_mask(grid: Grid, ball: Ball, sl):
    pts = [grid.axis(a)[s] - ball.center[a] for a, s in enumerate(sl)]
    d2 = np.zeros(tuple(len(p) for p in pts))
    for a, p in enumerate(pts):
        shape = [1] * grid.n
        shape[a] = -1
        d2 = d2 + (p.reshape(shape)) ** 2
    return d2 < ball.radius ** 2 * (1 - 1e-9)


def region_values(f: GridFunction, region: Region, warn=True) -> np.ndarray:
    """Values at the cell centres inside ``region`` (flattened)."""
    box = region.as_box()
    if warn and not f.domain.contains_box(box):
        warnings.warn(f"{region} is not inside {f.domain}", TruncationWarning, stacklevel=3)
    sl = f.grid.index_range(box.lo, box.hi)
    v = f.values[sl]
    if isinstance(region, Ball):
        return v[_ball_mask(f.grid, region, sl)]
    return v.reshape(-1)


def mean(f: GridFunction, region: Region, warn=True) -> float:
    """Midpoint-rule average of f over the cells whose centres lie in ``region``."""
    v = region_values(f, region, warn)
    if v.size == 0:
        raise EmptyRegion(f"no cell centre in {region}")
    return float(np.mean(v))


def _ball_footprint(grid: Grid, radius: float):
    reach = [int(np.floor(radius / h)) for h in grid.h]
    offs = np.meshgrid(*[np.arange(-k, k + 1) * h for k, h in zip(reach, grid.h)],
                       indexing="ij")
    d2 = sum(o ** 2 for o in offs)
    return d2 < radius ** 2 * (1 - 1e-9)


def ball_average(f: GridFunction, radius: float, absolute=False) -> GridFunction:
    """Average of f (or |f|) over B(x, radius) for every cell centre x.

    Balls are clipped to the domain: the average runs over the cells that
    exist.
    """
    v = np.abs(f.values) if absolute else f.values
    # direct windowed sums (no running totals): |avg f| <= avg |f| holds exactly
    fp = _ball_footprint(f.grid, radius).astype(float)
    s = ndimage.correlate(v, fp, mode="constant", cval=0.0)
    cnt = ndimage.correlate(np.ones_like(v), fp, mode="constant", cval=0.0)
    out = s / cnt
    return f.with_values(out, exterior_zero=False)


def _ladder(grid: Grid, limit=1.0):
    h = min(grid.h)
    radii = []
    r = h
    while r < limit:
        radii.append(r)
        r *= 2
    return radii


def maximal_function(f: GridFunction, limit=1.0) -> GridFunction:
    """Restricted centred maximal function on the radius ladder h, 2h, 4h, ... < limit."""
    out = np.zeros(f.grid.shape)
    for r in _ladder(f.grid, limit):
        out = np.maximum(out, ball_average(f, r, absolute=True).values)
    return f.with_values(out, exterior_zero=False)


def restricted_maximal(f: GridFunction, x, limit=1.0) -> float:
    x = as_point(x)
    if not bool(f.domain.contains([x])[0]):
        raise PreconditionError(f"{x} is outside {f.domain}")
    best = 0.0
    for r in _ladder(f.grid, limit):
        v = region_values(f, Ball(x, r), warn=False)
        if v.size:
            best = max(best, float(np.mean(np.abs(v))))
    return best


# --------------------------------------------------------- serialization

_MAGIC = b"VMOG"
_VERSION = 1


def save_binary(f: GridFunction, path) -> None:
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<II", _VERSION, f.n))
    buf.write(struct.pack(f"<{f.n}Q", *f.grid.shape))
    buf.write(struct.pack(f"<{2 * f.n}d", *f.domain.lo, *f.domain.hi))
    buf.write(struct.pack("<B", int(f.exterior_zero)))
    buf.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    Path(path).write_bytes(buf.getvalue())


def load_binary(path) -> GridFunction:
    data = Path(path).read_bytes()
    if data[:4] != _MAGIC:
        raise PreconditionError("not a grid-function file")
    version, n = struct.unpack_from("<II", data, 4)
    if version != _VERSION:
        raise PreconditionError(f"unsupported version {version}")
    off = 12
    shape = struct.unpack_from(f"<{n}Q", data, off)
    off += 8 * n
    bounds = struct.unpack_from(f"<{2 * n}d", data, off)
    off += 16 * n
    (ez,) = struct.unpack_from("<B", data, off)
    off += 1
    vals = np.frombuffer(data, dtype="<f8", offset=off).reshape(shape)
    return GridFunction(Grid(Box(bounds[:n], bounds[n:]), shape), vals.copy(), bool(ez))


def save_csv(f: GridFunction, path) -> None:
    lines = [f"# n={f.n}", "# shape=" + ",".join(map(str, f.grid.shape)),
             "# lo=" + ",".join(repr(v) for v in f.domain.lo),
             "# hi=" + ",".join(repr(v) for v in f.domain.hi),
             f"# exterior_zero={int(f.exterior_zero)}", "value"]
    lines.extend(repr(float(v)) for v in f.flat)
    Path(path).write_text("\n".join(lines) + "\n")


def load_csv(path) -> GridFunction:
    header, vals = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            k, v = line[1:].strip().split("=", 1)
            header[k] = v
        elif line and line != "value":
            vals.append(float(line))
    shape = tuple(int(s) for s in header["shape"].split(","))
    lo = tuple(float(s) for s in header["lo"].split(","))
    hi = tuple(float(s) for s in header["hi"].split(","))
    return GridFunction(Grid(Box(lo, hi), shape), np.array(vals).reshape(shape),
                        bool(int(header.get("exterior_zero", 0))))
