"""Axis-aligned regions, the reflection x -> x~ and cube families.

Points are plain tuples of floats; the last coordinate is x_n, the one
the reflection flips. Cubes and boxes are half-open on their upper faces
so lattices tile without overlap.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import NotStraddling, PreconditionError

__all__ = [
    "Ball", "Box", "Cube", "CubeFamily", "as_point", "cube_family",
    "reflect", "reflect_cube", "split_cube",
]

_TOL = 1e-12


def as_point(x) -> tuple:
    if np.isscalar(x):
        return (float(x),)
    return tuple(float(v) for v in x)


def reflect(x) -> tuple:
    """Negate the last coordinate."""
    p = as_point(x)
    return p[:-1] + (-p[-1],)


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = as_point(self.lo), as_point(self.hi)
        if len(lo) != len(hi):
            raise PreconditionError("lo and hi differ in dimension")
        if any(a >= b for a, b in zip(lo, hi)):
            raise PreconditionError(f"empty box {lo} -> {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def symmetric(cls, half_widths) -> "Box":
        w = as_point(half_widths)
        return cls(tuple(-v for v in w), w)

    @property
    def n(self) -> int:
        return len(self.lo)

    @property
    def extent(self) -> tuple:
        return tuple(b - a for a, b in zip(self.lo, self.hi))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def center(self) -> tuple:
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        return np.all((pts >= lo) & (pts < hi), axis=-1)

    def contains_box(self, other: "Box", tol=_TOL) -> bool:
        return all(a >= c - tol and b <= d + tol
                   for a, b, c, d in zip(other.lo, other.hi, self.lo, self.hi))

    def intersects(self, other: "Box") -> bool:
        return all(a < d and c < b
                   for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def straddles_hyperplane(self) -> bool:
        return self.lo[-1] < 0 < self.hi[-1]

    def is_symmetric(self, tol=_TOL) -> bool:
        """True when the box is mirror-symmetric about x_n = 0."""
        return abs(self.lo[-1] + self.hi[-1]) <= tol * max(1.0, self.hi[-1])

    def reflected(self) -> "Box":
        return Box(self.lo[:-1] + (-self.hi[-1],), self.hi[:-1] + (-self.lo[-1],))

    def as_box(self) -> "Box":
        return self


@dataclass(frozen=True)
class Cube:
    center: tuple
    side: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.side > 0:
            raise PreconditionError("cube side must be positive")
        object.__setattr__(self, "side", float(self.side))

    @property
    def n(self) -> int:
        return len(self.center)

    @property
    def volume(self) -> float:
        return self.side ** self.n

    @property
    def lo(self) -> tuple:
        return tuple(c - self.side / 2 for c in self.center)

    @property
    def hi(self) -> tuple:
        return tuple(c + self.side / 2 for c in self.center)

    def as_box(self) -> Box:
        return Box(self.lo, self.hi)

    def contains(self, pts) -> np.ndarray:
        return self.as_box().contains(pts)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_point(self.center))
        if not self.radius > 0:
            raise PreconditionError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def n(self) -> int:
        return len(self.center)

    def as_box(self) -> Box:
        """Bounding box."""
        return Box(tuple(c - self.radius for c in self.center),
                   tuple(c + self.radius for c in self.center))

    def contains(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = pts - np.asarray(self.center)
        return np.einsum("...i,...i->...", d, d) < self.radius ** 2


def reflect_cube(q: Cube) -> Cube:
    return Cube(reflect(q.center), q.side)


def split_cube(q: Cube) -> tuple[Box, Box]:
    """The two boxes Q^_+ and Q^_- attached to a cube crossing x_n = 0.

    Both share the cube's (n-1)-dimensional face and have height side(Q),
    one above and one below the hyperplane.
    """
    lo, hi = q.lo, q.hi
    if lo[-1] >= 0 or hi[-1] <= 0:
        raise NotStraddling(f"cube {q} lies in one closed half-space")
    upper = Box(lo[:-1] + (0.0,), hi[:-1] + (q.side,))
    lower = Box(lo[:-1] + (-q.side,), hi[:-1] + (0.0,))
    return upper, lower


@dataclass(frozen=True)
class CubeFamily:
    """A finite list of cubes stored as arrays (centers ``(M, n)``, sides ``(M,)``)."""

    centers: np.ndarray
    sides: np.ndarray
    provenance: str = "dyadic-multiscale"
    seed: Optional[int] = None
    ambient: Optional[Box] = field(default=None, compare=False)

    def __post_init__(self):
        c = np.array(self.centers, dtype=float, ndmin=2)
        s = np.array(self.sides, dtype=float).reshape(-1)
        if c.shape[0] != s.shape[0]:
            raise PreconditionError("centers and sides differ in length")
        if np.any(s <= 0):
            raise PreconditionError("cube sides must be positive")
        if self.provenance not in ("dyadic-multiscale", "shifted-lattice", "random-seeded"):
            raise PreconditionError(f"unknown provenance {self.provenance!r}")
        if (self.provenance == "random-seeded") != (self.seed is not None):
            raise PreconditionError("seed is present iff provenance is random-seeded")
        c.flags.writeable = False
        s.flags.writeable = False
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "sides", s)

    @classmethod
    def from_cubes(cls, cubes: Sequence[Cube], **kw) -> "CubeFamily":
        return cls(np.array([q.center for q in cubes]), np.array([q.side for q in cubes]), **kw)

    @property
    def n(self) -> int:
        return self.centers.shape[1]

    def __len__(self) -> int:
        return self.sides.shape[0]

    def __getitem__(self, i) -> Cube:
        return Cube(tuple(self.centers[i]), float(self.sides[i]))

    def __iter__(self) -> Iterator[Cube]:
        for i in range(len(self)):
            yield self[i]

    @property
    def lo(self) -> np.ndarray:
        return self.centers - self.sides[:, None] / 2

    @property
    def hi(self) -> np.ndarray:
        return self.centers + self.sides[:, None] / 2

    def subset(self, mask) -> "CubeFamily":
        return CubeFamily(self.centers[mask], self.sides[mask], self.provenance,
                          self.seed, self.ambient)

    def union(self, other: "CubeFamily") -> "CubeFamily":
        prov, seed = self.provenance, self.seed
        if other.provenance == "random-seeded" and seed is None:
            prov, seed = other.provenance, other.seed
        return CubeFamily(np.vstack([self.centers, other.centers]),
                          np.concatenate([self.sides, other.sides]), prov, seed, self.ambient)

    def to_records(self) -> list:
        return [{"center": list(map(float, c)), "side": float(s)}
                for c, s in zip(self.centers, self.sides)]


def _lattice(ambient: Box, side: float, offset_frac: Sequence[float]):
    axes = []
    for a, (lo, hi) in enumerate(zip(ambient.lo, ambient.hi)):
        start = lo + offset_frac[a] * side
        count = int(np.floor((hi - start) / side + 1e-9))
        axes.append(start + side * (np.arange(count) + 0.5))
    if any(len(ax) == 0 for ax in axes):
        return np.empty((0, ambient.n))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.reshape(-1) for m in mesh], axis=-1)


def cube_family(ambient: Box, levels: int, shifts: int = 1, n_random: int = 0,
                seed: int = 0, lattice_levels: Optional[int] = None,
                random_levels: Optional[int] = None) -> CubeFamily:
    """Multiscale lattice cubes plus seeded random cubes, all inside ``ambient``.

    Level k uses side ``min(extent) / 2**k``. Each level contributes
    ``shifts**n`` lattices offset by ``i/shifts`` of a side along each axis;
    offset cubes that would leave the ambient box are dropped. Random sides
    are log-uniform over the finest ``random_levels`` octaves (default: all
    ``levels``). ``lattice_levels`` stops the lattices early so fine scales
    are covered by random cubes only.
    """
    if levels < 1 or shifts < 1:
        raise PreconditionError("levels and shifts must be >= 1")
    base = min(ambient.extent)
    centers, sides = [], []
    offsets = [i / shifts for i in range(shifts)]
    n_lattice = levels if lattice_levels is None else min(levels, lattice_levels)
    for k in range(n_lattice):
        s = base / 2 ** k
        for off in itertools.product(offsets, repeat=ambient.n):
            c = _lattice(ambient, s, off)
            centers.append(c)
            sides.append(np.full(len(c), s))
    if n_random > 0:
        rng = np.random.default_rng(seed)
        span = levels if random_levels is None else min(levels, random_levels)
        u = rng.random(n_random)
        s = base * 2.0 ** (-levels + span * u)
        w = rng.random((n_random, ambient.n))
        lo, hi = np.asarray(ambient.lo), np.asarray(ambient.hi)
        c = lo + s[:, None] / 2 + w * ((hi - lo) - s[:, None])
        centers.append(c)
        sides.append(s)
    if n_random > 0:
        prov, fam_seed = "random-seeded", int(seed)
    else:
        prov, fam_seed = ("shifted-lattice" if shifts > 1 else "dyadic-multiscale"), None
    return CubeFamily(np.vstack(centers), np.concatenate(sides), prov, fam_seed, ambient)
