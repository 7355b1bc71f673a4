"""Property-based checks of the structural invariants."""
import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from vmolab import constructions as C
from vmolab.funcspace import Grid, GridFunction, mean, minus_even, plus_even
from vmolab.geometry import Box, Cube, CubeFamily, cube_family, reflect, split_cube
from vmolab.heat import HeatOperator, gaussian_envelope, heat_kernel
from vmolab.oscillation import bmo_norm, family_osc, gamma_curve, mean_osc
from vmolab.singular import KernelSpec, assemble, commutator_apply, commutator_matrix
from vmolab.spectra import full_svd, l2_norm

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
points = st.integers(1, 3).flatmap(lambda n: st.tuples(st.lists(coord, min_size=n, max_size=n),
                                                       st.lists(coord, min_size=n, max_size=n)))
vals16 = hnp.arrays(np.float64, 16, elements=st.floats(-10, 10, allow_nan=False))
vals64 = hnp.arrays(np.float64, 64, elements=st.floats(-10, 10, allow_nan=False))
SYM1 = Box((-1.0,), (1.0,))


@given(points)
def test_reflect_involution_isometry(xy):
    x, y = xy
    assert reflect(reflect(x)) == tuple(map(float, x))
    d = math.dist(x, y)
    assert math.isclose(math.dist(reflect(x), reflect(y)), d, rel_tol=1e-15, abs_tol=0)


@given(st.floats(-0.49, 0.49), st.floats(0.1, 8))
def test_split_cube_volumes(frac, side):
    q = Cube((1.0, frac * side), side)
    up, lo = split_cube(q)
    assert math.isclose(up.volume, q.volume, rel_tol=1e-15)
    assert math.isclose(up.volume + lo.volume, 2 * q.volume, rel_tol=1e-15)


@given(st.integers(1, 6), st.integers(1, 3))
def test_cube_family_monotone(levels, shifts):
    box = Box((-1.0, 0.0), (1.0, 2.0))
    key = lambda fam: {(tuple(c), s) for c, s in zip(fam.centers.tolist(), fam.sides.tolist())}
    assert key(cube_family(box, levels, shifts)) <= key(cube_family(box, levels + 1, shifts))


@given(vals64, vals64, st.floats(-3, 3), st.floats(-0.5, 0.5), st.floats(0.05, 0.9))
def test_mean_linear_monotone(a, b, lam, c, side):
    g = Grid(SYM1, 64)
    fa, fb = GridFunction(g, a), GridFunction(g, b)
    q = Cube((c * 0.5,), side)
    assume(mean_osc.__module__ and np.any(q.contains(g.points())))
    lin = mean(fa * lam + fb, q)
    assert math.isclose(lin, lam * mean(fa, q) + mean(fb, q), rel_tol=1e-9, abs_tol=1e-9)
    hi = GridFunction(g, np.maximum(a, b))
    assert mean(fa, q) <= mean(hi, q) + 1e-12


@given(hnp.arrays(np.float64, (8, 8), elements=st.floats(-5, 5, allow_nan=False)))
def test_even_parts_decompose(v):
    g = Grid(Box.symmetric((1.0, 1.0)), 8)
    f = GridFunction(g, v)
    up = g.upper_mask()
    recon = np.where(up, plus_even(f).values, minus_even(f).values)
    assert np.array_equal(recon, v)


@given(st.sampled_from([op.value for op in HeatOperator]), st.floats(1e-3, 10),
       st.lists(st.floats(0.0, 5.0), min_size=4, max_size=4))
def test_gaussian_upper_bound(op, t, c):
    x, y = np.array(c[:2]), np.array(c[2:])
    if op == "neumann-minus":
        x, y = -x, -y
    p = heat_kernel(op, t, x, y)
    assert p <= 2 * gaussian_envelope(t, x, y) * (1 + 1e-12)


@given(vals64, st.integers(-3, 3), st.integers(-20, 20))
def test_bmo_shift_scale_invariance(v, k, shift):
    lam = 2.0 ** k
    c = shift * 2.0 ** -5
    g = Grid(SYM1, 64)
    fam = cube_family(SYM1, 5, 2)
    moved_box = Box((lam * -1.0 + c,), (lam * 1.0 + c,))
    fam2 = CubeFamily(fam.centers * lam + c, fam.sides * lam, fam.provenance, None, moved_box)
    a = bmo_norm(GridFunction(g, v), fam).value
    b = bmo_norm(GridFunction(Grid(moved_box, 64), v), fam2).value
    assert math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)


@given(vals64, st.integers(0, 2 ** 16))
def test_bmo_family_monotone(v, seed):
    f = GridFunction(Grid(SYM1, 64), v)
    small = cube_family(SYM1, 3)
    extra = cube_family(SYM1, 4, 2, n_random=30, seed=seed)
    assert bmo_norm(f, small.union(extra)).value >= bmo_norm(f, small).value


@given(vals64)
def test_p_monotone_per_cube(v):
    f = GridFunction(Grid(SYM1, 64), v)
    fam = cube_family(SYM1, 4, 2)
    o1 = family_osc(f, fam, None, 1).values
    o2 = family_osc(f, fam, None, 2).values
    ok = ~np.isnan(o1)
    assert np.all(o1[ok] <= o2[ok] * (1 + 1e-12) + 1e-12)


@given(vals64)
def test_gamma_curves_monotone(v):
    f = GridFunction(Grid(SYM1, 64), v)
    fam = cube_family(SYM1, 5, 2)
    r = np.linspace(0.05, 1.0, 12)
    g1 = gamma_curve(f, "gamma1", "classical", fam, r).sup_values
    g2 = gamma_curve(f, "gamma2", "classical", fam, r).sup_values
    g3 = gamma_curve(f, "gamma3", "classical", fam, r).sup_values
    d = lambda a: np.diff(a[~np.isnan(a)])
    assert np.all(d(g1) >= 0) and np.all(d(g2) <= 0) and np.all(d(g3) <= 0)


@given(vals64, st.floats(0.1, 5))
def test_truncation_per_cube(v, level):
    f = GridFunction(Grid(SYM1, 64), v)
    fam = cube_family(SYM1, 4, 2)
    a = family_osc(C.truncate(f, level), fam, None, 1).values
    b = family_osc(f, fam, None, 1).values
    ok = ~np.isnan(a)
    assert np.all(a[ok] <= 2 * b[ok] + 1e-12)


_G2 = Grid(Box.symmetric((1.0, 1.0)), 8)
_R = {j: assemble(KernelSpec("riesz", j), _G2) for j in (1, 2)}


def _even(v):
    return v + v[:, ::-1]


@given(hnp.arrays(np.float64, (8, 8), elements=st.floats(-3, 3, allow_nan=False)),
       hnp.arrays(np.float64, (8, 8), elements=st.floats(-3, 3, allow_nan=False)))
def test_parity_transport_and_energy(bv, fv):
    b, f = GridFunction(_G2, _even(bv)), GridFunction(_G2, _even(fv))
    up = _G2.upper_mask()
    for j, sign in ((1, 1.0), (2, -1.0)):
        u = commutator_apply(b, _R[j], f).values
        scale = 1 + np.max(np.abs(u))
        assert np.max(np.abs(u[:, ::-1] - sign * u)) <= 1e-12 * scale
        for p in (1.0, 2.0, 3.0):
            total = np.sum(np.abs(u) ** p)
            half = 2 * np.sum(np.abs(u[up]) ** p)
            assert math.isclose(total, half, rel_tol=1e-11, abs_tol=1e-12)


_G1 = Grid(SYM1, 16)
_RN = assemble(KernelSpec("riesz-neumann", 1), _G1)


@given(vals16, st.floats(0.125, 8))
def test_spectral_homogeneity(bv, lam):
    assume(np.ptp(bv) > 1e-3)
    b = GridFunction(_G1, bv)
    s1 = full_svd(commutator_matrix(b, _RN)).sigma
    s2 = full_svd(commutator_matrix(b * lam, _RN)).sigma
    assert np.allclose(s2, lam * s1, rtol=1e-10, atol=1e-12 * lam * s1[0])
    assert math.isclose(l2_norm(commutator_matrix(b * lam, _RN)), lam * s1[0], rel_tol=1e-6)


@given(vals64, st.floats(-0.6, 0.6), st.floats(0.2, 0.8), st.sampled_from([1.0, 1.5, 2.0]))
def test_witness_zero_mean(v, c, side, p):
    assume(np.ptp(v) > 1e-6)
    f = GridFunction(Grid(SYM1, 64), v)
    q = Cube((c * (1 - side / 2) / 0.6 * 0.6 if abs(c) + side / 2 <= 1 else 0.0,), side)
    try:
        g = C.oscillation_witness(f, q, p)
    except Exception as e:  # constant on the cube
        assert type(e).__name__ == "ConstantSymbol"
        return
    assert abs(np.sum(g.values)) <= 1e-12 * (1 + np.max(np.abs(g.values))) * 64
