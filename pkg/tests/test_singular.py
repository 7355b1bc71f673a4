import math

import mpmath
import numpy as np
import pytest

from vmolab.errors import PreconditionError, SingularPoint, SizeCap
from vmolab.funcspace import Grid, GridFunction, SymbolSpec, sample
from vmolab.geometry import Box
from vmolab.singular import (KernelSpec, OperatorMatrix, apply, assemble, c_alpha,
                             check_restriction_identity, commutator_apply, commutator_matrix,
                             frac_kernel, frac_neumann_kernel, riesz_kernel,
                             riesz_neumann_kernel, self_cell_integral)

SYM1 = Box((-1.0,), (1.0,))


def test_riesz_values():
    assert riesz_kernel(1, (2.0,), (1.0,)) == 1.0
    assert riesz_kernel(1, (1.0, 0.0), (0.0, 0.0)) == 1.0
    with pytest.raises(SingularPoint):
        riesz_kernel(1, (0.5,), (0.5,))


def test_riesz_antisymmetric(rng):
    x, y = rng.normal(size=(2, 100, 2))
    for j in (1, 2):
        assert np.array_equal(riesz_kernel(j, x, y), -riesz_kernel(j, y, x))


def test_riesz_neumann_values():
    assert riesz_neumann_kernel(1, (0.5,), (-0.5,)) == 0.0
    assert riesz_neumann_kernel(1, (0.5,), (0.25,)) == pytest.approx(16 / 3, rel=1e-15)


def test_riesz_neumann_reflection_invariance(rng):
    x = rng.uniform(0.05, 2, (200, 2)) * rng.choice([-1, 1], (200, 2))
    y = np.abs(rng.uniform(0.05, 2, (200, 2))) * np.sign(x)
    xr, yr = x * [1, -1], y * [1, -1]
    assert np.allclose(riesz_neumann_kernel(1, xr, yr), riesz_neumann_kernel(1, x, y),
                       rtol=1e-13, atol=0)
    assert np.allclose(riesz_neumann_kernel(2, xr, yr), -riesz_neumann_kernel(2, x, y),
                       rtol=1e-13, atol=0)


def test_c_alpha_values():
    assert c_alpha(1, 0.5) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-14)
    assert c_alpha(2, 1.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    want = mpmath.gamma(0.75) / (mpmath.gamma(0.25) * mpmath.sqrt(2) * mpmath.pi)
    assert c_alpha(2, 0.5) == pytest.approx(float(want), rel=1e-14)
    with pytest.raises(PreconditionError):
        c_alpha(1, 1.0)


def test_frac_kernel_values():
    c = c_alpha(1, 0.5)
    assert frac_kernel(0.5, (0.0,), (1.0,)) == pytest.approx(c, rel=1e-15)
    assert frac_neumann_kernel(0.5, (0.5,), (-0.25,)) == 0.0
    want = c * (1 / 0.25 ** 0.5 + 1 / 0.75 ** 0.5)
    assert frac_neumann_kernel(0.5, (0.5,), (0.25,)) == pytest.approx(want, rel=1e-15)


def test_self_cell_integral_matches_quadrature():
    h, a = 0.1, 0.5
    assert self_cell_integral(a, h) == pytest.approx(2 * (h / 2) ** a / a, rel=1e-15)
    # 2-D: integrate |z|^{a-2} over the square in polar form with mpmath
    oracle = 8 * mpmath.quad(lambda th: mpmath.quad(lambda r: r ** (a - 1),
                                                    [0, (h / 2) / mpmath.cos(th)]),
                             [0, mpmath.pi / 4])
    assert self_cell_integral(a, (h, h)) == pytest.approx(float(oracle), rel=1e-10)
    oracle_rect = mpmath.quad(lambda u, v: (u * u + v * v) ** ((a - 2) / 2),
                              [0, 0.05], [0, 0.025]) * 4
    assert self_cell_integral(a, (0.1, 0.05)) == pytest.approx(float(oracle_rect), rel=1e-6)


def test_assemble_diagonals():
    g = Grid(SYM1, 64)
    R = assemble(KernelSpec("riesz", 1), g)
    assert np.all(np.diag(R.matrix) == 0.0)
    assert np.array_equal(R.matrix, -R.matrix.T)
    F = assemble(KernelSpec("frac", alpha=0.5), g)
    h = g.h[0]
    assert np.allclose(np.diag(F.matrix), c_alpha(1, 0.5) * 2 * (h / 2) ** 0.5 / 0.5,
                       rtol=1e-15, atol=0)


def test_neumann_cross_blocks_vanish():
    g = Grid(Box.symmetric((1.0, 1.0)), 16)
    A = assemble(KernelSpec("riesz-neumann", 2), g).matrix
    up = g.upper_mask().reshape(-1)
    assert np.all(A[np.ix_(up, ~up)] == 0) and np.all(A[np.ix_(~up, up)] == 0)


def test_commutator_constant_and_linearity(rng):
    g = Grid(SYM1, 128)
    A = assemble(KernelSpec("riesz-neumann", 1), g)
    c = sample(SymbolSpec("constant", (3.0,)), SYM1, 128)
    f1, f2 = (GridFunction(g, rng.standard_normal(128)) for _ in range(2))
    assert np.all(commutator_apply(c, A, f1).values == 0.0)
    b = sample(SymbolSpec("gaussian", (1.0, 0.3)), SYM1, 128)
    lhs = commutator_apply(b, A, f1 * 2.0 + f2).values
    rhs = 2.0 * commutator_apply(b, A, f1).values + commutator_apply(b, A, f2).values
    assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)


def test_commutator_kernel_form(rng):
    g = Grid(SYM1, 64)
    A = assemble(KernelSpec("riesz", 1), g)
    b = GridFunction(g, rng.standard_normal(64))
    f = GridFunction(g, rng.standard_normal(64))
    x = g.axis(0)
    h = g.h[0]
    want = np.array([sum((0.0 if i == j else 1 / (x[i] - x[j])) * (b.values[i] - b.values[j])
                         * f.values[j] * h for j in range(64)) for i in range(64)])
    assert np.allclose(commutator_apply(b, A, f).values, want, rtol=0, atol=1e-11)
    direct = b.values * apply(A, f).values - apply(A, b * f).values
    assert np.allclose(commutator_apply(b, A, f).values, direct, rtol=0, atol=1e-11)


def test_restriction_identity_examples(rng):
    box = Box.symmetric((2.0,))
    g = Grid(box, 256)
    b = sample(SymbolSpec("thm36-example"), box, 256)
    f = GridFunction(g, np.where(g.upper_mask(), rng.standard_normal(256), 0.0))
    assert check_restriction_identity(b, 1, f) <= 1e-12
    c = sample(SymbolSpec("constant", (2.0,)), box, 256)
    assert check_restriction_identity(c, 1, f) == 0.0


def test_restriction_identity_four_points():
    # hand-expanded on x = (-0.75, -0.25, 0.25, 0.75), upper cells only
    g = Grid(Box.symmetric((1.0,)), 4)
    b = GridFunction(g, np.array([5.0, -1.0, 2.0, 3.0]))
    f = GridFunction(g, np.array([0.0, 0.0, 1.0, -2.0]))
    xs, bs, fs, h = [0.25, 0.75], [2.0, 3.0], [1.0, -2.0], 0.5
    lhs = [sum((1 / (x - y) + 1 / (x + y)) * (bx - by) * fy * h
               for y, by, fy in zip(xs, bs, fs) if y != x) + (bx - bx) / (2 * x) * fx * h
           for x, bx, fx in zip(xs, bs, fs)]
    A = assemble(KernelSpec("riesz-neumann", 1), g)
    got = commutator_apply(b, A, f).values[2:]
    assert np.allclose(got, lhs, rtol=0, atol=1e-14)
    assert check_restriction_identity(b, 1, f) <= 1e-14


def test_cache_round_trip(tmp_path):
    g = Grid(SYM1, 32)
    a = assemble(KernelSpec("frac-neumann", alpha=0.5), g, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 1
    b = assemble(KernelSpec("frac-neumann", alpha=0.5), g, cache_dir=tmp_path)
    assert np.array_equal(a.matrix, b.matrix) and b.spec == a.spec
    a.dump(tmp_path / "x.bin")
    c = OperatorMatrix.load(tmp_path / "x.bin")
    assert c.grid == g and np.array_equal(c.matrix, a.matrix)


def test_size_cap(monkeypatch):
    monkeypatch.setenv("VMOLAB_MAX_MATRIX", "16")
    with pytest.raises(SizeCap):
        assemble(KernelSpec("riesz", 1), Grid(SYM1, 32))
