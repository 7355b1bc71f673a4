import math

import numpy as np
import pytest

from vmolab.errors import EmptyRegion, TruncationError
from vmolab.funcspace import Grid, GridFunction, SymbolSpec, even_extension, restrict, sample
from vmolab.geometry import Ball, Box, Cube, cube_family, split_cube
from vmolab.oscillation import (bmo_L_norm, bmo_norm, gamma_curve, mean_osc, semigroup_osc,
                                variant_norms, vmo_diagnostic)

SYM1 = Box((-1.0,), (1.0,))


def test_mean_osc_constant_and_half_indicator():
    c = sample(SymbolSpec("constant", (4.0,)), SYM1, 64)
    assert mean_osc(c, Cube((0.0,), 1.0)) == 0.0
    s = sample(SymbolSpec("heaviside-sign"), SYM1, 64)
    ind = s.with_values((s.values + 1) / 2)
    assert mean_osc(ind, Cube((0.0,), 1.0), 1) == 0.5


def test_mean_osc_log():
    f = sample(SymbolSpec("neg-log-abs"), SYM1, 8192)
    assert abs(mean_osc(f, Ball((0.0,), 0.5)) / (2 / math.e) - 1) <= 0.01


def test_mean_osc_too_small():
    f = sample(SymbolSpec("constant"), SYM1, 8)
    with pytest.raises(EmptyRegion):
        mean_osc(f, Cube((0.0,), 0.3))


def test_bmo_norm_examples():
    fam = cube_family(SYM1, 6)
    assert bmo_norm(sample(SymbolSpec("constant"), SYM1, 128), fam).value == 0.0
    rep = bmo_norm(sample(SymbolSpec("heaviside-sign"), SYM1, 128), fam)
    assert rep.value == 1.0 and rep.argmax_cube == Cube((0.0,), 2.0)


def test_bmo_norm_psi8():
    box = Box((-2.0 ** 9,), (2.0 ** 9,))
    f = sample(SymbolSpec("psi-ell", (8,)), box, 2 ** 16)
    fam = cube_family(box, 12, 2, n_random=2000, seed=1)
    assert bmo_norm(f, fam).value <= 2.0


def test_semigroup_osc_constant():
    box = Box((-8.0,), (8.0,))
    c = sample(SymbolSpec("constant", (2.0,)), box, 2048)
    for op in ("neumann-full", "laplace"):
        assert semigroup_osc(c, Cube((0.3,), 0.5), op) <= 1e-6
    up = sample(SymbolSpec("constant", (2.0,)), Box((0.0,), (8.0,)), 1024)
    assert semigroup_osc(up, Cube((0.5,), 0.5), "neumann-plus") <= 1e-6


def test_semigroup_osc_reflection():
    fh = sample(SymbolSpec("sine-bump", (1.0, 2.0)), Box((0.0,), (16.0,)), 2048)
    fe = even_extension(fh)
    for q in (Cube((0.5,), 0.5), Cube((1.25,), 1.0)):
        a = semigroup_osc(fe, q, "laplace")
        b = semigroup_osc(fh, q, "neumann-plus")
        assert abs(a - b) <= 1e-14


@pytest.mark.parametrize("centre", [0.1, -0.2, 0.0])
def test_semigroup_osc_splitting_inequality(centre):
    f = sample(SymbolSpec("thm36-example"), Box((-8.0,), (8.0,)), 2048)
    q = Cube((centre,), 1.0)
    up, lo = split_cube(q)
    lhs = semigroup_osc(f, q, "neumann-full")
    rhs = (semigroup_osc(restrict(f, "+"), up, "neumann-plus")
           + semigroup_osc(restrict(f, "-"), lo, "neumann-minus"))
    assert lhs <= rhs + 1e-12


def test_bmo_L_examples():
    box = Box((-8.0,), (8.0,))
    fam = cube_family(box, 10, 2)
    c = sample(SymbolSpec("constant"), box, 4096)
    assert bmo_L_norm(c, "neumann-full", fam, skip_truncated=True).value <= 1e-6
    with pytest.raises(TruncationError):
        bmo_L_norm(c, "neumann-full", fam)
    f = sample(SymbolSpec("thm36-example"), box, 4096)
    g = sample(SymbolSpec("thm36-g"), box, 4096)
    ratio = (bmo_L_norm(f, "L=ΔN", fam).value / bmo_norm(g, fam).value)
    assert 1 / 20 <= ratio <= 20
    lg = sample(SymbolSpec("log-abs"), box, 4096)
    assert bmo_L_norm(lg, "neumann-full", fam, skip_truncated=True).value > 0.3


def test_gamma_curves():
    box = Box((-4.0,), (4.0,))
    fam = cube_family(box, 9, 2)
    r = sorted(set(fam.sides.tolist()))
    c = sample(SymbolSpec("constant"), box, 2048)
    assert np.all(gamma_curve(c, "gamma1", "classical", fam, r).sup_values == 0.0)
    g = sample(SymbolSpec("gaussian", (1.0, 1.0)), box, 2048)
    curve = gamma_curve(g, "gamma1", "classical", fam, r)
    v = curve.sup_values[~np.isnan(curve.sup_values)]
    assert np.all(np.diff(v) >= 0) and v[0] <= 1e-2
    lg = sample(SymbolSpec("log-abs"), box, 2048)
    lc = gamma_curve(lg, "gamma1", "classical", fam, r, p=1)
    v = lc.sup_values[~np.isnan(lc.sup_values)]
    assert np.all(v >= 0.5 * 2 / math.e)


def test_vmo_diagnostic_examples():
    # gamma2 decays like |Q|^(-1/2) for p = 2, so the box must dwarf the bump
    big = Box((-512.0,), (512.0,))
    fam = cube_family(big, 14, 2)
    g = sample(SymbolSpec("gaussian", (1.0, 1.0)), big, 32768)
    assert vmo_diagnostic(g, "neumann-full", fam)["verdict"] is True
    assert vmo_diagnostic(g, "classical", fam)["verdict"] is True
    box = Box((-8.0,), (8.0,))
    fam = cube_family(box, 11, 2)
    lg = sample(SymbolSpec("log-abs"), box, 4096)
    d = vmo_diagnostic(lg, "classical", fam)
    assert d["verdict"] is False and d["gamma1_tail"] >= 0.3


def test_variant_norms_examples():
    box = Box((0.0,), (4.0,))
    c = variant_norms(sample(SymbolSpec("constant", (2.0,)), box, 512))
    assert c["bmo_e"] == 0.0 and c["bmo_z"] > 0
    x = variant_norms(sample(SymbolSpec("coordinate"), box, 512))
    assert 1 / 20 <= x["bmo_neumann"] / x["bmo_e"] <= 20
    s = variant_norms(sample(SymbolSpec("sine-bump", (1.0, 2.0)), box, 512))
    assert all(np.isfinite(v) for v in s.values())
