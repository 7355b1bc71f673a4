import math

import numpy as np
import pytest

from vmolab.errors import NonFinite, PreconditionError
from vmolab.funcspace import (Grid, GridFunction, SymbolSpec, ball_average, even_extension,
                              load_binary, load_csv, maximal_function, mean, minus_even,
                              plus_even, restrict, restricted_maximal, sample, save_binary,
                              save_csv, zero_extension)
from vmolab.geometry import Ball, Box, Cube

SYM1 = Box((-1.0,), (1.0,))
UP1 = Box((0.0,), (1.0,))


def test_sample_constant():
    f = sample(SymbolSpec("constant"), Box((-1.0, 0.0), (1.0, 3.0)), 8)
    assert np.all(f.values == 1.0)


def test_sample_neg_log_cell_centres():
    f = sample(SymbolSpec("neg-log-abs"), SYM1, 4)
    want = [math.log(1 / 0.75), math.log(1 / 0.25), math.log(1 / 0.25), math.log(1 / 0.75)]
    assert np.allclose(f.values, want, rtol=0, atol=1e-15)


def test_thm36_sign_flip():
    f = sample(SymbolSpec("thm36-example"), Box.symmetric((2.0, 2.0)), 16)
    g = sample(SymbolSpec("thm36-g"), Box.symmetric((2.0, 2.0)), 16)
    up = f.grid.upper_mask()
    assert np.array_equal(f.values[up], g.values[up])
    assert np.array_equal(f.values[..., ::-1][up], -g.values[up])


def test_odd_N_rejected_on_straddling_box():
    with pytest.raises(PreconditionError):
        sample(SymbolSpec("constant"), SYM1, 5)


def test_nonfinite_rejected():
    with pytest.raises(NonFinite):
        GridFunction(Grid(SYM1, 4), np.array([1.0, np.nan, 0.0, 0.0]))


def test_even_extension_examples():
    one = sample(SymbolSpec("constant"), UP1, 8)
    assert np.all(even_extension(one).values == 1.0)
    x = sample(SymbolSpec("coordinate"), UP1, 8)
    fe = even_extension(x)
    assert fe.domain == SYM1
    assert np.array_equal(fe.values, np.abs(fe.grid.axis(0)))


def test_even_extension_round_trip():
    f = sample(SymbolSpec("gaussian", (1.0, 0.4)), SYM1, 32)
    assert np.array_equal(even_extension(restrict(f, "+")).values, f.values)


def test_zero_extension_examples():
    one = sample(SymbolSpec("constant"), UP1, 8)
    fz = zero_extension(one)
    assert np.array_equal(fz.values, (fz.grid.axis(0) > 0).astype(float))
    assert np.all(restrict(fz, "-").values == 0.0)


def test_zero_extension_sum_is_even_extension():
    f = sample(SymbolSpec("sine-bump", (1.0, 3.0)), UP1, 16)
    fz = zero_extension(f).values
    mirrored = fz[::-1]
    assert np.array_equal(fz + mirrored, even_extension(f).values)


def test_restrict_indicator():
    ind = sample(SymbolSpec("heaviside-sign"), SYM1, 16)
    ind = ind.with_values((ind.values + 1) / 2)
    assert np.all(restrict(ind, "+").values == 1.0)
    assert np.all(restrict(ind, "-").values == 0.0)


def test_plus_minus_even():
    box = Box.symmetric((2.0, 2.0))
    f = sample(SymbolSpec("thm36-example"), box, 32)
    g = sample(SymbolSpec("thm36-g"), box, 32)
    assert np.array_equal(plus_even(f).values, g.values)
    assert np.array_equal(minus_even(f).values, -g.values)
    assert np.array_equal(plus_even(g).values, g.values)
    pe = plus_even(sample(SymbolSpec("sine-bump"), box, 32)).values
    assert np.array_equal(pe, pe[..., ::-1])


def test_mean_examples():
    c = sample(SymbolSpec("constant", (2.5,)), SYM1, 64)
    assert mean(c, Cube((0.1,), 0.5)) == pytest.approx(2.5, abs=1e-15)
    x = sample(SymbolSpec("coordinate"), Box((0.0,), (1.0,)), 64)
    assert mean(x, Box((0.0,), (1.0,))) == pytest.approx(0.5, abs=1e-15)
    f = sample(SymbolSpec("neg-log-abs"), SYM1, 8192)
    assert abs(mean(f, Ball((0.0,), 0.5)) - (math.log(2) + 1)) <= 1e-3


def test_restricted_maximal_examples():
    one = sample(SymbolSpec("constant"), SYM1, 64)
    assert restricted_maximal(one, (0.3,)) == pytest.approx(1.0, abs=1e-15)
    assert np.allclose(maximal_function(one).values, 1.0, atol=1e-14)
    box = Box((-1.0,), (3.0,))
    ind = sample(SymbolSpec("constant"), box, 256)
    x = ind.grid.axis(0)
    ind = ind.with_values(((x >= 0) & (x < 1)).astype(float))
    assert restricted_maximal(ind, (2.0,)) == 0.0


def test_maximal_dominates_small_ball(rng):
    f = GridFunction(Grid(SYM1, 128), rng.standard_normal(128))
    M = maximal_function(f).values
    h = f.grid.h[0]
    assert np.all(M >= ball_average(f, h, absolute=True).values - 1e-15)


def test_serialisation_round_trip(tmp_path):
    f = sample(SymbolSpec("gaussian", (1.0, 0.3)), Box((-1.0, 0.0), (1.0, 2.0)), (8, 6))
    save_binary(f, tmp_path / "f.bin")
    save_csv(f, tmp_path / "f.csv")
    for g in (load_binary(tmp_path / "f.bin"), load_csv(tmp_path / "f.csv")):
        assert g.grid == f.grid and np.array_equal(g.values, f.values)


def test_symbol_arity():
    with pytest.raises(PreconditionError):
        SymbolSpec("gaussian", (1, 2, 3))
    with pytest.raises(PreconditionError):
        SymbolSpec("nope")
