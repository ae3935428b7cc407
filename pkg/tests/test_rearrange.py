import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from varseq.luxemburg import Grid, GridFunction
from varseq.rearrange import (NonIncreasingProfile, check_subadditivity, grid_lp_norm,
                              rearrange_grid, rearrange_row, sum_profile_norm)
from varseq.spaces import CoefficientField, synthesize_level

G = Grid([(0.0, 1.0)], 3)


@pytest.mark.parametrize("L", [0, 2, 5])
def test_indicator_profile(L):
    g = Grid([(0.0, 2.0)], L)
    prof = rearrange_grid(GridFunction.indicator(g, 0.0, 1.0))
    assert prof.pairs() == [(1.0, 1.0)]
    assert prof.total_measure == 2.0


def test_two_step_profile():
    f = GridFunction(Grid([(0.0, 1.0)], 1), [1.0, 3.0])
    assert rearrange_grid(f).pairs() == [(3.0, 0.5), (1.0, 0.5)]


def test_profile_evaluation_is_right_continuous():
    prof = rearrange_grid(GridFunction(Grid([(0.0, 1.0)], 1), [1.0, 3.0]))
    assert prof(0.0) == 3.0 and prof(0.5) == 1.0 and prof(1.0) == 0.0
    assert prof.plot_rows() == [(0.0, 3.0), (0.5, 1.0), (1.0, 0.0)]


def test_profile_validation():
    with pytest.raises(ValueError):
        NonIncreasingProfile(np.array([1.0, 2.0]), np.array([1.0, 1.0]), 2.0)
    with pytest.raises(ValueError):
        NonIncreasingProfile(np.array([1.0]), np.array([0.0]), 1.0)


def test_row_examples():
    g = CoefficientField.from_entries({(0, (0,)): 1.0, (0, (1,)): 3.0}, 1, box=[(0.0, 2.0)])
    r = rearrange_row(g, 0)
    assert list(r.values) == [3.0, 1.0]
    assert r[5] == 0.0
    g = CoefficientField.from_entries({(2, (m,)): 1.0 for m in range(5)}, 1, box=[(0.0, 2.0)])
    r = rearrange_row(g, 2)
    assert list(r.values) == [1.0] * 5 + [0.0] * 3
    assert r.profile().pairs() == [(1.0, 5 * 0.25)]
    with pytest.raises(ValueError):
        rearrange_row(g, 3)


values16 = st.lists(st.one_of(st.just(0.0), st.floats(1e-3, 1e3), st.sampled_from([1.0, 2.0])),
                    min_size=8, max_size=8)


@given(values16, st.sampled_from([1.0, 2.0, 5.0, 0.5]))
def test_rearrangement_preserves_lp(vals, p):
    f = GridFunction(G, vals)
    a, b = grid_lp_norm(f, p), rearrange_grid(f).lp_norm(p)
    assert abs(a - b) <= 1e-12 * max(1.0, a)


@given(values16)
def test_sup_is_profile_at_zero(vals):
    f = GridFunction(G, vals)
    prof = rearrange_grid(f)
    assert grid_lp_norm(f, math.inf) == (prof(0.0) if any(vals) else 0.0)


@given(values16, st.floats(0.0, 1e3))
def test_equimeasurable(vals, lam):
    f = GridFunction(G, vals)
    direct = sum(1 for v in vals if v > lam) * G.cell_volume
    assert rearrange_grid(f).distribution(lam) == direct


@given(values16)
def test_profile_matches_sorted_cells(vals):
    prof = rearrange_grid(GridFunction(G, vals))
    t = (np.arange(8) + 0.5) * G.cell_volume
    assert np.array_equal(prof(t), sorted(vals, reverse=True))


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 4), st.integers(1, 2),
       st.sampled_from([0.5, 1.0, 3.0]))
def test_row_agrees_with_grid_profile(seed, j, n, p):
    rng = np.random.default_rng(seed)
    fld = CoefficientField(n, j, [(0.0, 1.0)] * n)
    levels = [np.zeros(fld.level_shape(i)) for i in range(j + 1)]
    levels[j] = rng.choice([0.0, 0.5, 1.0, 2.0], size=levels[j].shape)
    g = CoefficientField(n, j, fld.box, levels)
    row = rearrange_row(g, j)
    for L in (j, j + 1):
        grid_prof = rearrange_grid(synthesize_level(g, j, None, L))
        assert row.profile().pairs() == grid_prof.pairs()
    step = 2.0 ** (-j * n)
    assert np.sum(row.values ** p) * step == pytest.approx(np.sum(g.row(j) ** p) * step, rel=1e-14)


def test_subadditivity_examples():
    g = Grid([(0.0, 2.0)], 2)
    h1 = GridFunction(g, np.linspace(0.0, 3.0, 8))
    rep = check_subadditivity(h1, GridFunction.zeros(g), 2.0)
    assert abs(rep.margin) <= 1e-12 * rep.rhs and rep.holds
    a = GridFunction.indicator(g, 0.0, 1.0)
    b = GridFunction.indicator(g, 1.0, 2.0)
    rep = check_subadditivity(a, b, 1.0)
    assert rep.lhs == pytest.approx(2.0) and rep.rhs == pytest.approx(2.0)
    with pytest.raises(ValueError):
        check_subadditivity(a, b, 0.5)


@given(values16, values16, st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]))
def test_subadditivity_random(v1, v2, p):
    rep = check_subadditivity(GridFunction(G, v1), GridFunction(G, v2), p)
    assert rep.margin >= -1e-12 * max(1.0, rep.rhs)


def test_subadditivity_exhaustive_small():
    g = Grid([(0.0, 1.0)], 2)
    choices = [0.0, 1.0, 2.5]
    funcs = [GridFunction(g, v) for v in itertools.product(choices, repeat=4)]
    worst = math.inf
    for p in (1.0, 2.0, 3.0):
        for h1 in funcs[::3]:
            for h2 in funcs:
                worst = min(worst, check_subadditivity(h1, h2, p).margin)
    assert worst >= -1e-12


def test_sum_profile_norm_oracle():
    a = rearrange_grid(GridFunction(G, [3, 0, 1, 1, 0, 0, 2, 0]))
    b = rearrange_grid(GridFunction(G, [0, 5, 0, 0, 4, 0, 0, 0]))
    # a* = (3, 2, 1, 1), b* = (5, 4) on cells of width 1/8
    ref = (sum(v ** 2 for v in [8, 6, 1, 1]) / 8) ** 0.5
    assert sum_profile_norm(a, b, 2.0) == pytest.approx(ref, rel=1e-14)
