import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from varseq.exponents import (constant_smoothness, make_standard_exponent,
                              make_standard_smoothness)
from varseq.spaces import (CoefficientField, SpaceSpec, WeightSequence, read_coefficients,
                           space_norm, synthesize_level, validate_weights,
                           weights_from_smoothness, write_coefficients)

import oracles

BOX1 = [(0.0, 2.0)]


def random_field(rng, n=1, J=3, box=None, density=0.5):
    fld = CoefficientField(n, J, box or [(0.0, 2.0)] * n)
    levels = []
    for j in range(J + 1):
        shape = fld.level_shape(j)
        vals = rng.uniform(0.0, 2.0, shape) * (rng.random(shape) < density)
        levels.append(vals)
    levels[J].reshape(-1)[0] = 1.0
    return CoefficientField(n, J, fld.box, levels)


fields = st.builds(lambda seed, J, d: random_field(np.random.default_rng(seed), J=J, density=d),
                   st.integers(0, 2 ** 32 - 1), st.integers(0, 4), st.floats(0.05, 1.0))


# --- weights --------------------------------------------------------------

def test_weights_from_zero_smoothness():
    w = weights_from_smoothness(constant_smoothness(0.0), 4)
    assert (w.alpha1, w.alpha2, w.alpha) == (0.0, 0.0, 0.0)
    assert np.all(w(3, np.linspace(-2, 2, 9)) == 1.0)


def test_weights_from_unit_smoothness():
    w = weights_from_smoothness(constant_smoothness(1.0), 4)
    assert np.all(w(3, np.array([-1.3, 0.0, 1.7])) == 8.0)


def test_sigmoid_weights_pass():
    s = make_standard_smoothness("sigmoid_step", {"low": 0.0, "high": 1.0, "width": 0.5})
    w = weights_from_smoothness(s, 5)
    assert (w.alpha1, w.alpha2) == (0.0, 1.0)
    rep = validate_weights(w)
    assert rep.passes and not rep.violations


def test_constant_weights_have_unit_constant():
    rep = validate_weights(weights_from_smoothness(constant_smoothness(0.7), 5))
    assert rep.c_estimate == pytest.approx(1.0, abs=1e-12)
    assert rep.violations == []


def test_log_holder_weights_local_ratio_bounded():
    s = make_standard_smoothness("log_borderline", {"base": 1.0, "amplitude": 1.0})
    w = weights_from_smoothness(s, 6)
    rep = validate_weights(w, samples=129)
    assert rep.local_ratio <= math.exp(w.alpha) * (1 + 1e-9)
    assert rep.passes


def test_broken_growth_is_reported():
    good = [lambda x, j=j: np.full(len(x), 2.0 ** j) for j in range(5)]
    bad = list(good)
    bad[3] = lambda x: np.full(len(x), 2.0 ** 2 * 2.0 ** 2)   # w_3 = 2^(alpha2 + 1) w_2
    w = WeightSequence.explicit(bad, alpha=0.0, alpha1=1.0, alpha2=1.0)
    rep = validate_weights(w, samples=17)
    assert not rep.passes
    assert {v[1] for v in rep.violations} == {2, 3}
    assert validate_weights(WeightSequence.explicit(good, 0.0, 1.0, 1.0), samples=17).passes


def test_validate_needs_two_samples():
    with pytest.raises(ValueError):
        validate_weights(weights_from_smoothness(constant_smoothness(0.0), 1), samples=1)


# --- synthesis ------------------------------------------------------------

def test_synthesize_single_unit_cube():
    g = CoefficientField.from_entries({(0, (0,)): 1.0}, 1, box=BOX1)
    f = synthesize_level(g, 0, None, 2)
    assert np.array_equal(f.values, [1, 1, 1, 1, 0, 0, 0, 0])


def test_synthesize_weighted_halves():
    g = CoefficientField.from_entries({(1, (0,)): 1.0, (1, (1,)): 1.0}, 1, box=BOX1)
    f = synthesize_level(g, 1, constant_smoothness(1.0), 3)
    assert np.array_equal(f.values, [2.0] * 8 + [0.0] * 8)


def test_synthesize_zero_and_too_coarse():
    g = CoefficientField(1, 2, BOX1)
    assert not synthesize_level(g, 2, None, 2).values.any()
    with pytest.raises(ValueError):
        synthesize_level(g, 2, None, 1)


# --- norms ----------------------------------------------------------------

@pytest.mark.parametrize("kind", ["besov", "triebel"])
@pytest.mark.parametrize("p,q,s", [(1.0, 1.0, 0.0), (2.0, 0.5, 1.5), (0.7, 4.0, -1.0)])
def test_single_unit_coefficient(kind, p, q, s):
    g = CoefficientField.from_entries({(0, (0,)): 1.0}, 1)
    spec = getattr(SpaceSpec, kind)(p, q, s)
    assert space_norm(g, spec) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("kind", ["besov", "triebel"])
@pytest.mark.parametrize("j", [0, 2, 5])
@pytest.mark.parametrize("p,q,s,n", [(1.0, 2.0, 0.5, 1), (3.0, 1.0, 2.0, 1), (2.0, 2.0, 1.0, 2)])
def test_single_coefficient_closed_form(kind, j, p, q, s, n):
    g = CoefficientField.from_entries({(j, (0,) * n): 1.0}, n, box=[(0.0, 1.0)] * n)
    spec = getattr(SpaceSpec, kind)(p, q, s, n)
    for method in ("auto", "grid"):
        assert space_norm(g, spec, method=method) == pytest.approx(2.0 ** (j * (s - n / p)), rel=1e-10)


def test_four_level_column_b_norm():
    # one unit per level on disjoint cubes: level norms 2**(-j/2), so the sum of squares is 15/8
    entries = [(0, (0,), 1.0), (1, (2,), 1.0), (2, (6,), 1.0), (3, (14,), 1.0)]
    g = CoefficientField.from_entries(entries, 1, box=BOX1)
    spec = SpaceSpec.besov(2.0, 2.0, 0.0)
    ref = oracles.besov_constant(entries, 1, 2.0, 2.0, 0.0)
    assert ref == pytest.approx(math.sqrt(15 / 8), rel=1e-15)
    assert space_norm(g, spec) == pytest.approx(ref, rel=1e-10)
    assert space_norm(g, spec, method="grid") == pytest.approx(ref, rel=1e-10)


def test_norm_rejections():
    g = CoefficientField.from_entries({(2, (0,)): 1.0}, 1)
    with pytest.raises(ValueError):
        space_norm(g, SpaceSpec.besov(1.0, 1.0, 0.0), L=1)
    with pytest.raises(ValueError):
        space_norm(g, SpaceSpec.besov(1.0, 1.0, 0.0, 2))
    with pytest.raises(ValueError):
        SpaceSpec.triebel(math.inf, 1.0, 0.0)
    with pytest.raises(ValueError):
        space_norm(g, SpaceSpec.besov(1.0, 1.0, 0.0), method="magic")
    assert space_norm(CoefficientField(1, 2), SpaceSpec.triebel(2.0, 2.0, 0.0)) == 0.0


CONST = st.tuples(st.sampled_from([0.5, 1.0, 2.0, 3.5]), st.sampled_from([0.5, 1.0, 2.0, math.inf]),
                  st.sampled_from([-0.5, 0.0, 1.0]))


@given(fields, CONST)
def test_besov_matches_loop_oracle(g, pqs):
    p, q, s = pqs
    ref = oracles.besov_constant(list(g.entries()), 1, p, q, s)
    spec = SpaceSpec.besov(p, q, s)
    assert space_norm(g, spec) == pytest.approx(ref, rel=1e-9)
    assert space_norm(g, spec, method="grid") == pytest.approx(ref, rel=1e-9)


@given(fields, CONST)
def test_triebel_matches_loop_oracle(g, pqs):
    p, q, s = pqs
    ref = oracles.triebel_constant_1d(list(g.entries()), 0.0, 2.0, g.J_max, p, q, s)
    assert space_norm(g, SpaceSpec.triebel(p, q, s)) == pytest.approx(ref, rel=1e-9)


@given(fields, st.sampled_from([0.5, 1.0, 2.0, 3.5]), st.sampled_from([-0.5, 0.0, 1.0]))
def test_b_equals_f_when_p_equals_q(g, p, s):
    b = space_norm(g, SpaceSpec.besov(p, p, s))
    f = space_norm(g, SpaceSpec.triebel(p, p, s))
    assert abs(b - f) <= 1e-8 * (1 + b)


@given(fields, CONST)
def test_elementary_chain(g, pqs):
    p, q, s = pqs
    f = space_norm(g, SpaceSpec.triebel(p, q, s))
    b_min = space_norm(g, SpaceSpec.besov(p, min(p, q), s))
    b_max = space_norm(g, SpaceSpec.besov(p, max(p, q), s))
    assert f <= b_min * (1 + 1e-9)
    assert b_max <= f * (1 + 1e-9)


VAR_S = [make_standard_smoothness("log_perturbed", {"base": 0.5, "amplitude": 1.0}),
         make_standard_smoothness("sigmoid_step", {"low": -0.5, "high": 1.0, "width": 0.3,
                                                   "center": 1.0})]
VAR_P = make_standard_exponent("bump", {"base": 1.2, "amplitude": 1.0, "radius": 1.0,
                                        "center": 1.0})


@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 4), st.floats(-2.0, 2.0),
       st.sampled_from(["besov", "triebel"]), st.sampled_from(VAR_S))
def test_lifting_single_level(seed, j, sigma, kind, s):
    rng = np.random.default_rng(seed)
    fld = CoefficientField(1, j, BOX1)
    levels = [np.zeros(fld.level_shape(i)) for i in range(j + 1)]
    levels[j] = rng.uniform(0.0, 1.0, levels[j].shape)
    levels[j][0] = 1.0
    g = CoefficientField(1, j, BOX1, levels)
    w = weights_from_smoothness(s, j, BOX1)
    lifted = WeightSequence.explicit([lambda x, i=i: 2.0 ** (i * sigma) * w(i, x)
                                      for i in range(j + 1)], w.alpha, w.alpha1, w.alpha2)
    base = space_norm(g, getattr(SpaceSpec, kind)(VAR_P, 1.5, 0.0).with_weight(w))
    up = space_norm(g, getattr(SpaceSpec, kind)(VAR_P, 1.5, 0.0).with_weight(lifted))
    assert up == pytest.approx(2.0 ** (j * sigma) * base, rel=1e-9)


@given(fields, st.sampled_from(["besov", "triebel"]), st.sampled_from(VAR_S),
       st.sampled_from([0.7, 2.0]))
def test_weights_equal_smoothness_norm(g, kind, s, q):
    qf = make_standard_exponent("constant", {"value": q})
    by_s = space_norm(g, SpaceSpec(kind, VAR_P, qf, s))
    by_w = space_norm(g, SpaceSpec(kind, VAR_P, qf, None, weights_from_smoothness(s, g.J_max, BOX1)))
    assert by_w == pytest.approx(by_s, rel=1e-10)


@pytest.mark.parametrize("kind", ["besov", "triebel"])
def test_refinement_stability(kind):
    g = random_field(np.random.default_rng(7), J=3)
    spec = SpaceSpec(kind, VAR_P, make_standard_exponent("constant", {"value": 1.5}), VAR_S[0])
    vals = [space_norm(g, spec, L=L) for L in range(3, 11)]
    diffs = np.abs(np.diff(vals))
    # the quadrature band shrinks roughly geometrically with L
    assert diffs[-1] <= 1e-3 * vals[-1]
    assert diffs[-1] < diffs[0]
    assert np.all(diffs[2:] <= diffs[:-2] * (1 + 1e-9))


def test_coefficient_field_validation():
    with pytest.raises(ValueError):
        CoefficientField(1, 1, [(0.0, 1.5)])
    with pytest.raises(ValueError):
        CoefficientField(1, -1)
    with pytest.raises(ValueError):
        CoefficientField.from_entries({(0, (5,)): 1.0}, 1)
    with pytest.raises(ValueError):
        CoefficientField(1, 0, levels=[np.array([1.0, -1.0, 0.0, 0.0])])
    g = CoefficientField.from_entries({(1, (-3,)): -2.0}, 1)
    assert list(g.entries()) == [(1, (-3,), 2.0)]
    assert g.top_level() == 1 and not g.is_zero()


def test_coefficient_round_trip(tmp_path):
    g = random_field(np.random.default_rng(11), n=2, J=2, box=[(-1.0, 1.0), (0.0, 1.0)])
    path = tmp_path / "g.csv"
    write_coefficients(path, g)
    back = read_coefficients(path, box=g.box)
    assert all(np.array_equal(a, b) for a, b in zip(back.levels, g.levels))
