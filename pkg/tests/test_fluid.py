import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rsajam.errors import BracketError, ParameterError
from rsajam.fluid import (drift_sfap, drift_tetris, drift_threshold, integrate, jamming_constant,
                          sfap_closed_form, tetris_crossing, threshold_k1_jamming)

DRIFTS = [drift_threshold, drift_tetris, drift_sfap]
KINDS = ["threshold", "tetris", "sfap"]


def _threshold_sum(alpha, c, K):
    low = sum(alpha[:K - 1])
    return math.exp(-c * sum(alpha)) * sum((c * low) ** r / math.factorial(r) for r in range(K))


@pytest.mark.parametrize("drift", DRIFTS)
@pytest.mark.parametrize("K", [1, 2, 3, 5])
def test_zero_state(drift, K):
    expected = np.zeros(K)
    expected[0] = 1.0
    assert np.array_equal(drift(np.zeros(K), 2.5, K), expected)


@pytest.mark.parametrize("drift", [drift_tetris, drift_sfap])
def test_no_interaction_at_zero_c(drift):
    assert drift(np.array([0.3, 0.2, 0.1]), 0.0, 3).tolist() == [1.0, 0.0, 0.0]


@pytest.mark.parametrize("drift", DRIFTS)
def test_k1_is_hard_core(drift):
    assert drift(np.array([0.37]), 2.0, 1)[0] == pytest.approx(math.exp(-0.74), abs=1e-15)


def test_threshold_sum_identity_example():
    alpha = [0.2, 0.1, 0.05]
    expected = math.exp(-2 * 0.35) * sum((2 * 0.3) ** r / math.factorial(r) for r in range(3))
    assert drift_threshold(np.array(alpha), 2.0, 3).sum() == pytest.approx(expected, abs=1e-12)


def test_threshold_k3_branches():
    # written out from the three branches for K = 3
    a0, a1, a2, c = 0.2, 0.1, 0.05, 2.0
    decay = math.exp(-c * (a0 + a1 + a2))
    x = c * (a0 + a1)
    poly = 1 + x
    expected = [-c * a0 * decay * poly + decay,
                c * (a0 - a1) * decay * poly + decay * x,
                c * a1 * decay * poly + decay * x * x / 2]
    assert np.allclose(drift_threshold(np.array([a0, a1, a2]), c, 3), expected, rtol=0, atol=1e-15)


def test_tetris_substitution():
    d = drift_tetris(np.array([0.3, 0.2]), 1.0, 2)
    assert d[0] == pytest.approx(math.exp(-0.5), abs=1e-15)
    assert d[1] == pytest.approx((1 - math.exp(-0.3)) * math.exp(-0.2), abs=1e-15)


def test_sfap_substitution():
    d = drift_sfap(np.array([0.4, 0.2, 0.1]), 2.0, 3)
    assert d[1] == pytest.approx(math.exp(-0.4) * (1 - math.exp(-0.8)), abs=1e-15)
    assert d[2] == pytest.approx(math.exp(-0.2) * (1 - math.exp(-0.8)) * (1 - math.exp(-0.4)), abs=1e-15)


def test_batched_drift_matches_single():
    alpha = np.array([[0.1, 0.2, 0.05], [0.3, 0.0, 0.1]])
    c = np.array([1.5, 4.0])
    for drift in DRIFTS:
        batch = drift(alpha, c, 3)
        for i in range(2):
            assert np.array_equal(batch[i], drift(alpha[i], c[i], 3))


alphas = st.integers(1, 6).flatmap(
    lambda K: st.tuples(st.just(K), st.lists(st.floats(0, 1), min_size=K + 1, max_size=K + 1)))


@settings(max_examples=200, deadline=None)
@given(spec=alphas, c=st.floats(0, 20))
def test_drift_signs_and_budget(spec, c):
    K, raw = spec
    w = np.array(raw) + 1e-9
    alpha = (w / w.sum())[:K]  # non-negative, sum <= 1
    for drift in (drift_tetris, drift_sfap):
        d = drift(alpha, c, K)
        assert np.all(d >= 0)
        assert 0 < d.sum() <= 1 + 1e-12
    d = drift_threshold(alpha, c, K)
    # classes below K-1 lose vertices to promotion, only the top class is inflow-only
    assert d[K - 1] >= 0
    assert 0 < d.sum() <= 1 + 1e-12
    assert drift_threshold(alpha, c, K).sum() == pytest.approx(_threshold_sum(alpha, c, K), abs=1e-12)


def test_threshold_middle_class_can_shrink():
    d = drift_threshold(np.array([0.0, 1.0, 0.0]), 1.0, 3)
    assert d[1] == pytest.approx(-math.exp(-1.0), abs=1e-15)


def test_integrate_k1_closed_form():
    sol = integrate("threshold", 1, 1.0)
    assert sol.final()[0] == pytest.approx(math.log(2), abs=1e-8)


@pytest.mark.parametrize("kind", KINDS)
def test_integrate_zero_c(kind):
    sol = integrate(kind, 3, 0.0, step=1e-3)
    assert np.allclose(sol.total, sol.grid, rtol=0, atol=1e-12)
    assert jamming_constant(kind, 3, 0.0, step=1e-3) == pytest.approx(1.0, abs=1e-12)


def test_integrate_sfap_against_closed_form():
    sol = integrate("sfap", 4, 3.0)
    assert np.max(np.abs(sol.alpha - sfap_closed_form(3.0, 4, sol.grid))) < 1e-8


def test_integrate_step_validation():
    with pytest.raises(ParameterError):
        integrate("tetris", 2, 1.0, step=0.5)
    with pytest.raises(ParameterError):
        integrate("tetris", 2, 1.0, step=0.0)


def test_integrate_grid_and_invariants():
    sol = integrate("threshold", 3, 4.0, step=1e-3, points=51)
    assert len(sol.grid) == 51 and sol.grid[-1] == 1.0
    assert np.all(sol.alpha[0] == 0)
    assert np.all(sol.alpha >= 0)
    assert np.all(sol.total <= sol.grid + 1e-12)
    assert np.all(np.diff(sol.total) >= 0)


def test_step_halving():
    a = integrate("threshold", 3, 5.0, step=1e-4)
    b = integrate("threshold", 3, 5.0, step=5e-5)
    assert np.max(np.abs(a.alpha - b.alpha)) < 1e-9


def test_closed_form_values():
    a = sfap_closed_form(1.0, 3, 1.0)
    assert a[0] == pytest.approx(math.log(2), abs=1e-15)
    assert a[1] == pytest.approx(math.log(2 - math.log(2)), abs=1e-15)
    assert np.all(sfap_closed_form(2.0, 4, 0.0) == 0)
    assert sfap_closed_form(0.0, 3, 0.4).tolist() == [0.4, 0.0, 0.0]


def test_closed_form_solves_the_ode():
    # finite-difference derivative of the closed form equals the drift
    t = np.linspace(0.05, 0.95, 19)
    h = 1e-6
    c, K = 2.5, 5
    deriv = (sfap_closed_form(c, K, t + h) - sfap_closed_form(c, K, t - h)) / (2 * h)
    assert np.allclose(deriv, drift_sfap(sfap_closed_form(c, K, t), c, K), atol=1e-7)


def test_k1_jamming_formula():
    assert threshold_k1_jamming(1.0) == pytest.approx(0.693147, abs=1e-6)
    assert threshold_k1_jamming(0.0) == 1.0
    assert threshold_k1_jamming(math.e - 1) == pytest.approx(1 / (math.e - 1), abs=1e-15)
    assert threshold_k1_jamming(math.e - 1) == pytest.approx(0.581977, abs=1e-6)


def test_jamming_constant_values():
    assert jamming_constant("threshold", 1, 5.0) == pytest.approx(math.log(6) / 5, abs=1e-8)
    assert math.log(6) / 5 == pytest.approx(0.358352, abs=1e-6)
    assert jamming_constant("tetris", 2, 5.0) > jamming_constant("threshold", 1, 5.0)


def test_k1_collapse_across_models():
    cs = np.array([0.5, 2.0, 7.0])
    expected = np.log1p(cs) / cs
    for kind in KINDS:
        assert np.allclose(jamming_constant(kind, 1, cs, step=1e-4), expected, rtol=0, atol=1e-9)


def test_sfap_frequency_ordering():
    cs = np.linspace(0.25, 20, 80)
    for K in range(2, 7):
        for c in cs:
            a = sfap_closed_form(c, K, 1.0)
            assert np.all(np.diff(a) <= 0)


def test_crossing_bracket_errors():
    with pytest.raises(BracketError):
        tetris_crossing(2, 1, 2, (0.1, 0.2), step=1e-3)
    with pytest.raises(BracketError):
        tetris_crossing(2, 1, 2, (3.0, 3.0), step=1e-3)
    with pytest.raises(ParameterError):
        tetris_crossing(2, 2, 2, (1, 10))


def test_crossing_coarse():
    c_star = tetris_crossing(2, 1, 2, (1, 10), tol=1e-3, step=1e-3)
    assert 4.45 <= c_star <= 4.49
