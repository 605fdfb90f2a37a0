import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from treeldp import free_energy as fe
from treeldp import matrix_tree as mt
from treeldp import oracle
from treeldp.errors import GrowthConditionViolated
from treeldp.free_energy import Branch, ClosedFormFreeEnergy, FiniteFreeEnergy
from treeldp.ising_blocks import ModelSpec

GOLDEN = (1 + math.sqrt(5)) / 2
probs = st.floats(0.02, 0.98)
betas = st.floats(-4.0, 4.0)


def log_cosh(b):
    return math.log(math.cosh(b))


# ----------------------------------------------------------------------------
# finite N


@pytest.mark.parametrize("model", [ModelSpec.power(2, 0.3), ModelSpec.linear(2, 0.7), ModelSpec.linear(3)])
def test_finite_zero_at_origin(golden, model):
    assert FiniteFreeEnergy(model, golden, 9).value(0.0) == 0.0


def test_finite_small_example(d2):
    r = fe.finite_free_energy(ModelSpec.linear(2), d2, 2, 1.0)
    assert r.value == pytest.approx(8 / 15 * log_cosh(1.0), rel=1e-14)
    assert r.n_used == 2
    assert r.branch is Branch.CRITICAL


def test_finite_approaches_limit(d2):
    r = fe.finite_free_energy(ModelSpec.linear(2), d2, 20, 1.0)
    assert abs(r.value - 2 / 3 * log_cosh(1.0)) <= 1e-4


def test_finite_rejects_non_growing():
    with pytest.raises(GrowthConditionViolated):
        FiniteFreeEnergy(ModelSpec.linear(2), mt.validate([[0, 1], [1, 0]]), 4)


def test_finite_vectorized(golden):
    F = FiniteFreeEnergy(ModelSpec.linear(2, 0.3), golden, 12)
    grid = np.linspace(-2, 2, 9)
    np.testing.assert_allclose(F.value(grid), [F.value(b) for b in grid], rtol=1e-15)
    np.testing.assert_allclose(F.g_term(grid), [F.g_term(b) for b in grid], rtol=1e-15)


@pytest.mark.parametrize("model, M, N", [
    (ModelSpec.power(2, 0.2), mt.GOLDEN_MEAN, 2),
    (ModelSpec.power(2, 0.7), mt.full_matrix(2), 2),
    (ModelSpec.linear(2, 0.2), mt.GOLDEN_MEAN, 2),
    (ModelSpec.linear(3, 0.5), mt.full_matrix(2), 1),
    (ModelSpec.linear(2, 0.7), mt.full_matrix(3), 1),
])
@pytest.mark.parametrize("beta", [-2.0, -0.5, 0.0, 0.5, 2.0])
def test_finite_matches_enumeration(model, M, N, beta):
    F = FiniteFreeEnergy(model, M, N)
    exact = oracle.exact_mgf(model, M, N, beta, truncated=True).log_value
    n = mt.delta_count(M, model.top_level(N))
    assert abs(F.value(beta) - exact / n) <= 1e-10


def test_finite_huge_N_finite(golden):
    F = FiniteFreeEnergy(ModelSpec.linear(2, 0.2), golden, 400)
    v = F.value(np.array([-30.0, -1.0, 1.0, 30.0]))
    assert np.isfinite(v).all()
    c = ClosedFormFreeEnergy(ModelSpec.linear(2, 0.2), GOLDEN).value(np.array([-30.0, -1.0, 1.0, 30.0]))
    np.testing.assert_allclose(v, c, rtol=1e-10)


# symmetry / convexity of the finite form


@settings(max_examples=40, deadline=None)
@given(probs, st.sampled_from([ModelSpec.power(2), ModelSpec.linear(2), ModelSpec.linear(3)]))
def test_finite_convex(p, model):
    F = FiniteFreeEnergy(model.with_p(p), mt.GOLDEN_MEAN, 8)
    v = F.value(np.arange(-3.0, 3.0001, 0.05))
    assert (v[:-2] - 2 * v[1:-1] + v[2:]).min() >= -1e-9


@settings(max_examples=40, deadline=None)
@given(probs, betas)
def test_finite_p_symmetry(p, beta):
    m = ModelSpec.linear(2, p)
    a = FiniteFreeEnergy(m, mt.GOLDEN_MEAN, 10).value(beta)
    b = FiniteFreeEnergy(m.with_p(1 - p), mt.GOLDEN_MEAN, 10).value(beta)
    assert abs(a - b) <= 1e-12


@given(betas)
def test_finite_even_at_half(beta):
    F = FiniteFreeEnergy(ModelSpec.linear(2), mt.GOLDEN_MEAN, 10)
    assert abs(F.value(beta) - F.value(-beta)) <= 1e-10


@settings(max_examples=40, deadline=None)
@given(probs, betas)
def test_finite_asymmetry_bounded(p, beta):
    # each block moves by at most |log(p/(1-p))| under beta -> -beta
    F = FiniteFreeEnergy(ModelSpec.linear(2, p), mt.GOLDEN_MEAN, 10)
    bound = np.exp(F.layout.log_weights).sum() * abs(math.log(p / (1 - p)))
    assert abs(F.value(beta) - F.value(-beta)) <= bound + 1e-12


def test_finite_not_even_off_half(golden):
    # at finite N the Bernoulli weight breaks beta -> -beta; only the limit is even
    F = FiniteFreeEnergy(ModelSpec.linear(2, 0.2), golden, 6)
    assert abs(F.value(1.0) - F.value(-1.0)) > 1e-3


@settings(max_examples=40, deadline=None)
@given(probs, st.floats(-3.0, 3.0).filter(lambda b: abs(b) > 1e-3))
def test_finite_derivative(p, beta):
    F = FiniteFreeEnergy(ModelSpec.linear(2, p), mt.GOLDEN_MEAN, 10)
    h = 1e-6
    fd = (F.value(beta + h) - F.value(beta - h)) / (2 * h)
    s = F.derivative(beta)
    assert not s.is_kink
    assert s.left == pytest.approx(fd, abs=1e-6)
    lo, hi = F.slope_bounds
    assert lo <= s.left <= hi


# G term


@settings(max_examples=60, deadline=None)
@given(probs, betas, st.integers(2, 30))
def test_g_term_nonnegative(p, beta, N):
    assert fe.g_term_finite(ModelSpec.linear(2, p), mt.GOLDEN_MEAN, N, beta) >= 0


def test_g_term_vanishes_at_half(golden):
    g = [fe.g_term_finite(ModelSpec.linear(2), golden, N, 0.8) for N in (4, 8, 16, 32)]
    assert all(a > b for a, b in zip(g, g[1:]))
    assert g[-1] < 1e-6  # linear weights decay only like gamma^-N


def test_g_term_vanishes_subcritical(golden):
    # p = 0.7, beta = 1: B < 1
    g = [fe.g_term_finite(ModelSpec.linear(2, 0.7), golden, N, 1.0) for N in (4, 8, 16, 32)]
    assert g[-1] < 1e-12 and g[-1] < g[0]


def _dtree_display(d, p, beta, N):
    # d-tree, q = 2: (d-1)/d * sum_k d^-(2N-k) log(1 + (1-p)/p B^(d^k))
    log_b = math.log(((1 - p) * math.exp(beta) + p * math.exp(-beta)) / (p * math.exp(beta) + (1 - p) * math.exp(-beta)))
    total = 0.0
    for k in range(N // 2 + 1, N + 1):
        x = math.log((1 - p) / p) + d**k * log_b
        term = x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
        total += term / d ** (2 * N - k)
    return (d - 1) / d * total


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("p, beta", [(0.2, 0.3), (0.2, -0.3), (0.5, 1.0), (0.8, 1.5), (0.35, 0.05)])
@pytest.mark.parametrize("N", [2, 5, 9])
def test_g_term_matches_dtree_display(d, p, beta, N):
    # the display normalizes by d^(2N) rather than |Delta_{2N-1}| = (d^(2N) - 1)/(d - 1)
    g = fe.g_term_finite(ModelSpec.linear(2, p), mt.full_matrix(d), N, beta)
    assert g * (1 - d ** (-2 * N)) == pytest.approx(_dtree_display(d, p, beta, N), rel=1e-12, abs=1e-300)


# ----------------------------------------------------------------------------
# closed form


@settings(max_examples=60)
@given(st.floats(1.01, 10.0), betas)
def test_closed_half_power(gamma, beta):
    v = fe.closed_form_free_energy(ModelSpec.power(3), gamma, beta).value
    assert v == pytest.approx((gamma - 1) / gamma * log_cosh(beta), rel=1e-13, abs=1e-15)


def test_closed_examples():
    assert fe.closed_form_free_energy(ModelSpec.power(2, 0.3), 2.0, 0.0).value == 0.0
    r = fe.closed_form_free_energy(ModelSpec.power(2, 0.2), 2.0, 1.0)
    assert r.branch is Branch.SUPERCRITICAL
    assert r.value == pytest.approx(0.5 * math.log(0.8 * math.e + 0.2 / math.e), rel=1e-14)
    assert r.value == pytest.approx(0.4050652, abs=1e-7)
    assert r.g_term == pytest.approx(0.5 * math.log(2.682945), abs=1e-6)


def test_closed_rejects_gamma():
    with pytest.raises(ValueError):
        ClosedFormFreeEnergy(ModelSpec.power(2), 1.0)


@given(probs, betas, st.floats(1.1, 5.0))
def test_closed_symmetries(p, beta, gamma):
    F = ClosedFormFreeEnergy(ModelSpec.linear(3, p), gamma)
    Fq = ClosedFormFreeEnergy(ModelSpec.linear(3, 1 - p), gamma)
    assert abs(F.value(beta) - F.value(-beta)) <= 1e-10
    assert abs(F.value(beta) - Fq.value(beta)) <= 1e-12
    assert F.g_term(beta) >= 0


@pytest.mark.parametrize("p", [0.1, 0.5, 0.8])
def test_closed_convex(p):
    F = ClosedFormFreeEnergy(ModelSpec.power(2, p), GOLDEN)
    v = F.value(np.arange(-3.0, 3.0001, 0.01))
    assert (v[:-2] - 2 * v[1:-1] + v[2:]).min() >= -1e-9


@pytest.mark.parametrize("kind, d, gamma", [("dtree", 2, 2.0), ("dtree", 3, 3.0), ("goldenmean", 2, GOLDEN)])
@pytest.mark.parametrize("p, beta", [(0.5, 0.0), (0.5, 1.3), (0.2, 0.7), (0.2, -0.7), (0.9, 2.0)])
def test_special_cases_match_closed(kind, d, gamma, p, beta):
    fix = fe.special_case_fixtures(kind, beta, p, d)
    gen = fe.closed_form_free_energy(ModelSpec.linear(2, p), gamma, beta)
    assert fix.value == pytest.approx(gen.value, rel=1e-12, abs=1e-15)
    assert fix.g_term == pytest.approx(gen.g_term, rel=1e-12, abs=1e-15)


def test_special_case_half():
    assert fe.special_case_fixtures("dtree", 1.1, 0.5).value == pytest.approx(2 / 3 * log_cosh(1.1))
    assert fe.special_case_fixtures("goldenmean", 1.1, 0.5).value == pytest.approx(
        (math.sqrt(5) - 1) / 2 * log_cosh(1.1))
    with pytest.raises(ValueError):
        fe.special_case_fixtures("ring", 1.0, 0.5)


# derivatives


def test_derivative_examples():
    s = fe.free_energy_derivative(ModelSpec.power(2), 2.0, 1.0)
    assert s.left == s.right == pytest.approx(0.5 * math.tanh(1.0), rel=1e-14)
    assert fe.free_energy_derivative(ModelSpec.power(2), 2.0, 0.0) == (0.0, 0.0)
    s = fe.free_energy_derivative(ModelSpec.power(2, 0.2), 2.0, 0.0)
    assert s.is_kink
    np.testing.assert_allclose([s.left, s.right], [-0.3, 0.3], atol=1e-15)


@settings(max_examples=100)
@given(probs, st.floats(0.1, 4.0), st.booleans(), st.sampled_from([2.0, GOLDEN, 3.5]))
def test_derivative_finite_difference(p, mag, neg, gamma):
    beta = -mag if neg else mag
    F = ClosedFormFreeEnergy(ModelSpec.linear(2, p), gamma)
    h = 1e-6
    fd = (F.value(beta + h) - F.value(beta - h)) / (2 * h)
    assert F.derivative(beta).left == pytest.approx(fd, abs=1e-6)


def test_power_orders_share_limit_at_half(golden):
    # at p = 1/2 every power order has the same limit; alpha = 3 saturates sooner
    grid = np.linspace(-2, 2, 41)
    a2 = FiniteFreeEnergy(ModelSpec.power(2), golden, 8).value(grid)
    a3 = FiniteFreeEnergy(ModelSpec.power(3), golden, 4).value(grid)
    assert np.abs(a2 - a3).max() <= 1e-3
