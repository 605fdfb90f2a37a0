import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from treeldp import ising_blocks as ib
from treeldp import matrix_tree as mt
from treeldp.errors import InvalidModel
from treeldp.ising_blocks import ModelSpec, TreeBlock

probs = st.floats(0.01, 0.99)
betas = st.floats(-5.0, 5.0)


def block(r: float) -> TreeBlock:
    return TreeBlock(1, 3, None, 1, math.log(r))


def naive_total(p, beta, r):
    a = p * math.exp(beta) + (1 - p) * math.exp(-beta)
    ab = (1 - p) * math.exp(beta) + p * math.exp(-beta)
    return math.log(p * a**r + (1 - p) * ab**r)


# ----------------------------------------------------------------------------
# model spec


def test_integer_root_exact():
    assert ib.integer_root(10**30, 3) == 10**10
    assert ib.integer_root(10**30 - 1, 3) == 10**10 - 1
    assert [ib.integer_root(n, 2) for n in range(1, 10)] == [1, 1, 1, 2, 2, 2, 2, 2, 3]


@pytest.mark.parametrize("kind, order, p", [("power", 1, 0.5), ("linear", 1, 0.5), ("power", 2, 0.0),
                                            ("power", 2, 1.0), ("ring", 2, 0.5), ("linear", 2.5, 0.5)])
def test_model_rejects(kind, order, p):
    with pytest.raises(InvalidModel):
        ModelSpec(kind, order, p)


def test_model_levels():
    m = ModelSpec.power(2)
    assert [m.target_level(k) for k in (1, 2, 3)] == [0, 3, 8]
    assert m.cutoff(8) == 2 and m.top_level(8) == 63
    m = ModelSpec.power(3)
    assert m.target_level(2) == 7 and m.cutoff(27) == 3
    m = ModelSpec.linear(3)
    assert m.target_level(4) == 11 and m.fanout_index(4) == 9 and m.cutoff(10) == 3


def test_coefficients():
    assert ModelSpec.power(2).coefficient(2.0) == pytest.approx(0.5)
    assert ModelSpec.power(5).coefficient(3.0) == pytest.approx(2 / 3)
    assert ModelSpec.linear(2).coefficient(2.0) == pytest.approx(2 / 3)
    g = (1 + math.sqrt(5)) / 2
    assert ModelSpec.linear(2).coefficient(g) == pytest.approx((math.sqrt(5) - 1) / 2)
    assert ModelSpec.linear(3).coefficient(2.0) == pytest.approx(4 / 7)


# ----------------------------------------------------------------------------
# geometry


def test_block_geometry_examples(golden, d2):
    b = ib.block_geometry(ModelSpec.power(2), golden, 3, 1)
    assert (b.anchor_level, b.target_level, b.fan_out, b.symbol) == (2, 8, 21, 1)
    b = ib.block_geometry(ModelSpec.linear(2), d2, 3, 1)
    assert (b.anchor_level, b.target_level, b.fan_out, b.symbol) == (2, 5, 8, 1)
    b = ib.block_geometry(ModelSpec.linear(3), d2, 1)
    assert (b.anchor_level, b.target_level, b.fan_out) == (0, 2, 4)


def test_block_geometry_log_path(golden):
    exact = ib.block_geometry(ModelSpec.linear(2), golden, 30, 2)
    logged = ib.block_geometry(ModelSpec.linear(2), golden, 30, 2, exact=False)
    assert logged.fan_out is None
    assert logged.log_fan_out == pytest.approx(exact.log_fan_out, rel=1e-13)


def test_power_root_is_not_a_block(golden):
    with pytest.raises(ValueError):
        ib.block_geometry(ModelSpec.power(2), golden, 1)


def test_block_fanouts_tile_target_level(golden):
    # the anchors on level k-1 partition level a(k)k-1
    m = ModelSpec.linear(3)
    for k in range(2, 7):
        total = sum(ib.block_geometry(m, golden, k, j).fan_out * mt.col_sum(golden, k - 1, j) for j in (1, 2))
        assert total == mt.level_count(golden, m.target_level(k))


# ----------------------------------------------------------------------------
# spin ratio


def test_b_ratio_examples():
    assert ib.b_ratio(0.0, 0.3).b_value == 1.0
    assert ib.b_ratio(1.7, 0.5).b_value == pytest.approx(1.0, abs=1e-15)
    direct = (0.8 * math.e + 0.2 / math.e) / (0.2 * math.e + 0.8 / math.e)
    assert ib.b_ratio(1.0, 0.2).b_value == pytest.approx(direct, rel=1e-14)
    assert ib.b_ratio(1.0, 0.2).b_value == pytest.approx(2.68295, abs=1e-5)


@given(betas, probs)
def test_b_ratio_reciprocal(beta, p):
    assert ib.b_ratio(-beta, p).b_value * ib.b_ratio(beta, p).b_value == pytest.approx(1.0, abs=1e-14)


def test_log_mix_exact_zero():
    assert ib.log_mix(0.3, 0.0) == 0.0
    assert ib.log_mix(0.3, 800.0) == pytest.approx(800 + math.log(0.3))
    assert ib.log_mix(0.3, -800.0) == pytest.approx(800 + math.log(0.7))


@given(st.floats(0.01, 0.99), st.floats(-4, 4))
def test_dlog_mix_matches_difference(w, beta):
    h = 1e-6
    fd = (ib.log_mix(w, beta + h) - ib.log_mix(w, beta - h)) / (2 * h)
    assert ib.dlog_mix(w, beta) == pytest.approx(fd, abs=1e-7)


# ----------------------------------------------------------------------------
# block expectations


@pytest.mark.parametrize("r", [1, 5, 10**6])
def test_total_zero_at_beta_zero(r):
    assert ib.log_block_total(ModelSpec.power(2, 0.3), block(r), 0.0) == 0.0


@pytest.mark.parametrize("r, beta", [(1, 0.4), (21, -1.3), (10**5, 2.0)])
def test_total_half(r, beta):
    lc = math.log(math.cosh(beta))
    assert ib.log_block_total(ModelSpec.power(2), block(r), beta) == pytest.approx(r * lc, rel=1e-13)


def test_total_asymptotic_branch():
    model = ModelSpec.power(2, 0.2)
    expected = math.log(0.8) + 1e6 * math.log(0.8 * math.e + 0.2 / math.e)
    got = ib.log_block_total(model, block(10**6), 1.0)
    assert abs(got - expected) <= 1e-12 * abs(expected)
    # at moderate R the dominant-branch form agrees with direct evaluation
    for r in (1, 3, 40):
        assert ib.log_block_total(model, block(r), 1.0) == pytest.approx(naive_total(0.2, 1.0, r), rel=1e-13)
    exp = ib.log_block_expectation(model, block(40), 1.0)
    assert exp.total == pytest.approx(naive_total(0.2, 1.0, 40), rel=1e-13)


@settings(max_examples=200)
@given(probs, betas, st.integers(1, 50))
def test_total_matches_naive(p, beta, r):
    assert ib.log_block_total(ModelSpec.power(2, p), block(r), beta) == pytest.approx(
        naive_total(p, beta, r), rel=1e-12, abs=1e-13)


@given(probs, betas, st.integers(1, 10**6))
def test_total_spin_flip_symmetry(p, beta, r):
    # relabelling every spin maps the +1 weight p to 1-p and leaves S unchanged
    a = ib.log_block_total(ModelSpec.power(2, p), block(r), beta)
    b = ib.log_block_total(ModelSpec.power(2, 1 - p), block(r), beta)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


def test_total_not_symmetric_under_joint_flip():
    # (p, beta) -> (1-p, -beta) is not a symmetry of a block with R > 1
    a = ib.log_block_total(ModelSpec.power(2, 0.2), block(5), 0.7)
    b = ib.log_block_total(ModelSpec.power(2, 0.8), block(5), -0.7)
    assert abs(a - b) > 0.1


# ----------------------------------------------------------------------------
# ratio term


def test_ratio_term_examples():
    for beta in (-2.0, 0.0, 0.5, 3.0):
        assert ib.log_ratio_term(ModelSpec.power(2), block(17), beta) == pytest.approx(math.log(2), rel=1e-14)
    assert ib.log_ratio_term(ModelSpec.power(2, 0.3), block(9), 0.0) == pytest.approx(math.log(1 / 0.3))
    # B < 1 here; the term vanishes as R grows
    m = ModelSpec.power(2, 0.7)
    terms = [ib.log_ratio_term(m, block(r), 1.0) for r in (1, 10, 100, 1000)]
    assert all(a > b for a, b in zip(terms, terms[1:]))
    assert terms[-1] < 1e-250


@settings(max_examples=200)
@given(probs, betas, st.integers(1, 10**6))
def test_ratio_term_stable_vs_naive(p, beta, r):
    lb = ib.b_ratio(beta, p).log_b
    assume(r * abs(lb) <= 200)
    got = ib.log_ratio_term(ModelSpec.power(2, p), block(r), beta)
    naive = math.log(1 + (1 - p) / p * math.exp(r * lb))
    assert got >= 0
    assert abs(got - naive) <= 1e-12 * max(1.0, abs(naive))


def test_softplus_threshold_continuity():
    x = np.array([29.999999, 30.0, 30.000001])
    np.testing.assert_allclose(ib.softplus(x), np.log1p(np.exp(x)), rtol=1e-15)


# ----------------------------------------------------------------------------
# head bound


def test_head_bound_examples(golden):
    assert ib.head_bound(ModelSpec.power(2), golden, 4) == 6
    assert ib.head_bound(ModelSpec.power(2), golden, 1) == 1
    assert ib.head_bound(ModelSpec.power(3), mt.full_matrix(3), 1) == 1
    assert ib.head_bound(ModelSpec.linear(2), golden, 4) == 7


def _head_ratio(model, M, N):
    return ib.head_bound(model, M, N, None) / mt.delta_count(M, model.top_level(N), None)


def test_head_ratio_decreases_power(golden):
    r = [_head_ratio(ModelSpec.power(2), golden, N) for N in range(1, 13)]
    assert all(a > b for a, b in zip(r, r[1:]))


@pytest.mark.parametrize("q", [2, 3])
def test_head_ratio_decreases_linear(golden, q):
    # the head only grows when q divides N, so compare along multiples of q
    m = ModelSpec.linear(q)
    r = [_head_ratio(m, golden, N) for N in range(q, 13, q)]
    assert all(a > b for a, b in zip(r, r[1:]))
    assert r[-1] < 5e-3
