"""Tree blocks of the multiplicative Hamiltonians and their log-domain expectations.

Both model families couple each node ``v`` on level ``k-1`` with every
descendant of ``v`` on level ``a(k)k - 1``.  With ``a(k) = k**(alpha-1)`` the
target level is ``k**alpha - 1`` ("power" family); with ``a(k) = q`` it is
``qk - 1`` ("linear" family).  One anchor together with its coupled
descendants is a tree block.  Blocks with ``k`` above the cutoff
``floor(N**(1/alpha))`` or ``floor(N/q)`` share no spins, so their moment
generating functions multiply.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import matrix_tree as mt
from .errors import InvalidModel
from .lognum import LogNonNegative

DEFAULT_BRANCH_THRESHOLD = 30.0

POWER = "power"
LINEAR = "linear"


def integer_root(n: int, r: int) -> int:
    """``floor(n ** (1/r))`` computed without floating-point error."""
    if n < 0:
        raise ValueError("integer_root of a negative number")
    if n < 2:
        return n
    x = int(round(n ** (1.0 / r)))
    while x**r > n:
        x -= 1
    while (x + 1) ** r <= n:
        x += 1
    return x


@dataclass(frozen=True)
class ModelSpec:
    """Model family plus the Bernoulli parameter ``p = P(spin = +1)``.

    ``kind`` is ``"power"`` (couplings to level ``k**order - 1``; ``order=2``
    is the quadratic Type I sum) or ``"linear"`` (couplings to level
    ``order*k - 1``).
    """

    kind: str
    order: int
    p: float = 0.5

    def __post_init__(self):
        if self.kind not in (POWER, LINEAR):
            raise InvalidModel(f"unknown model kind {self.kind!r} (expected 'power' or 'linear')")
        if isinstance(self.order, bool) or int(self.order) != self.order or self.order < 2:
            name = "alpha" if self.kind == POWER else "q"
            raise InvalidModel(f"{name} must be an integer >= 2, got {self.order!r}")
        object.__setattr__(self, "order", int(self.order))
        if not (isinstance(self.p, (int, float)) and 0.0 < self.p < 1.0):
            raise InvalidModel("p must lie strictly inside (0,1)")
        object.__setattr__(self, "p", float(self.p))

    @classmethod
    def power(cls, alpha: int = 2, p: float = 0.5) -> "ModelSpec":
        return cls(POWER, alpha, p)

    @classmethod
    def linear(cls, q: int = 2, p: float = 0.5) -> "ModelSpec":
        return cls(LINEAR, q, p)

    def with_p(self, p: float) -> "ModelSpec":
        return replace(self, p=p)

    @property
    def label(self) -> str:
        return f"alpha={self.order}" if self.kind == POWER else f"q={self.order}"

    def multiplier(self, k: int) -> int:
        """``k * a(k)``: the index coupled to ``k``."""
        return k**self.order if self.kind == POWER else self.order * k

    def target_level(self, k: int) -> int:
        return self.multiplier(k) - 1

    def fanout_index(self, k: int) -> int:
        """First argument of the row sum giving the fan-out of a level ``k-1`` anchor."""
        return self.multiplier(k) - k + 1

    def cutoff(self, N: int) -> int:
        """Largest ``k`` of the discarded head of the sum."""
        return integer_root(N, self.order) if self.kind == POWER else N // self.order

    def top_level(self, N: int) -> int:
        """Depth of the subtree ``Delta`` the sum up to ``N`` lives on."""
        return self.multiplier(N) - 1

    def coefficient(self, gamma: float) -> float:
        """Limit weight of the coupled levels: ``(g-1)/g`` or ``g^(q-1)(g-1)/(g^q-1)``."""
        if self.kind == POWER:
            return (gamma - 1.0) / gamma
        q = self.order
        return (gamma - 1.0) / (gamma - gamma ** (1 - q))


# ----------------------------------------------------------------------------
# single-spin factors


def log_mix(w, beta):
    """``log(w e^beta + (1-w) e^-beta)``, exactly zero at ``beta = 0``."""
    w = np.asarray(w, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    pos = beta >= 0
    b = np.abs(beta)
    small = np.where(pos, 1.0 - w, w)
    out = b + np.log1p(small * np.expm1(-2.0 * b))
    return out if out.ndim else float(out)


def dlog_mix(w, beta):
    """Derivative of :func:`log_mix` in ``beta``."""
    w = np.asarray(w, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    pos = beta >= 0
    t = np.exp(-2.0 * np.abs(beta))
    big = np.where(pos, w, 1.0 - w)
    small = np.where(pos, 1.0 - w, w)
    out = np.where(pos, 1.0, -1.0) * (big - small * t) / (big + small * t)
    return out if out.ndim else float(out)


def log_plus_factor(beta, p):
    """``log(p e^beta + (1-p) e^-beta)``: per-descendant factor when the anchor is +1."""
    return log_mix(p, beta)


def log_minus_factor(beta, p):
    """``log((1-p) e^beta + p e^-beta)``: per-descendant factor when the anchor is -1."""
    return log_mix(1.0 - np.asarray(p, dtype=np.float64), beta)


@dataclass(frozen=True)
class SpinRatio:
    b_value: float
    log_b: float


def b_ratio(beta: float, p: float) -> SpinRatio:
    """Ratio of the anchor-down to anchor-up per-descendant factors."""
    log_b = float(log_minus_factor(beta, p) - log_plus_factor(beta, p))
    return SpinRatio(math.exp(log_b) if log_b < 709.0 else math.inf, log_b)


# ----------------------------------------------------------------------------
# blocks


@dataclass(frozen=True)
class TreeBlock:
    """One anchor on ``anchor_level`` coupled to ``fan_out`` nodes on ``target_level``.

    ``symbol`` is the last letter of the anchor word (``None`` for the root).
    ``fan_out`` is ``None`` when only the log-domain value is available.
    """

    anchor_level: int
    target_level: int
    fan_out: Optional[int]
    symbol: Optional[int]
    log_fan_out: float

    def __post_init__(self):
        if not self.target_level > self.anchor_level >= 0:
            raise ValueError("tree block needs target_level > anchor_level >= 0")


def block_geometry(
    model: ModelSpec, M: mt.TransitionMatrix, k: int, j: Optional[int] = None,
    exact_cap: Optional[int] = mt.DEFAULT_EXACT_CAP, exact: bool = True,
) -> TreeBlock:
    """Block generated by a level ``k-1`` anchor ending in symbol ``j``.

    For ``k = 1`` the anchor is the root and ``j`` is ignored; this block
    exists only for the linear family (the power family's ``k = 1`` term is
    the constant self-pairing of the root).  With ``exact=False`` the fan-out
    is taken from the log-domain row sums and ``exact_cap`` is not consulted.
    """
    if k < 1:
        raise ValueError(f"block index k must be >= 1, got {k}")
    target = model.target_level(k)
    if k == 1:
        if model.kind == POWER:
            raise ValueError("the power family's k=1 term is the constant root self-pairing, not a block")
        if exact:
            n = mt.level_count(M, target, exact_cap)
            return TreeBlock(0, target, n, None, math.log(n))
        return TreeBlock(0, target, None, None, mt.log_level_count(M, target).log_value)
    if j is None:
        raise ValueError("a symbol j is required for anchors below the root")
    mt._check_symbol(M, j)
    idx = model.fanout_index(k)
    if exact:
        n = mt.row_sum(M, idx, j, exact_cap)
        return TreeBlock(k - 1, target, n, j, math.log(n))
    return TreeBlock(k - 1, target, None, j, float(mt.log_row_sums(M, idx)[j - 1]))


def _times_fanout(log_r, s):
    """``R * s`` for a fan-out given as ``log R``; stays finite while the product is."""
    s = np.asarray(s, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.sign(s) * np.exp(log_r + np.log(np.abs(s)))
    return out


@dataclass(frozen=True)
class BlockExpectation:
    """``log E+`` and ``log E-``: block expectations with the anchor fixed to +1 / -1."""

    log_plus: LogNonNegative
    log_minus: LogNonNegative

    @property
    def total(self) -> float:
        """``log(E+ + E-)`` by the dominant-branch log1p form."""
        a, b = self.log_plus.log_value, self.log_minus.log_value
        if b <= a:
            return a + math.log1p(math.exp(b - a))
        return b + math.log1p(math.exp(a - b))


def log_block_expectation(model: ModelSpec, block: TreeBlock, beta: float) -> BlockExpectation:
    p = model.p
    lr = block.log_fan_out
    plus = math.log(p) + float(_times_fanout(lr, log_plus_factor(beta, p)))
    minus = math.log1p(-p) + float(_times_fanout(lr, log_minus_factor(beta, p)))
    return BlockExpectation(LogNonNegative(plus), LogNonNegative(minus))


def log_block_total(model: ModelSpec, block: TreeBlock, beta: float) -> float:
    """``log(E+ + E-)`` written as ``R*u + log1p(w * expm1(R*(v-u)))``.

    ``u`` is the larger of the two per-descendant log factors, so the
    ``expm1`` argument is never positive; the result is exactly 0 at ``beta = 0``.
    """
    return float(block_total_parts(model.p, block.log_fan_out, beta)[0])


def block_total_parts(p, log_r, beta):
    """Return ``(total, const, slope)`` with ``total = const + R * slope``.

    ``const`` is bounded by ``|log p| + |log(1-p)|`` whatever the fan-out, which
    lets callers weight the fan-out-proportional part in log domain.
    """
    la = np.asarray(log_plus_factor(beta, p))
    lb = np.asarray(log_minus_factor(beta, p))
    plus_wins = lb <= la
    slope = np.where(plus_wins, la, lb)
    other_w = np.where(plus_wins, 1.0 - p, p)
    gap = _times_fanout(log_r, np.where(plus_wins, lb - la, la - lb))
    with np.errstate(over="ignore"):
        const = np.log1p(other_w * np.expm1(gap))
    total = const + _times_fanout(log_r, slope)
    return total, const, slope


def log_ratio_term(
    model: ModelSpec, block: TreeBlock, beta: float, threshold: float = DEFAULT_BRANCH_THRESHOLD
) -> float:
    """``log(1 + E-/E+) = log(1 + ((1-p)/p) B^R)`` evaluated without overflow."""
    p = model.p
    x = math.log1p(-p) - math.log(p) + float(_times_fanout(block.log_fan_out, b_ratio(beta, p).log_b))
    return float(softplus(x, threshold))


def softplus(x, threshold: float = DEFAULT_BRANCH_THRESHOLD):
    """``log(1 + e^x)``; past ``threshold`` the linear branch plus its exponentially small correction."""
    x = np.asarray(x, dtype=np.float64)
    with np.errstate(over="ignore"):
        out = np.where(x > threshold, x + np.log1p(np.exp(-np.abs(x))), np.log1p(np.exp(np.minimum(x, threshold))))
    return out if out.ndim else float(out)


def head_bound(model: ModelSpec, M: mt.TransitionMatrix, N: int, exact_cap: Optional[int] = mt.DEFAULT_EXACT_CAP) -> int:
    """Maximum of the discarded head ``sum_{k <= cutoff(N)}``: one unit per coupled pair."""
    if N < 1:
        raise ValueError("N must be >= 1")
    return sum(mt.level_count(M, model.target_level(k), exact_cap) for k in range(1, model.cutoff(N) + 1))
