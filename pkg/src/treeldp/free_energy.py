"""Finite-N and limiting free energies of the multiplicative Ising models.

The finite free energy at truncation ``N`` is

    F_N(beta) = |Delta|^-1 * sum_{cutoff(N) < k <= N} sum_j C(k-1, j) log(E+_j + E-_j)

on ``Delta = Delta_{a(N)N-1}``.  Every block enters through its log weight
``log C - log |Delta|`` and log fan-out, so nothing exponential is ever
formed explicitly.  The limit is ``c * log max(A, A*B)`` where
``A = p e^b + (1-p) e^-b`` and ``c`` is the model coefficient.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit

from . import matrix_tree as mt
from .ising_blocks import (
    DEFAULT_BRANCH_THRESHOLD,
    ModelSpec,
    _times_fanout,
    block_total_parts,
    dlog_mix,
    log_minus_factor,
    log_plus_factor,
    softplus,
)

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0
DEFAULT_N = {"power": 8, "linear": 24}


class Branch(enum.Enum):
    SUBCRITICAL = "subcritical"  # B < 1
    CRITICAL = "critical"  # B = 1
    SUPERCRITICAL = "supercritical"  # B > 1


def branch_of(beta: float, p: float) -> Branch:
    # B > 1 exactly when (1 - 2p) * beta > 0
    s = (1.0 - 2.0 * p) * beta
    if s > 0:
        return Branch.SUPERCRITICAL
    if s < 0:
        return Branch.SUBCRITICAL
    return Branch.CRITICAL


@dataclass(frozen=True)
class FreeEnergyResult:
    beta: float
    value: float
    g_term: float
    branch: Branch
    n_used: Optional[int] = None


class Slope(NamedTuple):
    """One-sided derivatives; equal wherever the function is differentiable."""

    left: float
    right: float

    @property
    def is_kink(self) -> bool:
        return self.left != self.right


# ----------------------------------------------------------------------------
# finite N


@dataclass(frozen=True)
class BlockLayout:
    """Log weights and log fan-outs of every anchor class in the truncated range."""

    log_weights: np.ndarray  # log(count / |Delta|)
    log_fanouts: np.ndarray
    log_delta: float
    top_level: int


@lru_cache(maxsize=128)
def _layout(kind: str, order: int, entries, N: int) -> BlockLayout:
    model = ModelSpec(kind, order)
    M = mt.TransitionMatrix(entries)
    top = model.top_level(N)
    log_delta = mt.log_delta_count(M, top).log_value
    lw, lr = [], []
    for k in range(model.cutoff(N) + 1, N + 1):
        if k == 1:
            # root anchor, linear family only (power family has cutoff >= 1)
            lw.append(-log_delta)
            lr.append(mt.log_level_count(M, model.target_level(1)).log_value)
            continue
        log_c = mt.log_col_sums(M, k - 1)
        log_r = mt.log_row_sums(M, model.fanout_index(k))
        lw.extend(log_c - log_delta)
        lr.extend(log_r)
    return BlockLayout(np.array(lw), np.array(lr), log_delta, top)


def block_layout(model: ModelSpec, M: mt.TransitionMatrix, N: int) -> BlockLayout:
    if N < 1:
        raise ValueError(f"truncation N must be >= 1, got {N}")
    return _layout(model.kind, model.order, M.entries, N)


class FiniteFreeEnergy:
    """``F_N`` as a function of ``beta`` for fixed model, tree and ``N``.

    Methods accept scalars or arrays of ``beta``.
    """

    def __init__(self, model: ModelSpec, M: mt.TransitionMatrix, N: int,
                 check_growth: bool = True, threshold: float = DEFAULT_BRANCH_THRESHOLD):
        if check_growth:
            mt.check_growth_condition(M)
        self.model = model
        self.M = M
        self.N = N
        self.threshold = threshold
        self.layout = block_layout(model, M, N)

    def _grid(self, beta):
        b = np.asarray(beta, dtype=np.float64)
        return b, b.reshape(b.shape + (1,))

    @staticmethod
    def _out(b, arr):
        return arr if b.ndim else float(arr)

    def value(self, beta):
        b, col = self._grid(beta)
        lw, lr = self.layout.log_weights, self.layout.log_fanouts
        _, const, slope = block_total_parts(self.model.p, lr, col)
        terms = np.exp(lw) * const + _times_fanout(lw + lr, slope)
        return self._out(b, terms.sum(axis=-1))

    def g_term(self, beta):
        b, col = self._grid(beta)
        p = self.model.p
        lw, lr = self.layout.log_weights, self.layout.log_fanouts
        log_b = log_minus_factor(col, p) - log_plus_factor(col, p)
        offset = math.log1p(-p) - math.log(p)
        x = offset + _times_fanout(lr, log_b)
        w = np.exp(lw)
        with np.errstate(over="ignore", invalid="ignore"):
            big = w * offset + _times_fanout(lw + lr, log_b) + w * np.log1p(np.exp(-np.abs(x)))
        small = w * softplus(np.minimum(x, self.threshold), self.threshold)
        terms = np.where(x > self.threshold, big, small)
        return self._out(b, terms.sum(axis=-1))

    def derivative(self, beta) -> Slope:
        b, col = self._grid(beta)
        p = self.model.p
        lw, lr = self.layout.log_weights, self.layout.log_fanouts
        la, lb = log_plus_factor(col, p), log_minus_factor(col, p)
        x = math.log1p(-p) - math.log(p) + _times_fanout(lr, lb - la)
        pi_minus = expit(x)
        mixed = (1.0 - pi_minus) * dlog_mix(p, col) + pi_minus * dlog_mix(1.0 - p, col)
        d = self._out(b, _times_fanout(lw + lr, mixed).sum(axis=-1))
        return Slope(d, d)

    @property
    def slope_bounds(self) -> tuple[float, float]:
        w = float(np.exp(self.layout.log_weights + self.layout.log_fanouts).sum())
        return -w, w

    def result(self, beta: float) -> FreeEnergyResult:
        return FreeEnergyResult(float(beta), self.value(beta), self.g_term(beta),
                                branch_of(beta, self.model.p), self.N)


def finite_free_energy(model: ModelSpec, M: mt.TransitionMatrix, N: int, beta: float,
                       check_growth: bool = True) -> FreeEnergyResult:
    """Truncated free energy at a single ``beta``."""
    return FiniteFreeEnergy(model, M, N, check_growth).result(beta)


def g_term_finite(model: ModelSpec, M: mt.TransitionMatrix, N: int, beta: float,
                  check_growth: bool = True) -> float:
    return FiniteFreeEnergy(model, M, N, check_growth).g_term(beta)


# ----------------------------------------------------------------------------
# limit


class ClosedFormFreeEnergy:
    """``c log A + G`` with ``G = c log B`` when ``B > 1`` and 0 otherwise."""

    def __init__(self, model: ModelSpec, gamma: float):
        if not gamma > 1.0:
            raise ValueError(f"closed form needs gamma > 1, got {gamma}")
        self.model = model
        self.gamma = float(gamma)
        self.c = model.coefficient(self.gamma)

    def _super(self, b):
        return (1.0 - 2.0 * self.model.p) * b > 0

    def value(self, beta):
        b = np.asarray(beta, dtype=np.float64)
        p = self.model.p
        out = self.c * np.where(self._super(b), log_minus_factor(b, p), log_plus_factor(b, p))
        return out if b.ndim else float(out)

    def g_term(self, beta):
        b = np.asarray(beta, dtype=np.float64)
        p = self.model.p
        g = self.c * (log_minus_factor(b, p) - log_plus_factor(b, p))
        out = np.where(self._super(b), g, 0.0)
        return out if b.ndim else float(out)

    def _side(self, beta: float, sign: float) -> float:
        p = self.model.p
        s = (1.0 - 2.0 * p) * (beta if beta != 0 else sign)
        w = 1.0 - p if s > 0 else p
        return self.c * float(dlog_mix(w, beta))

    def derivative(self, beta: float) -> Slope:
        return Slope(self._side(beta, -1.0), self._side(beta, 1.0))

    @property
    def slope_bounds(self) -> tuple[float, float]:
        return -self.c, self.c

    def result(self, beta: float) -> FreeEnergyResult:
        return FreeEnergyResult(float(beta), self.value(beta), self.g_term(beta),
                                branch_of(beta, self.model.p), None)


def closed_form_free_energy(model: ModelSpec, gamma: float, beta: float) -> FreeEnergyResult:
    return ClosedFormFreeEnergy(model, gamma).result(beta)


def free_energy_derivative(model: ModelSpec, gamma: float, beta: float) -> Slope:
    """Analytic one-sided derivatives of the limit; they differ only at ``beta = 0``, ``p != 1/2``."""
    return ClosedFormFreeEnergy(model, gamma).derivative(beta)


def special_case_fixtures(kind: str, beta: float, p: float, d: int = 2) -> FreeEnergyResult:
    """Explicit ``q = 2`` formulas for the d-tree and the golden-mean tree.

    Evaluated from their own coefficients, ``d/(d+1)`` and ``(sqrt(5)-1)/2``,
    independently of :meth:`ModelSpec.coefficient`.
    """
    if kind == "dtree":
        if d < 2:
            raise ValueError("d-tree needs d >= 2")
        c = d / (d + 1.0)
    elif kind == "goldenmean":
        c = (math.sqrt(5.0) - 1.0) / 2.0
    else:
        raise ValueError(f"unknown special case {kind!r}")
    log_a = math.log(p * math.exp(beta) + (1 - p) * math.exp(-beta))
    log_b = math.log((1 - p) * math.exp(beta) + p * math.exp(-beta)) - log_a
    g = c * log_b if log_b > 0 else 0.0
    return FreeEnergyResult(float(beta), c * log_a + g, g, branch_of(beta, p), None)
