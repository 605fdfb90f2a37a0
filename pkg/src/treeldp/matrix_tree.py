"""Combinatorics of Markov-Cayley trees generated by a 0-1 transition matrix.

Level ``n`` of the tree is the set of admissible words of length ``n`` (the
root is the empty word at level 0).  Symbols are numbered ``1..d`` in the
public API.  Every count has an exact big-integer form, available while the
required matrix power stays below ``exact_cap``, and a log-domain form
computed by renormalized vector iteration that works for any level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .errors import (
    GrowthConditionViolated,
    IndexOutOfRange,
    MaxIterExceeded,
    NonBinaryEntry,
    NonSquare,
    SizeLimitExceeded,
    ZeroColumn,
    ZeroRow,
)
from .lognum import LogNonNegative, logsumexp

if TYPE_CHECKING:
    from .ising_blocks import ModelSpec

DEFAULT_EXACT_CAP = 64
DEFAULT_GROWTH_TOL = 1e-12
DEFAULT_GROWTH_MAX_ITER = 100_000


@dataclass(frozen=True)
class TransitionMatrix:
    """Essential d x d 0-1 matrix; build it through :func:`validate`."""

    entries: tuple[tuple[int, ...], ...]

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.entries, dtype=np.int64)

    def __repr__(self) -> str:
        return f"TransitionMatrix({[list(r) for r in self.entries]})"


def validate(raw) -> TransitionMatrix:
    """Check that ``raw`` is a square, essential 0-1 matrix."""
    rows = [list(r) for r in raw]
    d = len(rows)
    if d == 0 or any(len(r) != d for r in rows):
        raise NonSquare(f"matrix must be square and non-empty, got row lengths {[len(r) for r in rows]}")
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            if isinstance(v, bool) or v not in (0, 1) or (isinstance(v, float) and not v.is_integer()):
                raise NonBinaryEntry(f"entry ({i + 1},{j + 1}) = {v!r} is not 0 or 1")
    entries = tuple(tuple(int(v) for v in row) for row in rows)
    for i, row in enumerate(entries):
        if not any(row):
            raise ZeroRow(i + 1)
    for j in range(d):
        if not any(entries[i][j] for i in range(d)):
            raise ZeroColumn(j + 1)
    return TransitionMatrix(entries)


def full_matrix(d: int) -> TransitionMatrix:
    """Transition matrix of the conventional d-tree."""
    return validate([[1] * d for _ in range(d)])


GOLDEN_MEAN = validate([[1, 1], [1, 0]])


# ----------------------------------------------------------------------------
# exact arithmetic


def _check_cap(exponent: int, exact_cap: Optional[int]) -> None:
    if exact_cap is not None and exponent > exact_cap:
        raise SizeLimitExceeded(f"exact matrix power M^{exponent} exceeds the cap M^{exact_cap}")


def _matmul(a, b):
    n = len(a)
    return tuple(tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)) for i in range(n))


@lru_cache(maxsize=512)
def _power_list(entries) -> list:
    d = len(entries)
    return [tuple(tuple(int(i == j) for j in range(d)) for i in range(d))]


def matrix_power(M: TransitionMatrix, n: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP):
    """Exact ``M**n`` as nested tuples of Python ints."""
    if n < 0:
        raise IndexOutOfRange(f"negative matrix power {n}")
    _check_cap(n, exact_cap)
    powers = _power_list(M.entries)
    while len(powers) <= n:
        powers.append(_matmul(powers[-1], M.entries))
    return powers[n]


def norm(M: TransitionMatrix, n: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> int:
    """``||M^n|| = 1^t M^n 1``."""
    return sum(sum(r) for r in matrix_power(M, n, exact_cap))


def _check_symbol(M: TransitionMatrix, s: int) -> None:
    if not 1 <= s <= M.d:
        raise IndexOutOfRange(f"symbol {s} outside 1..{M.d}")


def _check_level(k: int, lowest: int) -> None:
    if k < lowest:
        raise IndexOutOfRange(f"level index {k} below {lowest}")


def level_count(M: TransitionMatrix, n: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> int:
    """``|T_n|``, the number of nodes on level ``n``."""
    _check_level(n, 0)
    if n == 0:
        return 1
    return norm(M, n - 1, exact_cap)


def delta_count(M: TransitionMatrix, n: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> int:
    """``|Delta_n|``, the number of nodes within distance ``n`` of the root."""
    _check_level(n, 0)
    return sum(level_count(M, m, exact_cap) for m in range(n + 1))


def row_sums(M: TransitionMatrix, k: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> tuple[int, ...]:
    """All row sums ``R(k, i)`` of ``M^(k-1)``: level-``k`` words starting with ``i``."""
    _check_level(k, 1)
    return tuple(sum(r) for r in matrix_power(M, k - 1, exact_cap))


def col_sums(M: TransitionMatrix, k: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> tuple[int, ...]:
    """All column sums ``C(k, j)`` of ``M^(k-1)``: level-``k`` words ending with ``j``."""
    _check_level(k, 1)
    P = matrix_power(M, k - 1, exact_cap)
    return tuple(sum(P[i][j] for i in range(M.d)) for j in range(M.d))


def row_sum(M: TransitionMatrix, k: int, i: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> int:
    _check_symbol(M, i)
    return row_sums(M, k, exact_cap)[i - 1]


def col_sum(M: TransitionMatrix, k: int, j: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> int:
    _check_symbol(M, j)
    return col_sums(M, k, exact_cap)[j - 1]


# ----------------------------------------------------------------------------
# log-domain arithmetic


@lru_cache(maxsize=256)
def _log_tables(entries, n_max: int, transpose: bool) -> np.ndarray:
    """Row ``m`` holds ``log`` of ``M^m 1`` (or ``1^t M^m`` when transposed), m = 0..n_max."""
    A = np.array(entries, dtype=np.float64)
    if transpose:
        A = A.T
    d = A.shape[0]
    out = np.empty((n_max + 1, d))
    v = np.ones(d)
    scale = 0.0
    with np.errstate(divide="ignore"):
        out[0] = 0.0
        for m in range(1, n_max + 1):
            v = A @ v
            top = v.max()
            v = v / top
            scale += math.log(top)
            out[m] = np.log(v) + scale
    out.setflags(write=False)
    return out


def _table(M: TransitionMatrix, n_max: int, transpose: bool) -> np.ndarray:
    # round the size up so neighbouring requests share one cached table
    size = max(64, 1 << max(0, n_max).bit_length())
    return _log_tables(M.entries, size, transpose)


def log_row_sums(M: TransitionMatrix, k: int) -> np.ndarray:
    """``log R(k, i)`` for i = 1..d via renormalized iteration of ``M`` on the ones vector."""
    _check_level(k, 1)
    return _table(M, k - 1, False)[k - 1].copy()


def log_col_sums(M: TransitionMatrix, k: int) -> np.ndarray:
    """``log C(k, j)`` for j = 1..d via renormalized iteration of ``M^t``."""
    _check_level(k, 1)
    return _table(M, k - 1, True)[k - 1].copy()


def log_row_sum(M: TransitionMatrix, k: int, i: int) -> LogNonNegative:
    _check_symbol(M, i)
    return LogNonNegative(float(log_row_sums(M, k)[i - 1]))


def log_col_sum(M: TransitionMatrix, k: int, j: int) -> LogNonNegative:
    _check_symbol(M, j)
    return LogNonNegative(float(log_col_sums(M, k)[j - 1]))


def log_level_count(M: TransitionMatrix, n: int) -> LogNonNegative:
    _check_level(n, 0)
    if n == 0:
        return LogNonNegative.one()
    return LogNonNegative(logsumexp(log_row_sums(M, n)))


def log_level_counts(M: TransitionMatrix, n_max: int) -> np.ndarray:
    """``log |T_n|`` for n = 0..n_max."""
    rows = _table(M, max(n_max - 1, 0), False)
    out = np.empty(n_max + 1)
    out[0] = 0.0
    for n in range(1, n_max + 1):
        out[n] = logsumexp(rows[n - 1])
    return out


def log_delta_count(M: TransitionMatrix, n: int) -> LogNonNegative:
    _check_level(n, 0)
    return LogNonNegative(logsumexp(log_level_counts(M, n)))


@dataclass(frozen=True)
class LevelCounts:
    """``|T_0..n|`` exactly (``None`` past the cap) and in log domain."""

    exact: tuple[Optional[int], ...]
    log: tuple[float, ...]


def level_counts(M: TransitionMatrix, n_max: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP) -> LevelCounts:
    exact = []
    for n in range(n_max + 1):
        try:
            exact.append(level_count(M, n, exact_cap))
        except SizeLimitExceeded:
            exact.append(None)
    return LevelCounts(tuple(exact), tuple(float(x) for x in log_level_counts(M, n_max)))


# ----------------------------------------------------------------------------
# growth rate


@dataclass(frozen=True)
class GrowthEstimate:
    gamma: float
    iterations: int
    residual: float
    ratios: tuple[float, ...] = ()


def growth_rate(
    M: TransitionMatrix,
    tol: float = DEFAULT_GROWTH_TOL,
    max_iter: int = DEFAULT_GROWTH_MAX_ITER,
    keep_ratios: int = 0,
) -> GrowthEstimate:
    """Estimate ``gamma = lim ||M^(n+1)|| / ||M^n||`` by normalized power iteration.

    Stops once two successive ratios differ by less than ``tol``.  A limit
    that does not exceed ``1 + tol`` (or a ratio sequence that never settles)
    violates the growth hypothesis and raises instead of returning a value.
    ``keep_ratios`` retains the first few ratios for reporting.
    """
    A = M.array.astype(np.float64)
    v = np.ones(M.d)
    s = v.sum()
    prev = math.nan
    recent: list[float] = []
    kept: list[float] = []
    for it in range(1, max_iter + 1):
        w = A @ v
        ws = w.sum()
        ratio = float(ws / s)
        v = w / ws
        s = 1.0
        if len(kept) < keep_ratios:
            kept.append(ratio)
        recent.append(ratio)
        if len(recent) > 10:
            recent.pop(0)
        if abs(ratio - prev) < tol:
            if ratio <= 1.0 + tol:
                raise GrowthConditionViolated(f"level growth ratio settles at {ratio!r} <= 1")
            return GrowthEstimate(ratio, it, abs(ratio - prev), tuple(kept))
        prev = ratio
    spread = max(recent) - min(recent)
    if spread > math.sqrt(tol):
        raise GrowthConditionViolated(
            f"level growth ratio oscillates (spread {spread:.3g} over the last {len(recent)} iterates)"
        )
    raise MaxIterExceeded(f"growth ratio not settled to {tol} after {max_iter} iterations (spread {spread:.3g})")


@lru_cache(maxsize=256)
def _cached_gamma(entries, tol: float) -> float:
    return growth_rate(TransitionMatrix(entries), tol).gamma


def check_growth_condition(M: TransitionMatrix, tol: float = DEFAULT_GROWTH_TOL) -> float:
    """Return gamma, raising :class:`GrowthConditionViolated` if the tree does not grow."""
    return _cached_gamma(M.entries, tol)


# ----------------------------------------------------------------------------
# structural identity


@dataclass(frozen=True)
class LevelProductIdentity:
    level_norm: int
    block_sum: int

    @property
    def holds(self) -> bool:
        return self.level_norm == self.block_sum


def verify_level_product_identity(
    M: TransitionMatrix, model: "ModelSpec", k: int, exact_cap: Optional[int] = DEFAULT_EXACT_CAP
) -> LevelProductIdentity:
    """Compare ``||M^(a(k)k-2)||`` with ``sum_j R(a(k)k-k+1, j) C(k-1, j)``.

    The right side counts the level ``a(k)k-1`` nodes block by block: each
    level ``k-1`` node ending in ``j`` owns ``R(a(k)k-k+1, j)`` descendants there.
    """
    _check_level(k, 3)
    top = model.multiplier(k)
    lhs = norm(M, top - 2, exact_cap)
    R = row_sums(M, top - k + 1, exact_cap)
    C = col_sums(M, k - 1, exact_cap)
    return LevelProductIdentity(lhs, sum(r * c for r, c in zip(R, C)))


def permuted(M: TransitionMatrix, perm: Sequence[int]) -> TransitionMatrix:
    """Relabel symbols: simultaneous row/column permutation (0-based ``perm``)."""
    return validate([[M.entries[perm[i]][perm[j]] for j in range(M.d)] for i in range(M.d)])
