"""Brute-force oracles over complete coalition enumerations.

Everything here scales exponentially in the variable count and exists as
ground truth: exact per-order pair interactions, Shapley values and the
pairwise Shapley interaction index, the order-weighted reconstruction of the
full output, and the exact expectation of the nested-subset difference.
Sampling estimators and theory curves are checked against these oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .games import EXACT_MAX_VARS, Coalition, Game, popcount
from .theory import efficiency_weight, theorem2_weight
from .util import round_half_up, snap_to_int

# All-pairs, all-orders enumeration touches n^2 * 2^n values.
ALL_PAIRS_MAX_VARS = 16

# Full Shapley enumeration is 2^(n-1) marginals per variable.
SHAPLEY_MAX_VARS = 20


def _expand_submasks(rest: np.ndarray, width: int) -> np.ndarray:
    """All 2^width masks over the index positions listed in ``rest``."""
    sub = np.arange(1 << width, dtype=np.int64)
    full = np.zeros_like(sub)
    for t in range(width):
        full |= ((sub >> t) & 1) << int(rest[t])
    return full


def _pair_contexts(n: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """(masks, sizes) of every context avoiding the pair (i, j)."""
    rest = np.array([k for k in range(n) if k not in (i, j)], dtype=np.int64)
    masks = _expand_submasks(rest, n - 2)
    return masks, popcount(masks)


def _check_pair(n: int, i: int, j: int) -> None:
    if i == j:
        raise ValueError("pair must consist of two distinct variables")
    if not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"pair ({i}, {j}) outside [0, {n})")


def interactions_for_pair(game: Game, i: int, j: int, table: np.ndarray | None = None) -> np.ndarray:
    """Exact order-m interactions of one pair, for every m in [0, n-2].

    Entry m is the mean pairwise increment over all C(n-2, m) contexts of
    size m.  Passing a precomputed value table avoids re-evaluating the game.
    """
    n = game.n
    _check_pair(n, i, j)
    if n > EXACT_MAX_VARS:
        raise CapacityError(f"exact enumeration limited to n <= {EXACT_MAX_VARS}, got {n}")
    masks, sizes = _pair_contexts(n, i, j)
    bi, bj = 1 << min(i, j), 1 << max(i, j)  # canonical order: (i,j) == (j,i) exactly
    if table is not None:
        dv = table[masks | bi | bj] - table[masks | bi] - table[masks | bj] + table[masks]
    else:
        stacked = np.concatenate([masks | bi | bj, masks | bi, masks | bj, masks])
        vals = game.values_for_masks(stacked).reshape(4, -1)
        dv = vals[0] - vals[1] - vals[2] + vals[3]
    sums = np.bincount(sizes, weights=dv, minlength=n - 1)
    counts = np.bincount(sizes, minlength=n - 1)
    return sums / counts


def interaction_exact(game: Game, i: int, j: int, m: int) -> float:
    """Exact order-m interaction between variables i and j."""
    if m < 0 or m > game.n - 2:
        raise ValueError(f"order {m} outside [0, {game.n - 2}]")
    return float(interactions_for_pair(game, i, j)[m])


def all_pair_interactions(game: Game) -> np.ndarray:
    """Exact interactions for every ordered pair: shape (n, n, n-1), NaN diagonal."""
    n = game.n
    if n > ALL_PAIRS_MAX_VARS:
        raise CapacityError(
            f"all-pairs enumeration limited to n <= {ALL_PAIRS_MAX_VARS}, got {n}; "
            "use the sampling estimators instead"
        )
    table = game.value_table()
    out = np.full((n, n, n - 1), np.nan)
    for i in range(n):
        for j in range(i + 1, n):
            vec = interactions_for_pair(game, i, j, table=table)
            out[i, j] = vec
            out[j, i] = vec
    return out


@dataclass(frozen=True)
class InteractionMatrix:
    """Symmetric matrix of order-m interactions; the diagonal is undefined."""

    n: int
    order: int
    values: np.ndarray


def interaction_matrix(game: Game, m: int) -> InteractionMatrix:
    if m < 0 or m > game.n - 2:
        raise ValueError(f"order {m} outside [0, {game.n - 2}]")
    return InteractionMatrix(n=game.n, order=m, values=all_pair_interactions(game)[:, :, m])


def shapley_value_exact(game: Game, i: int, table: np.ndarray | None = None) -> float:
    """Shapley value of variable i by full enumeration of 2^(n-1) contexts."""
    n = game.n
    if n > SHAPLEY_MAX_VARS:
        raise CapacityError(f"exact Shapley values limited to n <= {SHAPLEY_MAX_VARS}, got {n}")
    if not 0 <= i < n:
        raise ValueError(f"variable {i} outside [0, {n})")
    rest = np.array([k for k in range(n) if k != i], dtype=np.int64)
    masks = _expand_submasks(rest, n - 1)
    sizes = popcount(masks)
    fact = [math.factorial(k) for k in range(n + 1)]
    weights = np.array([fact[s] * fact[n - s - 1] / fact[n] for s in range(n)])
    bi = 1 << i
    if table is None:
        table = game.value_table()
    marginals = table[masks | bi] - table[masks]
    return float((weights[sizes] * marginals).sum())


def shapley_values(game: Game) -> np.ndarray:
    """Shapley values of all variables; they sum to v(N) - v(empty)."""
    table = game.value_table()
    return np.array([shapley_value_exact(game, i, table=table) for i in range(game.n)])


def shapley_interaction_index(game: Game, i: int, j: int) -> float:
    """Pairwise Shapley interaction index: mean of the per-order interactions.

    Equals 1/(n-1) times the sum of order-m interactions over m = 0..n-2.
    """
    return float(interactions_for_pair(game, i, j).sum() / (game.n - 1))


@dataclass(frozen=True)
class EfficiencyComponents:
    """Exact additive decomposition of the full-coalition output.

    v(N) = v_empty + sum(mu) + sum_m weight(m) * order_sums[m], where
    order_sums[m] adds order-m interactions over ORDERED pairs (each
    unordered pair counted twice) and mu_i = v({i}) - v(empty).
    """

    v_empty: float
    mu: np.ndarray
    order_sums: np.ndarray
    reconstruction: float
    v_full: float


def efficiency_decomposition(game: Game) -> EfficiencyComponents:
    n = game.n
    table = game.value_table()
    interactions = all_pair_interactions(game)
    v_empty = float(table[0])
    mu = table[1 << np.arange(n)] - v_empty
    # Ordered-pair sums: twice the upper triangle.
    iu = np.triu_indices(n, k=1)
    order_sums = 2.0 * interactions[iu].sum(axis=0)
    weights = np.array([efficiency_weight(n, m) for m in range(n - 1)])
    reconstruction = v_empty + float(mu.sum()) + float(weights @ order_sums)
    return EfficiencyComponents(
        v_empty=v_empty,
        mu=mu,
        order_sums=order_sums,
        reconstruction=reconstruction,
        v_full=float(table[(1 << n) - 1]),
    )


def delta_v_pair(game: Game, s1: Coalition, s2: Coalition, r1: float, r2: float) -> float:
    """Output difference v(S2) - (r2/r1) v(S1) for nested subsets S1 < S2.

    With r1 = 0 (so S1 is empty) the ratio is undefined and the difference
    degrades to v(S2) - v(empty).
    """
    n = game.n
    if s1.n != n or s2.n != n:
        raise ValueError("coalitions must live on the game's variable set")
    if not s1.issubset(s2) or s1.bits == s2.bits:
        raise ValueError("S1 must be a proper subset of S2")
    expect1 = round_half_up(snap_to_int(r1 * n))
    expect2 = round_half_up(snap_to_int(r2 * n))
    if s1.size != expect1 or s2.size != expect2:
        raise ValueError(
            f"subset sizes ({s1.size}, {s2.size}) do not match rounded ratios ({expect1}, {expect2})"
        )
    if s1.size == 0:
        return game.value(s2) - game.value(Coalition.empty(n))
    return game.value(s2) - (r2 / r1) * game.value(s1)


def theorem2_rhs(game: Game, r1: float, r2: float) -> float:
    """Exact expectation of the nested-subset difference over uniform draws.

    Evaluates the interaction-weighted form: a base term plus the ordered-pair
    sum of order-m interactions scaled by the band-pass weights.  For r1 = 0
    the base term is r2 * sum(mu) because the single-variable utilities no
    longer cancel between the two subsets.
    """
    n = game.n
    if not (0 <= r1 < r2 <= 1):
        raise ValueError(f"need 0 <= r1 < r2 <= 1, got ({r1}, {r2})")
    s1 = snap_to_int(r1 * n)
    s2 = snap_to_int(r2 * n)
    if not (float(s1).is_integer() and float(s2).is_integer()):
        raise ValueError(f"r1*n and r2*n must be integral, got ({r1 * n}, {r2 * n})")
    interactions = all_pair_interactions(game)
    iu = np.triu_indices(n, k=1)
    order_sums = 2.0 * interactions[iu].sum(axis=0)
    weights = np.array([theorem2_weight(n, r1, r2, m) for m in range(n - 1)])
    total = float(weights @ order_sums)
    table = game.value_table()
    v_empty = float(table[0])
    if int(s1) == 0:
        mu = table[1 << np.arange(n)] - v_empty
        return total + r2 * float(mu.sum())
    return total + (1.0 - r2 / r1) * v_empty
