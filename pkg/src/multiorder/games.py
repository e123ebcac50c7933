"""Coalitions, set-function games, and the elementary pairwise increment.

A game assigns a real value to every subset ("coalition") of the n input
variables.  Masked-classifier games realize this by replacing the variables
outside the coalition with per-feature baseline values and reading a scalar
off the network output; analytic games provide closed-form oracles for tests.
"""

from __future__ import annotations

import itertools
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError, NumericError

# One machine word of mask bits; beyond this, exact enumeration is hopeless
# and the sampling estimators must be used.
EXACT_MAX_VARS = 24

# Probability clamp applied before log-odds.
PROB_EPS = 1e-12


def popcount(masks: np.ndarray) -> np.ndarray:
    """Number of set bits per entry of an integer mask array."""
    return np.bitwise_count(np.asarray(masks, dtype=np.uint64)).astype(np.int64)


@dataclass(frozen=True)
class Coalition:
    """An immutable subset of the variable indices {0, ..., n-1}.

    Stored as a bit mask: bit i is set iff variable i belongs to the subset.
    """

    bits: int
    n: int

    def __post_init__(self) -> None:
        if not 0 < self.n <= EXACT_MAX_VARS:
            raise CapacityError(f"variable count must be in [1, {EXACT_MAX_VARS}], got {self.n}")
        if self.bits < 0 or self.bits >> self.n:
            raise ValueError(f"mask {self.bits:#x} has bits outside [0, {self.n})")

    @classmethod
    def empty(cls, n: int) -> "Coalition":
        return cls(0, n)

    @classmethod
    def full(cls, n: int) -> "Coalition":
        return cls((1 << n) - 1, n)

    @classmethod
    def of(cls, n: int, *members: int) -> "Coalition":
        return cls.from_iterable(n, members)

    @classmethod
    def from_iterable(cls, n: int, members: Iterable[int]) -> "Coalition":
        bits = 0
        for i in members:
            if not 0 <= i < n:
                raise ValueError(f"member {i} outside [0, {n})")
            bits |= 1 << i
        return cls(bits, n)

    @property
    def size(self) -> int:
        return self.bits.bit_count()

    def members(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n) if self.bits >> i & 1)

    def complement(self) -> "Coalition":
        return Coalition(~self.bits & (1 << self.n) - 1, self.n)

    def add(self, i: int) -> "Coalition":
        if not 0 <= i < self.n:
            raise ValueError(f"member {i} outside [0, {self.n})")
        return Coalition(self.bits | 1 << i, self.n)

    def remove(self, i: int) -> "Coalition":
        return Coalition(self.bits & ~(1 << i), self.n)

    def issubset(self, other: "Coalition") -> bool:
        self._check_same_universe(other)
        return self.bits & ~other.bits == 0

    def _check_same_universe(self, other: "Coalition") -> None:
        if self.n != other.n:
            raise ValueError(f"coalitions over different universes: n={self.n} vs n={other.n}")

    def __or__(self, other: "Coalition") -> "Coalition":
        self._check_same_universe(other)
        return Coalition(self.bits | other.bits, self.n)

    def __and__(self, other: "Coalition") -> "Coalition":
        self._check_same_universe(other)
        return Coalition(self.bits & other.bits, self.n)

    def __sub__(self, other: "Coalition") -> "Coalition":
        self._check_same_universe(other)
        return Coalition(self.bits & ~other.bits, self.n)

    def __contains__(self, i: int) -> bool:
        return 0 <= i < self.n and bool(self.bits >> i & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.members())

    def __len__(self) -> int:
        return self.size


def subsets_of_size(pool: Coalition, m: int) -> Iterator[Coalition]:
    """Yield every size-m subset of ``pool``, in lexicographic member order.

    Exactly C(|pool|, m) coalitions are produced; the order is deterministic.
    """
    if m < 0 or m > pool.size:
        raise ValueError(f"subset size {m} outside [0, {pool.size}]")
    for combo in itertools.combinations(pool.members(), m):
        bits = 0
        for i in combo:
            bits |= 1 << i
        yield Coalition(bits, pool.n)


def mask_input(x: np.ndarray, coalition: Coalition, baseline: np.ndarray) -> np.ndarray:
    """Keep the coalition's features from ``x``; replace the rest by ``baseline``."""
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if x.shape != (coalition.n,) or baseline.shape != (coalition.n,):
        raise ValueError(
            f"expected vectors of length {coalition.n}, got {x.shape} and {baseline.shape}"
        )
    keep = (coalition.bits >> np.arange(coalition.n) & 1).astype(bool)
    return np.where(keep, x, baseline)


def masked_batch(x: np.ndarray, masks: np.ndarray, baseline: np.ndarray) -> np.ndarray:
    """Stack of masked copies of ``x``, one row per bit mask."""
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.int64)
    n = x.shape[0]
    keep = (masks[:, None] >> np.arange(n)[None, :] & 1).astype(bool)
    return np.where(keep, x[None, :], baseline[None, :])


def log_odds(p):
    """ln(p / (1-p)) with both sides of the odds clamped at 1e-12.

    Equivalent to clamping p into [1e-12, 1 - 1e-12] but computed as
    log(max(p, eps)) - log(max(1-p, eps)), which avoids the catastrophic
    cancellation in 1 - (1 - eps) and makes log_odds(p) == -log_odds(1-p)
    exact.  Accepts scalars or arrays; NaN is rejected rather than propagated.
    """
    arr = np.asarray(p, dtype=np.float64)
    if np.isnan(arr).any():
        raise NumericError("log_odds received NaN probability")
    if (arr < 0).any() or (arr > 1).any():
        raise ValueError("probabilities must lie in [0, 1]")
    out = np.log(np.maximum(arr, PROB_EPS)) - np.log(np.maximum(1.0 - arr, PROB_EPS))
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


class Game(ABC):
    """Contract for a set function v over coalitions of n variables.

    Implementations must be pure: repeated evaluation of the same coalition
    returns the same value, so instances are safe to share across workers.
    """

    n: int

    @abstractmethod
    def value(self, coalition: Coalition) -> float:
        """v(S) for a single coalition."""

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        """Vectorized v over an array of bit masks; default is a scalar loop."""
        masks = np.asarray(masks, dtype=np.int64)
        return np.array([self.value(Coalition(int(b), self.n)) for b in masks.ravel()]).reshape(
            masks.shape
        )

    def value_table(self) -> np.ndarray:
        """v over all 2^n coalitions, indexed by mask."""
        if self.n > EXACT_MAX_VARS:
            raise CapacityError(f"cannot enumerate 2^{self.n} coalitions (limit n={EXACT_MAX_VARS})")
        return self.values_for_masks(np.arange(1 << self.n, dtype=np.int64))


def delta_v(game: Game, i: int, j: int, coalition: Coalition) -> float:
    """Pairwise increment v(S+ij) - v(S+i) - v(S+j) + v(S) for a context S.

    Measures how much i and j cooperate beyond their separate effects, given
    that exactly the variables in S are present.
    """
    if i == j:
        raise ValueError("delta_v requires two distinct variables")
    if i in coalition or j in coalition:
        raise ValueError("context must not contain either variable of the pair")
    lo, hi = min(i, j), max(i, j)  # canonical order keeps (i,j) and (j,i) bit-identical
    s = coalition
    return (
        game.value(s.add(lo).add(hi))
        - game.value(s.add(lo))
        - game.value(s.add(hi))
        + game.value(s)
    )


def delta_v_for_masks(game: Game, i: int, j: int, context_masks: np.ndarray) -> np.ndarray:
    """Vectorized ``delta_v`` over an array of context bit masks."""
    context_masks = np.asarray(context_masks, dtype=np.int64)
    bi, bj = 1 << min(i, j), 1 << max(i, j)
    if ((context_masks & (bi | bj)) != 0).any():
        raise ValueError("context masks must exclude the pair")
    stacked = np.concatenate(
        [context_masks | bi | bj, context_masks | bi, context_masks | bj, context_masks]
    )
    vals = game.values_for_masks(stacked).reshape(4, -1)
    return vals[0] - vals[1] - vals[2] + vals[3]


class AdditiveGame(Game):
    """v(S) = base + sum of per-member coefficients; has no interactions."""

    def __init__(self, coefficients: Sequence[float], base: float = 0.0):
        self.coefficients = np.asarray(coefficients, dtype=np.float64)
        self.base = float(base)
        self.n = self.coefficients.shape[0]

    def value(self, coalition: Coalition) -> float:
        return self.base + float(self.coefficients[list(coalition.members())].sum())

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        keep = (masks[:, None] >> np.arange(self.n)[None, :]) & 1
        return self.base + keep @ self.coefficients


class PairwiseAndGame(Game):
    """v(S) = weight iff both designated variables are present, else 0."""

    def __init__(self, n: int, i: int, j: int, weight: float = 1.0):
        if i == j or not (0 <= i < n and 0 <= j < n):
            raise ValueError("need two distinct variables inside [0, n)")
        self.n = n
        self.pair_bits = (1 << i) | (1 << j)
        self.weight = float(weight)

    def value(self, coalition: Coalition) -> float:
        return self.weight if coalition.bits & self.pair_bits == self.pair_bits else 0.0

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        return np.where((masks & self.pair_bits) == self.pair_bits, self.weight, 0.0)


class ParityGame(Game):
    """v(S) = |S| mod 2; every pair interacts at every order."""

    def __init__(self, n: int):
        self.n = n

    def value(self, coalition: Coalition) -> float:
        return float(coalition.size % 2)

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        return (popcount(masks) % 2).astype(np.float64)


class TableGame(Game):
    """v read from an explicit table over all 2^n coalitions."""

    def __init__(self, table: np.ndarray):
        table = np.asarray(table, dtype=np.float64)
        n = int(table.shape[0]).bit_length() - 1
        if table.ndim != 1 or table.shape[0] != 1 << n:
            raise ValueError("table length must be a power of two")
        self.table = table
        self.n = n

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, scale: float = 1.0) -> "TableGame":
        return cls(scale * rng.standard_normal(1 << n))

    def value(self, coalition: Coalition) -> float:
        return float(self.table[coalition.bits])

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        return self.table[np.asarray(masks, dtype=np.int64)]


def _stable_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class MaskedModelGame(Game):
    """v(S) read off a classifier evaluated on baseline-masked inputs.

    ``output="log-odds"`` returns ln(p/(1-p)) of the target class probability;
    ``output="logit"`` returns the raw pre-softmax logit of the target class.
    Values are memoized so repeated queries are bit-identical and cheap; with
    ``precompute`` (default for n <= 12) the full 2^n table is filled by one
    batched forward pass on first use.
    """

    DENSE_MEMO_MAX = 16

    def __init__(
        self,
        model,
        x: np.ndarray,
        baseline: np.ndarray,
        target_class: int,
        output: str = "log-odds",
        precompute: bool | None = None,
    ):
        self.model = model
        self.x = np.asarray(x, dtype=np.float64)
        self.baseline = np.asarray(baseline, dtype=np.float64)
        if self.x.shape != self.baseline.shape or self.x.ndim != 1:
            raise ValueError("sample and baseline must be vectors of equal length")
        if output not in ("log-odds", "logit"):
            raise ValueError(f"unknown output mode {output!r}")
        self.n = self.x.shape[0]
        self.target_class = int(target_class)
        self.output = output
        self._dense = self.n <= self.DENSE_MEMO_MAX
        if self._dense:
            self._memo = np.full(1 << self.n, np.nan)
        else:
            self._memo: dict[int, float] = {}
        if precompute is None:
            precompute = self.n <= 12
        if precompute and self._dense:
            self.values_for_masks(np.arange(1 << self.n, dtype=np.int64))

    def _scores(self, inputs: np.ndarray) -> np.ndarray:
        logits = self.model.forward(inputs)
        if self.output == "logit":
            return logits[:, self.target_class]
        probs = _stable_softmax(logits)[:, self.target_class]
        return log_odds(probs)

    def values_for_masks(self, masks: np.ndarray) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        flat = masks.ravel()
        if self._dense:
            missing = np.unique(flat[np.isnan(self._memo[flat])])
            if missing.size:
                self._memo[missing] = self._scores(masked_batch(self.x, missing, self.baseline))
            return self._memo[flat].reshape(masks.shape)
        missing = np.unique(flat)
        missing = missing[[int(b) not in self._memo for b in missing]]
        if missing.size:
            scored = self._scores(masked_batch(self.x, missing, self.baseline))
            self._memo.update(zip((int(b) for b in missing), scored.tolist()))
        return np.array([self._memo[int(b)] for b in flat]).reshape(masks.shape)

    def value(self, coalition: Coalition) -> float:
        if coalition.n != self.n:
            raise ValueError(f"coalition over n={coalition.n}, game has n={self.n}")
        return float(self.values_for_masks(np.array([coalition.bits]))[0])
