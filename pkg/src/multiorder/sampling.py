"""Sampling-based interaction strength profiles and their stability diagnostic.

Exact per-order interactions need C(n-2, m) game evaluations per pair; for
anything beyond toy sizes the expectation is estimated from uniformly sampled
contexts instead.  A sampling plan pins down every random choice (which
samples, which pairs, which orders, how many contexts) as a pure function of
a seed, so profiles are reproducible and independent of evaluation order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .data import GridSpec
from .errors import ConfigError, NumericError
from .games import Game, delta_v_for_masks
from .serialize import digest_of
from .util import round_half_up

# Above this many possible contexts, index-based without-replacement sampling
# (which materializes the combination table) gives way to draw-and-dedup.
COMBO_TABLE_MAX = 200_000

# Philox stream offsets: pair selection and context draws must never collide.
_PAIR_STREAM_BASE = 1 << 32


def order_from_relative(n: int, rho: float) -> int:
    """Map a relative order in [0, 1] to an integer order, clamped to [0, n-2]."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"relative order {rho} outside [0, 1]")
    return max(0, min(n - 2, round_half_up(rho * n)))


@dataclass(frozen=True)
class PlanConfig:
    """Everything that determines a sampling plan besides the seed.

    ``orders=None`` selects every integer order 0..n-2 (exact-mode style);
    otherwise the given relative orders are mapped through
    ``order_from_relative`` and de-duplicated, keeping the first label.
    ``pairs_per_sample=None`` selects all eligible pairs; a radius restricts
    pairs to grid neighbors within that Chebyshev distance.
    """

    n: int
    num_samples: int
    orders: tuple[float, ...] | None = None
    contexts: int = 100
    pairs_per_sample: int | None = None
    radius: int | None = None
    grid: GridSpec | None = None


@dataclass(frozen=True)
class SamplingPlan:
    n: int
    seed: int
    sample_ids: tuple[int, ...]
    pairs: tuple[tuple[tuple[int, int], ...], ...]
    orders: tuple[int, ...]
    relative_orders: tuple[float, ...]
    contexts: int
    radius: int | None

    @property
    def digest(self) -> str:
        return digest_of(
            {
                "n": self.n,
                "seed": self.seed,
                "sample_ids": list(self.sample_ids),
                "pairs": [list(map(list, p)) for p in self.pairs],
                "orders": list(self.orders),
                "relative_orders": list(self.relative_orders),
                "contexts": self.contexts,
                "radius": self.radius,
            }
        )


def _stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Counter-based stream: independent generator per (seed, stream) key."""
    key = np.array([np.uint64(seed & (1 << 64) - 1), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def build_plan(config: PlanConfig, seed: int) -> SamplingPlan:
    """Deterministic sampling plan; identical (config, seed) yields identical plans."""
    n = config.n
    if n < 3:
        raise ConfigError(f"need at least 3 variables for pair interactions, got n={n}")
    if config.num_samples < 1:
        raise ConfigError("plan needs at least one sample")
    if config.contexts < 1:
        raise ConfigError("plan needs at least one context per (pair, order)")
    if config.radius is not None and config.grid is None:
        raise ConfigError("a neighborhood radius requires a grid layout")
    if config.grid is not None and config.grid.n != n:
        raise ConfigError(f"grid has {config.grid.n} cells but plan has n={n}")

    if config.radius is not None:
        eligible = [
            (i, j)
            for i in range(n)
            for j in range(i + 1, n)
            if config.grid.chebyshev(i, j) <= config.radius
        ]
        if not eligible:
            raise ConfigError(f"no pairs within radius {config.radius}")
    else:
        eligible = [(i, j) for i in range(n) for j in range(i + 1, n)]

    sample_ids = tuple(range(config.num_samples))
    if config.pairs_per_sample is None or config.pairs_per_sample >= len(eligible):
        shared = tuple(eligible)
        pairs = tuple(shared for _ in sample_ids)
    else:
        per_sample = []
        for k in sample_ids:
            rng = _stream_rng(seed, _PAIR_STREAM_BASE + k)
            chosen = rng.choice(len(eligible), size=config.pairs_per_sample, replace=False)
            per_sample.append(tuple(eligible[int(c)] for c in sorted(chosen)))
        pairs = tuple(per_sample)

    if config.orders is None:
        orders = tuple(range(n - 1))
        rhos = tuple(m / (n - 2) if n > 2 else 0.0 for m in orders)
    else:
        orders_list: list[int] = []
        rhos_list: list[float] = []
        for rho in config.orders:
            m = order_from_relative(n, float(rho))
            if m not in orders_list:
                orders_list.append(m)
                rhos_list.append(float(rho))
        orders = tuple(orders_list)
        rhos = tuple(rhos_list)

    return SamplingPlan(
        n=n,
        seed=seed,
        sample_ids=sample_ids,
        pairs=pairs,
        orders=orders,
        relative_orders=rhos,
        contexts=config.contexts,
        radius=config.radius,
    )


@lru_cache(maxsize=256)
def _combo_positions(p: int, m: int) -> np.ndarray:
    """All C(p, m) size-m index combinations as a (C, m) array (cached)."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.combinations(range(p), m)), dtype=np.int64)


def _masks_from_positions(pool: np.ndarray, positions: np.ndarray) -> np.ndarray:
    if positions.shape[1] == 0:
        return np.zeros(positions.shape[0], dtype=np.int64)
    bits = np.int64(1) << pool[positions]
    return np.bitwise_or.reduce(bits, axis=1)


def sample_context_masks(
    pool: np.ndarray, m: int, contexts: int, rng: np.random.Generator
) -> tuple[np.ndarray, bool]:
    """Distinct size-m subset masks of ``pool``: (masks, exhaustive?).

    Enumerates everything when ``contexts`` covers all C(|pool|, m) subsets;
    otherwise samples without replacement (index-based for modest counts,
    draw-and-deduplicate when the combination table would be too large).
    """
    pool = np.asarray(pool, dtype=np.int64)
    p = pool.shape[0]
    if m > p:
        raise ValueError(f"cannot draw {m}-subsets from a pool of {p}")
    total = math.comb(p, m)
    if contexts >= total:
        return _masks_from_positions(pool, _combo_positions(p, m)), True
    if total <= COMBO_TABLE_MAX:
        idx = rng.choice(total, size=contexts, replace=False)
        return _masks_from_positions(pool, _combo_positions(p, m)[np.sort(idx)]), False
    chosen: list[np.ndarray] = []
    seen: set[int] = set()
    need = contexts
    while need > 0:
        keys = rng.random((2 * need, p))
        picks = np.argpartition(keys, m - 1, axis=1)[:, :m]
        masks = _masks_from_positions(pool, picks)
        for b in masks:
            bi = int(b)
            if bi not in seen:
                seen.add(bi)
                chosen.append(b)
                need -= 1
                if need == 0:
                    break
    return np.array(chosen, dtype=np.int64), False


def estimate_interaction(
    game: Game, i: int, j: int, m: int, contexts: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Monte Carlo order-m interaction of a pair: (mean, standard error).

    Contexts are sampled without replacement; once ``contexts`` reaches the
    number of possible contexts this becomes exact enumeration and the
    standard error is zero.
    """
    n = game.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ValueError(f"invalid pair ({i}, {j}) for n={n}")
    if not 0 <= m <= n - 2:
        raise ValueError(f"order {m} outside [0, {n - 2}]")
    if contexts < 1:
        raise ValueError("need at least one context")
    pool = np.array([k for k in range(n) if k not in (i, j)], dtype=np.int64)
    masks, exhaustive = sample_context_masks(pool, m, contexts, rng)
    dv = delta_v_for_masks(game, i, j, masks)
    mean = float(dv.mean())
    if exhaustive or dv.shape[0] < 2:
        return mean, 0.0
    return mean, float(dv.std(ddof=1) / math.sqrt(dv.shape[0]))


def normalize_strengths(raw_by_order: np.ndarray) -> np.ndarray:
    """Divide per-order strengths by their mean over the order set.

    The result averages to exactly 1 over the orders; all-zero input has no
    meaningful normalization and raises.
    """
    raw = np.asarray(raw_by_order, dtype=np.float64)
    denom = raw.mean()
    if denom == 0.0:
        raise NumericError("all interaction strengths are zero; cannot normalize")
    return raw / denom


@dataclass(frozen=True)
class OrderProfile:
    """Per-order interaction strength, absolute and normalized.

    ``raw_strength[o]`` is mean |I| over the plan's pairs and samples at the
    o-th order; ``J`` divides by the mean of raw_strength over the plan's
    order set (so J averages to 1).  ``per_sample_J`` holds the same
    normalization applied within each sample, which is what the stability
    diagnostic compares across repeated estimates.
    """

    n: int
    orders: tuple[int, ...]
    relative_orders: tuple[float, ...]
    raw_strength: np.ndarray
    J: np.ndarray
    per_sample_J: np.ndarray
    plan_digest: str
    seed: int

    def band_sum(self, lo: float, hi: float) -> float:
        """Sum of J over integer orders m with lo*n <= m <= hi*n."""
        orders = np.asarray(self.orders, dtype=np.float64)
        keep = (orders >= lo * self.n) & (orders <= hi * self.n)
        return float(self.J[keep].sum())


def strength_profile(games: list[Game], plan: SamplingPlan) -> OrderProfile:
    """Estimate the per-order strength profile of a list of per-sample games.

    Every (sample, pair, order) estimate draws its contexts from its own
    counter-based stream keyed by the plan seed, so the result is independent
    of evaluation order and worker count.
    """
    if not plan.sample_ids:
        raise ConfigError("plan selects no samples")
    if max(plan.sample_ids) >= len(games):
        raise ConfigError(
            f"plan expects sample id {max(plan.sample_ids)} but only {len(games)} games given"
        )
    for g in games:
        if g.n != plan.n:
            raise ConfigError(f"game has n={g.n}, plan has n={plan.n}")
    num_orders = len(plan.orders)
    per_sample_raw = np.zeros((len(plan.sample_ids), num_orders))
    stream = 0
    for k, sid in enumerate(plan.sample_ids):
        game = games[sid]
        pair_list = plan.pairs[k]
        for i, j in pair_list:
            for o, m in enumerate(plan.orders):
                rng = _stream_rng(plan.seed, stream)
                stream += 1
                mean, _ = estimate_interaction(game, i, j, m, plan.contexts, rng)
                per_sample_raw[k, o] += abs(mean)
        per_sample_raw[k] /= len(pair_list)
    raw = per_sample_raw.mean(axis=0)
    j = normalize_strengths(raw)
    sample_means = per_sample_raw.mean(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_sample_j = np.where(sample_means > 0, per_sample_raw / sample_means, 0.0)
    return OrderProfile(
        n=plan.n,
        orders=plan.orders,
        relative_orders=plan.relative_orders,
        raw_strength=raw,
        J=j,
        per_sample_J=per_sample_j,
        plan_digest=plan.digest,
        seed=plan.seed,
    )


def instability(repeats: list[OrderProfile]) -> float:
    """Mean relative disagreement between repeated per-sample profiles.

    For each sample and order, the mean absolute difference between repeat
    pairs is divided by the mean absolute level over repeats; the result is
    averaged over samples and orders.  Identical repeats give exactly 0.
    """
    if len(repeats) < 2:
        raise ValueError("need at least two repeated profiles")
    first = repeats[0]
    for rep in repeats[1:]:
        if rep.orders != first.orders:
            raise ValueError("repeated profiles cover different order sets")
        if rep.per_sample_J.shape != first.per_sample_J.shape:
            raise ValueError("repeated profiles cover different sample sets")
    stack = np.stack([rep.per_sample_J for rep in repeats])  # (q, samples, orders)
    q = stack.shape[0]
    diffs = np.abs(stack[:, None, :, :] - stack[None, :, :, :])
    off = ~np.eye(q, dtype=bool)
    num = diffs[off].mean(axis=0)  # (samples, orders)
    den = np.abs(stack).mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(den > 0, num / den, 0.0)
    return float(ratio.mean())
