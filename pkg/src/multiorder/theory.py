"""Closed-form training-strength curves and their Monte Carlo verification.

The per-order training strength F(m) = w(m)/sqrt(C(n-2, m)) predicts how
strongly gradient descent pushes on order-m pairwise interactions: large at
the extremes, weak in the middle.  This module evaluates the curve (with a
continuous log-gamma binomial so non-integral effective orders work), fits an
effective dimension to measured strength profiles, computes the band-pass
weights of the nested-subset output difference, and verifies the variance
prediction by direct simulation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from .errors import CapacityError, ConfigError
from .util import golden_section_minimize, round_half_up, snap_to_int

# Strength floor applied before taking logs in the effective-dimension fit.
STRENGTH_FLOOR = 1e-12

# The simulator draws C(n-2, m) Gaussians per trial per order; beyond n=14
# the middle orders blow past memory/time budgets.
SIMULATE_MAX_VARS = 14


def efficiency_weight(n: int, m: int | float) -> float:
    """Coefficient (n-1-m)/(n(n-1)) attached to order-m pair interactions.

    These weights make the sum of weighted interactions over ordered pairs,
    plus the single-variable utilities, reconstruct v(N) exactly.
    """
    if n < 2:
        raise ValueError(f"need at least two variables, got n={n}")
    if m < 0 or m > n - 2:
        raise ValueError(f"order {m} outside [0, {n - 2}]")
    return (n - 1 - m) / (n * (n - 1))


def log_binomial(a: float, b: float) -> float:
    """log C(a, b) via log-gamma; defined for real a >= b >= 0."""
    return float(gammaln(a + 1.0) - gammaln(b + 1.0) - gammaln(a - b + 1.0))


def training_strength_F(n: float, m: float) -> float:
    """Per-order training strength w(m)/sqrt(C(n-2, m)).

    Both arguments may be non-integral; the binomial is continued through
    log-gamma, which keeps the expression finite for 0 <= m <= n-2 and avoids
    overflow at large n.
    """
    if n <= 2:
        raise ValueError(f"need n > 2, got {n}")
    if m < 0 or m > n - 2:
        raise ValueError(f"order {m} outside [0, {n - 2}]")
    w = (n - m - 1.0) / (n * (n - 1.0))
    return w * math.exp(-0.5 * log_binomial(n - 2.0, m))


@dataclass(frozen=True)
class TheoryCurve:
    """Normalized training-strength curve F(m)/F(0) over relative orders."""

    n_eff: float
    relative_orders: tuple[float, ...]
    f_hat: np.ndarray

    def __post_init__(self):
        if len(self.relative_orders) != self.f_hat.shape[0]:
            raise ValueError("relative_orders and f_hat lengths differ")


def normalized_curve(n_eff: float, relative_orders: Sequence[float]) -> TheoryCurve:
    """F-hat curve at orders m = rho*(n_eff - 2), normalized so rho=0 gives 1."""
    if n_eff <= 2:
        raise ValueError(f"effective dimension must exceed 2, got {n_eff}")
    rhos = tuple(float(r) for r in relative_orders)
    if any(r < 0 or r > 1 for r in rhos):
        raise ValueError("relative orders must lie in [0, 1]")
    f0 = training_strength_F(n_eff, 0.0)
    f_hat = np.array([training_strength_F(n_eff, r * (n_eff - 2.0)) / f0 for r in rhos])
    return TheoryCurve(n_eff=float(n_eff), relative_orders=rhos, f_hat=f_hat)


def theorem2_weight(n: int, r1: float, r2: float, m: int) -> float:
    """Weight of order-m interactions inside the nested-subset difference.

    The difference v(S2) - (r2/r1) v(S1) over uniformly sampled nested subsets
    with |S1| = r1*n, |S2| = r2*n carries order-m pair interactions with this
    coefficient: rising up to order r1*n, decaying linearly to zero at order
    r2*n, and exactly zero above.
    """
    if not (0 <= r1 < r2 <= 1):
        raise ValueError(f"need 0 <= r1 < r2 <= 1, got ({r1}, {r2})")
    if m < 0 or m > n - 2:
        raise ValueError(f"order {m} outside [0, {n - 2}]")
    s1 = snap_to_int(r1 * n)
    s2 = snap_to_int(r2 * n)
    if m <= s1 - 2:
        return (r2 / r1 - 1.0) * (m + 1) / (n * (n - 1))
    if m <= s2 - 2:
        return (s2 - m - 1.0) / (n * (n - 1))
    return 0.0


@dataclass(frozen=True)
class Theorem1Result:
    """Empirical vs predicted per-order update magnitudes.

    Only the pairwise propagation paths are simulated; the update component
    through the bias and single-variable utilities is a separate remainder
    that carries no order index and is excluded here.
    """

    n: int
    sigma: float
    eta: float
    dl_dv: float
    trials: int
    orders: np.ndarray
    predicted_std: np.ndarray
    empirical_std: np.ndarray


def simulate_theorem1(
    n: int,
    sigma: float,
    trials: int,
    rng: np.random.Generator,
    eta: float = 1.0,
    dl_dv: float = 1.0,
) -> Theorem1Result:
    """Simulate per-order weight updates under i.i.d. Gaussian increments.

    For each order m and each trial, C(n-2, m) independent N(0, sigma^2)
    per-context gradient components are drawn and averaged, then scaled by
    eta * dl_dv * w(m).  The empirical standard deviation over trials is
    returned next to the closed-form prediction
    |eta * dl_dv| * w(m) * sigma / sqrt(C(n-2, m)).
    """
    if n > SIMULATE_MAX_VARS:
        raise CapacityError(f"simulation limited to n <= {SIMULATE_MAX_VARS}, got {n}")
    if n < 3:
        raise ValueError(f"need n >= 3, got {n}")
    if trials < 2:
        raise ValueError("need at least two trials for a standard deviation")
    orders = np.arange(n - 1)
    predicted = np.empty(n - 1)
    empirical = np.empty(n - 1)
    scale = abs(eta * dl_dv)
    chunk_budget = 1 << 22  # gaussians per draw, keeps memory modest
    for m in orders:
        c = math.comb(n - 2, int(m))
        w = efficiency_weight(n, int(m))
        predicted[m] = scale * w * sigma / math.sqrt(c)
        means = np.empty(trials)
        rows_per_chunk = max(1, chunk_budget // c)
        done = 0
        while done < trials:
            rows = min(rows_per_chunk, trials - done)
            draws = rng.standard_normal((rows, c)) * sigma
            means[done : done + rows] = draws.mean(axis=1)
            done += rows
        empirical[m] = scale * w * means.std(ddof=1)
    return Theorem1Result(
        n=n,
        sigma=float(sigma),
        eta=float(eta),
        dl_dv=float(dl_dv),
        trials=trials,
        orders=orders,
        predicted_std=predicted,
        empirical_std=empirical,
    )


class FitResult(NamedTuple):
    n_eff: float
    fit_error: float


def fit_effective_dimension(
    profile, n_range: tuple[float, float] | None = None, tol: float = 1e-10
) -> FitResult:
    """Effective dimension whose F-hat curve best matches a measured profile.

    ``profile`` provides ``relative_orders`` and ``J`` (any strength profile
    object works).  Both curves are normalized at rho=0 and compared by least
    squares in log space, since strengths span orders of magnitude; the search
    is golden-section over the given interval (default (2.5, profile.n]).
    A fit landing on an interval boundary usually means the profile has no
    U-shape to match and is reported with a warning.
    """
    rhos = np.asarray(profile.relative_orders, dtype=np.float64)
    j = np.asarray(profile.J, dtype=np.float64)
    if rhos.shape != j.shape or rhos.size < 4:
        raise ConfigError("profile must supply at least 4 (relative order, strength) points")
    zero = np.flatnonzero(np.isclose(rhos, 0.0, atol=1e-12))
    if zero.size == 0:
        raise ConfigError("profile must include the relative order 0 for normalization")
    if (j < 0).any():
        raise ValueError("strengths must be non-negative")
    if (j < STRENGTH_FLOOR).any():
        warnings.warn(
            f"profile contains strengths below {STRENGTH_FLOOR}; flooring before log fit",
            stacklevel=2,
        )
        j = np.maximum(j, STRENGTH_FLOOR)
    j_hat = j / j[zero[0]]
    if n_range is None:
        n = getattr(profile, "n", None)
        if n is None:
            raise ConfigError("profile has no variable count; pass n_range explicitly")
        n_range = (2.5, float(max(n, 4)))
    lo, hi = float(n_range[0]), float(n_range[1])
    if lo <= 2.0:
        raise ConfigError("search interval must stay above the degenerate limit n'=2")
    log_j = np.log(j_hat)

    def objective(n_eff: float) -> float:
        curve = normalized_curve(n_eff, rhos)
        return float(((np.log(curve.f_hat) - log_j) ** 2).sum())

    n_eff, err = golden_section_minimize(objective, lo, hi, tol=tol)
    edge = 1e-3 * (hi - lo)
    if n_eff - lo < edge or hi - n_eff < edge:
        warnings.warn(
            f"effective-dimension fit hit the search boundary (n'={n_eff:.4g} in "
            f"[{lo:.4g}, {hi:.4g}]); the profile may lack a U-shape",
            stacklevel=2,
        )
    return FitResult(n_eff=float(n_eff), fit_error=float(err))
