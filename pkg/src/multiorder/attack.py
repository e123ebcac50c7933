"""Untargeted projected sign-gradient attacks inside an L-infinity ball."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericError
from .nn import MlpModel, softmax_cross_entropy


@dataclass(frozen=True)
class AttackConfig:
    """L-infinity attack parameters, in standardized feature units.

    ``clamp`` optionally restricts each feature to a (min, max) vector, e.g.
    the observed training range.  Random starts and restarts exist as flags
    but default off: the baseline protocol starts at the clean input.
    """

    epsilon: float
    steps: int
    step_size: float = 0.01
    clamp: tuple[np.ndarray, np.ndarray] | None = None
    random_start: bool = False
    restarts: int = 0

    def validate(self) -> None:
        if self.epsilon < 0:
            raise ConfigError("epsilon must be non-negative")
        if self.steps < 0:
            raise ConfigError("step count must be non-negative")
        if self.steps > 0 and self.step_size <= 0:
            raise ConfigError("step size must be positive when attacking")
        if self.restarts < 0:
            raise ConfigError("restart count must be non-negative")


def _ascend(model: MlpModel, x0, labels, start, config) -> np.ndarray:
    x_adv = start.copy()
    lo = x0 - config.epsilon
    hi = x0 + config.epsilon
    for _ in range(config.steps):
        logits, trace = model.forward_trace(x_adv)
        _, dlogits = softmax_cross_entropy(logits, labels)
        _, dx = model.backward(trace, dlogits)
        if not np.isfinite(dx).all():
            raise NumericError("non-finite input gradient during attack")
        x_adv = np.clip(x_adv + config.step_size * np.sign(dx), lo, hi)
        if config.clamp is not None:
            x_adv = np.clip(x_adv, config.clamp[0], config.clamp[1])
    return x_adv


def pgd_untargeted_batch(
    model: MlpModel,
    x: np.ndarray,
    labels: np.ndarray,
    config: AttackConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Adversarial perturbations of a batch, maximizing classification loss.

    Iterates sign-gradient ascent steps projected back onto the epsilon ball
    around each clean input.  With restarts > 0, each restart begins from a
    random point in the ball and the worst (highest-loss) iterate per sample
    is kept; both options need an rng.
    """
    config.validate()
    x0 = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if not np.isfinite(x0).all():
        raise NumericError("attack input must be finite")
    starts = 1 + config.restarts
    if (config.random_start or config.restarts) and rng is None:
        raise ConfigError("random starts require an rng")
    best = None
    best_loss = None
    for s in range(starts):
        if config.random_start or s > 0:
            start = x0 + rng.uniform(-config.epsilon, config.epsilon, size=x0.shape)
        else:
            start = x0
        x_adv = _ascend(model, x0, labels, start, config)
        if starts == 1:
            return x_adv
        # per-sample cross-entropy for the keep-worst rule
        logits = model.forward(x_adv)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        losses = -logp[np.arange(x0.shape[0]), labels]
        if best is None:
            best, best_loss = x_adv, losses
        else:
            better = losses > best_loss
            best[better] = x_adv[better]
            best_loss = np.maximum(best_loss, losses)
    return best


def pgd_untargeted(
    model: MlpModel,
    x: np.ndarray,
    label: int,
    config: AttackConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Adversarial example for a single input vector."""
    out = pgd_untargeted_batch(
        model, np.asarray(x, dtype=np.float64)[None, :], np.array([label]), config, rng
    )
    return out[0]


def adversarial_accuracy(
    model: MlpModel,
    x: np.ndarray,
    labels: np.ndarray,
    config: AttackConfig,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """(clean accuracy, accuracy after the attack) on the given split."""
    if np.asarray(x).shape[0] == 0:
        raise ConfigError("empty evaluation split")
    clean = model.accuracy(x, labels)
    x_adv = pgd_untargeted_batch(model, x, labels, config, rng)
    return clean, model.accuracy(x_adv, labels)
