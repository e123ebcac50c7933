"""Small rectifier MLPs with explicit gradients and order-band training losses.

The auxiliary losses act on the logit difference between two nested masked
views of each input: a cross-entropy term makes that difference carry the
label (encouraging the interaction orders it contains), and a negative-entropy
term makes it uninformative (penalizing those orders).  Everything is plain
numpy with hand-written backprop so gradients can be checked against finite
differences and training is bit-reproducible from a seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .data import Dataset
from .errors import ConfigError, NumericError
from .games import Coalition, masked_batch
from .serialize import atomic_write_text, digest_of, jsonable
from .util import round_half_up

MLP5_HIDDEN = (100, 100, 100, 100)  # "five layers" counting the output layer
MLP8_HIDDEN = (100, 100, 100, 100, 100, 100, 100)

Grads = list[tuple[np.ndarray, np.ndarray]]


class MlpModel:
    """Fully connected rectifier network with an identity output layer."""

    def __init__(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]):
        if len(weights) != len(biases) or not weights:
            raise ValueError("need matching, non-empty weight and bias lists")
        self.weights = [np.array(w, dtype=np.float64) for w in weights]
        self.biases = [np.array(b, dtype=np.float64) for b in biases]
        for t, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {t}: weight {w.shape} and bias {b.shape} mismatch")
            if t and w.shape[0] != self.weights[t - 1].shape[1]:
                raise ValueError(f"layer {t}: input width {w.shape[0]} breaks the chain")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @classmethod
    def init(cls, layer_dims: Sequence[int], rng: np.random.Generator) -> "MlpModel":
        """He-style init: N(0, 2/fan_in) weights, zero biases."""
        if len(layer_dims) < 2:
            raise ValueError("need at least input and output dims")
        weights, biases = [], []
        for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
            weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases)

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        a = x[None, :] if single else x
        if a.shape[1] != self.n_inputs:
            raise ValueError(f"input width {a.shape[1]}, model expects {self.n_inputs}")
        for t, (w, b) in enumerate(zip(self.weights, self.biases)):
            a = a @ w + b
            if t < len(self.weights) - 1:
                a = np.maximum(a, 0.0)
        return a[0] if single else a

    def forward_trace(self, x: np.ndarray) -> tuple[np.ndarray, list]:
        """Forward pass keeping per-layer inputs and pre-activations for backward."""
        a = np.asarray(x, dtype=np.float64)
        if a.ndim != 2 or a.shape[1] != self.n_inputs:
            raise ValueError(f"expected (batch, {self.n_inputs}) input, got {a.shape}")
        trace = []
        for t, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ w + b
            trace.append((a, z))
            a = np.maximum(z, 0.0) if t < len(self.weights) - 1 else z
        return a, trace

    def backward(self, trace: list, dlogits: np.ndarray) -> tuple[Grads, np.ndarray]:
        """Gradients of sum(dlogits * logits) w.r.t. parameters and the input."""
        grads: Grads = [None] * len(self.weights)  # type: ignore[list-item]
        dz = np.asarray(dlogits, dtype=np.float64)
        for t in range(len(self.weights) - 1, -1, -1):
            a_prev, z = trace[t]
            grads[t] = (a_prev.T @ dz, dz.sum(axis=0))
            da = dz @ self.weights[t].T
            if t > 0:
                dz = da * (trace[t - 1][1] > 0)
            else:
                dx = da
        return grads, dx

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.argmax(self.forward(np.atleast_2d(np.asarray(x, dtype=np.float64))), axis=1)

    def accuracy(self, x: np.ndarray, labels: np.ndarray) -> float:
        return float((self.predict(x) == np.asarray(labels)).mean())

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format_version": "1",
            "kind": "mlp",
            "layer_dims": list(self.layer_dims),
            "activation": "relu",
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "MlpModel":
        if doc.get("kind") != "mlp":
            raise ConfigError("not a serialized MLP document")
        return cls([np.array(w) for w in doc["weights"]], [np.array(b) for b in doc["biases"]])

    def save(self, path: str | Path, extra: dict | None = None) -> None:
        doc = self.to_dict()
        if extra:
            doc.update(jsonable(extra))
        atomic_write_text(path, json.dumps(doc, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "MlpModel":
        with open(path) as handle:
            return cls.from_dict(json.load(handle))


def softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits.

    Accepts a single (C,) logit vector with an integer label, or a (B, C)
    batch with (B,) labels; the batch gradient carries the 1/B factor.
    """
    logits = np.asarray(logits, dtype=np.float64)
    single = logits.ndim == 1
    z = logits[None, :] if single else logits
    y = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    if y.shape[0] != z.shape[0]:
        raise ValueError(f"{z.shape[0]} logit rows but {y.shape[0]} labels")
    if (y < 0).any() or (y >= z.shape[1]).any():
        raise ValueError(f"labels must lie in [0, {z.shape[1]})")
    logp = log_softmax(z)
    rows = np.arange(z.shape[0])
    loss = float(-logp[rows, y].mean())
    grad = softmax(z)
    grad[rows, y] -= 1.0
    grad /= z.shape[0]
    return loss, (grad[0] if single else grad)


def zero_grads(model: MlpModel) -> Grads:
    return [(np.zeros_like(w), np.zeros_like(b)) for w, b in zip(model.weights, model.biases)]


def add_scaled(target: Grads, source: Grads, scale: float = 1.0) -> None:
    for (tw, tb), (sw, sb) in zip(target, source):
        tw += scale * sw
        tb += scale * sb


# ---------------------------------------------------------------------------
# Nested-subset sampling and the logit-difference losses.
# ---------------------------------------------------------------------------


def nested_sizes(n: int, r1: float, r2: float) -> tuple[int, int]:
    if not 0.0 <= r1 < r2 <= 1.0:
        raise ConfigError(f"need 0 <= r1 < r2 <= 1, got ({r1}, {r2})")
    s1, s2 = round_half_up(r1 * n), round_half_up(r2 * n)
    if s1 == s2:
        raise ConfigError(f"range ({r1}, {r2}) is degenerate at n={n}: both subsets get {s1}")
    return s1, s2


def sample_nested_masks(
    n: int, s1: int, s2: int, count: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform nested subset pairs as bit masks: S1 (size s1) inside S2 (size s2).

    The first s2 positions of a random permutation form S2 and the first s1
    of those form S1, so each subset is marginally uniform at its size.
    """
    keys = rng.random((count, n))
    order = np.argsort(keys, axis=1)
    bits2 = np.zeros(count, dtype=np.int64)
    bits1 = np.zeros(count, dtype=np.int64)
    for t in range(s2):
        col = np.int64(1) << order[:, t].astype(np.int64)
        bits2 |= col
        if t < s1:
            bits1 |= col
    return bits1, bits2


def sample_nested_subsets(
    n: int, r1: float, r2: float, rng: np.random.Generator
) -> tuple[Coalition, Coalition]:
    s1, s2 = nested_sizes(n, r1, r2)
    bits1, bits2 = sample_nested_masks(n, s1, s2, 1, rng)
    return Coalition(int(bits1[0]), n), Coalition(int(bits2[0]), n)


def delta_logits(
    model: MlpModel,
    x: np.ndarray,
    baseline: np.ndarray,
    s1: Coalition,
    s2: Coalition,
    r1: float,
    r2: float,
) -> np.ndarray:
    """Per-class logit difference between the two nested masked views of x.

    Computes logits(x masked to S2) - (r2/r1) * logits(x masked to S1) on the
    raw pre-softmax outputs; with an empty S1 the subtrahend is the
    all-baseline view with coefficient 1.
    """
    if not s1.issubset(s2) or s1.bits == s2.bits:
        raise ValueError("S1 must be a proper subset of S2")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_inputs,):
        raise ValueError(f"sample shape {x.shape}, model expects ({model.n_inputs},)")
    coef = 1.0 if s1.size == 0 else r2 / r1
    masks = np.array([s2.bits, s1.bits], dtype=np.int64)
    logits = model.forward(masked_batch(x, masks, baseline))
    return logits[0] - coef * logits[1]


def _delta_forward(model, x, baseline, bits1, bits2, coef):
    cols = np.arange(x.shape[1])[None, :]
    x2 = np.where((bits2[:, None] >> cols & 1).astype(bool), x, baseline[None, :])
    x1 = np.where((bits1[:, None] >> cols & 1).astype(bool), x, baseline[None, :])
    logits2, tr2 = model.forward_trace(x2)
    logits1, tr1 = model.forward_trace(x1)
    return logits2 - coef * logits1, tr1, tr2


def _delta_backward(model, tr1, tr2, coef, ddv) -> Grads:
    g2, _ = model.backward(tr2, ddv)
    g1, _ = model.backward(tr1, -coef * ddv)
    add_scaled(g2, g1)
    return g2


def encourage_loss_from_masks(
    model: MlpModel,
    x: np.ndarray,
    labels: np.ndarray,
    baseline: np.ndarray,
    bits1: np.ndarray,
    bits2: np.ndarray,
    coef: float,
) -> tuple[float, Grads]:
    """Cross-entropy of the logit-difference vector against the true labels."""
    dv, tr1, tr2 = _delta_forward(model, x, baseline, bits1, bits2, coef)
    loss, ddv = softmax_cross_entropy(dv, labels)
    return loss, _delta_backward(model, tr1, tr2, coef, ddv)


def penalize_loss_from_masks(
    model: MlpModel,
    x: np.ndarray,
    baseline: np.ndarray,
    bits1: np.ndarray,
    bits2: np.ndarray,
    coef: float,
) -> tuple[float, Grads]:
    """Negative entropy of the logit-difference softmax (minimum = uniform)."""
    dv, tr1, tr2 = _delta_forward(model, x, baseline, bits1, bits2, coef)
    logp = log_softmax(dv)
    p = np.exp(logp)
    per_sample = (p * logp).sum(axis=1)
    loss = float(per_sample.mean())
    ddv = p * (logp - per_sample[:, None]) / x.shape[0]
    return loss, _delta_backward(model, tr1, tr2, coef, ddv)


def _band_masks(n, r1, r2, count, rng):
    s1, s2 = nested_sizes(n, r1, r2)
    bits1, bits2 = sample_nested_masks(n, s1, s2, count, rng)
    coef = 1.0 if s1 == 0 else r2 / r1
    return bits1, bits2, coef


def loss_encourage(
    model: MlpModel,
    x: np.ndarray,
    labels: np.ndarray,
    baseline: np.ndarray,
    r1: float,
    r2: float,
    rng: np.random.Generator,
) -> tuple[float, Grads]:
    """Order-band encouragement loss with fresh nested subsets per sample."""
    bits1, bits2, coef = _band_masks(x.shape[1], r1, r2, x.shape[0], rng)
    return encourage_loss_from_masks(model, x, labels, baseline, bits1, bits2, coef)


def loss_penalize(
    model: MlpModel,
    x: np.ndarray,
    baseline: np.ndarray,
    r1: float,
    r2: float,
    rng: np.random.Generator,
) -> tuple[float, Grads]:
    """Order-band penalty loss with fresh nested subsets per sample."""
    bits1, bits2, coef = _band_masks(x.shape[1], r1, r2, x.shape[0], rng)
    return penalize_loss_from_masks(model, x, baseline, bits1, bits2, coef)


# ---------------------------------------------------------------------------
# Training.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch SGD with momentum on classification plus the band losses."""

    hidden_dims: tuple[int, ...] = MLP5_HIDDEN
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.03
    momentum: float = 0.9
    seed: int = 0
    lambda1: float = 0.0
    lambda2: float = 0.0
    encourage_range: tuple[float, float] | None = None
    penalize_range: tuple[float, float] | None = None

    def validate(self, n: int) -> None:
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch size must be positive")
        if self.learning_rate <= 0 or not 0 <= self.momentum < 1:
            raise ConfigError("need learning rate > 0 and momentum in [0, 1)")
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError("loss weights must be non-negative")
        if self.lambda1 > 0:
            if self.encourage_range is None:
                raise ConfigError("lambda1 > 0 requires an encourage range")
            nested_sizes(n, *self.encourage_range)
        if self.lambda2 > 0:
            if self.penalize_range is None:
                raise ConfigError("lambda2 > 0 requires a penalize range")
            nested_sizes(n, *self.penalize_range)

    def digest(self) -> str:
        return digest_of(self.__dict__)


DNN_TYPE_PRESETS: dict[str, dict] = {
    "normal": {},
    "low-order": {"lambda2": 1.0, "penalize_range": (0.7, 1.0)},
    "middle-order": {"lambda1": 1.0, "encourage_range": (0.3, 0.7)},
    "high-order": {"lambda2": 1.0, "penalize_range": (0.0, 0.5)},
    "high-order-robustness": {
        "lambda1": 1.0,
        "lambda2": 1.0,
        "encourage_range": (0.6, 1.0),
        "penalize_range": (0.0, 0.5),
    },
}


def config_for_type(dnn_type: str, base: TrainConfig | None = None, **overrides) -> TrainConfig:
    """Training config for one of the named interaction-band presets."""
    if dnn_type not in DNN_TYPE_PRESETS:
        raise ConfigError(f"unknown model type {dnn_type!r}; pick from {sorted(DNN_TYPE_PRESETS)}")
    base = base or TrainConfig()
    return replace(base, **{**DNN_TYPE_PRESETS[dnn_type], **overrides})


@dataclass
class TrainResult:
    model: MlpModel
    history: list[dict] = field(default_factory=list)
    snapshots: dict[int, MlpModel] = field(default_factory=dict)


def train(
    config: TrainConfig, dataset: Dataset, snapshot_epochs: Sequence[int] = ()
) -> TrainResult:
    """Train a classifier on the dataset's split; deterministic given the seed.

    History records per-epoch loss components and train/test accuracy.
    ``snapshot_epochs`` asks for copies of the model right after those epochs
    (1-indexed).  Non-finite losses abort with a diagnostic.
    """
    config.validate(dataset.n)
    rng = np.random.default_rng(config.seed)
    dims = (dataset.n, *config.hidden_dims, dataset.n_classes)
    model = MlpModel.init(dims, rng)
    velocity = zero_grads(model)
    x_train, y_train = dataset.train_features, dataset.train_labels
    x_test, y_test = dataset.test_features, dataset.test_labels
    baseline = dataset.baseline
    result = TrainResult(model=model)
    wanted = set(int(e) for e in snapshot_epochs)
    for epoch in range(1, config.epochs + 1):
        perm = rng.permutation(x_train.shape[0])
        sums = {"classification": 0.0, "encourage": 0.0, "penalize": 0.0}
        batches = 0
        for start in range(0, x_train.shape[0], config.batch_size):
            rows = perm[start : start + config.batch_size]
            xb, yb = x_train[rows], y_train[rows]
            logits, trace = model.forward_trace(xb)
            cls_loss, dlogits = softmax_cross_entropy(logits, yb)
            grads, _ = model.backward(trace, dlogits)
            l_plus = l_minus = 0.0
            if config.lambda1 > 0:
                l_plus, g_plus = loss_encourage(
                    model, xb, yb, baseline, *config.encourage_range, rng
                )
                add_scaled(grads, g_plus, config.lambda1)
            if config.lambda2 > 0:
                l_minus, g_minus = loss_penalize(
                    model, xb, baseline, *config.penalize_range, rng
                )
                add_scaled(grads, g_minus, config.lambda2)
            total = cls_loss + config.lambda1 * l_plus + config.lambda2 * l_minus
            if not np.isfinite(total):
                raise NumericError(
                    f"training diverged at epoch {epoch} (classification={cls_loss}, "
                    f"encourage={l_plus}, penalize={l_minus})"
                )
            for (vw, vb), (gw, gb), w, b in zip(
                velocity, grads, model.weights, model.biases
            ):
                vw *= config.momentum
                vw -= config.learning_rate * gw
                w += vw
                vb *= config.momentum
                vb -= config.learning_rate * gb
                b += vb
            sums["classification"] += cls_loss
            sums["encourage"] += l_plus
            sums["penalize"] += l_minus
            batches += 1
        result.history.append(
            {
                "epoch": epoch,
                "classification_loss": sums["classification"] / batches,
                "encourage_loss": sums["encourage"] / batches,
                "penalize_loss": sums["penalize"] / batches,
                "train_accuracy": model.accuracy(x_train, y_train),
                "test_accuracy": model.accuracy(x_test, y_test),
            }
        )
        if epoch in wanted:
            result.snapshots[epoch] = model.copy()
    return result
