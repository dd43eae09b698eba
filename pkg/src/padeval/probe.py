"""Single-neuron classification head on frozen embeddings.

The only trainable parameters in the whole pipeline live here: a weight
vector and a bias, trained with binary cross-entropy under Adam on
class-balanced mini-batches. Scores are attack likelihoods: groundtruth
is encoded 1 = attack, 0 = bona fide.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .data import LabeledDataset, atomic_write_bytes
from .errors import ConfigError, DimMismatch, NonFiniteLoss, SingleClassDataset

CLAMP_EPS = 1e-7


@dataclass(frozen=True, eq=False)
class ProbeHead:
    weights: np.ndarray  # (dim,) float64
    bias: float
    backbone_id: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise DimMismatch("weights must be a non-empty 1-D vector")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.bias)):
            raise NonFiniteLoss("non-finite head parameters")
        object.__setattr__(self, "weights", w)

    @property
    def dim(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-4
    epochs: int = 50
    batch_size: int = 128
    seed: int = 0
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 2 or self.batch_size % 2 != 0:
            raise ConfigError("batch_size must be even and >= 2")


@dataclass(frozen=True)
class TrainLog:
    epoch_losses: tuple[float, ...]

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def predict(head: ProbeHead, x) -> float:
    """Attack-likelihood score in (0, 1) for a single embedding."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (head.dim,):
        raise DimMismatch(f"embedding has shape {x.shape}, head dim is {head.dim}")
    z = float(head.weights @ x) + head.bias
    # clamp so the score stays inside the open interval despite underflow
    p = float(_sigmoid(np.array([z]))[0])
    return min(max(p, CLAMP_EPS), 1.0 - CLAMP_EPS)


def predict_batch(head: ProbeHead, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != head.dim:
        raise DimMismatch(f"batch has shape {X.shape}, head dim is {head.dim}")
    return np.clip(_sigmoid(X @ head.weights + head.bias), CLAMP_EPS, 1.0 - CLAMP_EPS)


def bce_loss(prediction: float, truth: float) -> float:
    p = min(max(float(prediction), CLAMP_EPS), 1.0 - CLAMP_EPS)
    g = float(truth)
    return float(-(g * np.log(p) + (1.0 - g) * np.log(1.0 - p)))


def loss_gradient(head: ProbeHead, x, truth: float):
    """Analytic gradient of the per-sample loss w.r.t. (weights, bias)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (head.dim,):
        raise DimMismatch(f"embedding has shape {x.shape}, head dim is {head.dim}")
    residual = predict(head, x) - float(truth)
    return residual * x, residual


def balanced_batches(
    dataset: LabeledDataset, batch_size: int, rng: np.random.Generator
) -> Iterator[np.ndarray]:
    """Yield index batches with an exact 1:1 class composition.

    The larger class is shuffled and consumed without replacement (padded
    with replacement only to fill the last batch); the smaller class is
    resampled with replacement, so one epoch covers the larger class at
    least once.
    """
    if batch_size < 2 or batch_size % 2 != 0:
        raise ConfigError("batch_size must be even and >= 2")
    y = dataset.labels()
    attack_idx = np.flatnonzero(y == 1.0)
    bona_idx = np.flatnonzero(y == 0.0)
    if attack_idx.size == 0 or bona_idx.size == 0:
        raise SingleClassDataset("need at least one sample of each class")
    half = batch_size // 2
    n_batches = -(-max(attack_idx.size, bona_idx.size) // half)
    needed = n_batches * half

    def epoch_order(idx: np.ndarray) -> np.ndarray:
        if idx.size >= needed or idx.size == max(attack_idx.size, bona_idx.size):
            order = rng.permutation(idx)
            if order.size < needed:
                order = np.concatenate([order, rng.choice(idx, needed - order.size, replace=True)])
            return order[:needed]
        return rng.choice(idx, needed, replace=True)

    attack_order = epoch_order(attack_idx)
    bona_order = epoch_order(bona_idx)
    for b in range(n_batches):
        lo, hi = b * half, (b + 1) * half
        yield np.concatenate([bona_order[lo:hi], attack_order[lo:hi]])


def train_head(
    dataset: LabeledDataset, config: TrainConfig, backbone_id: str = ""
) -> tuple[ProbeHead, TrainLog]:
    """Train the head from zero initialization with Adam over balanced batches.

    Deterministic for a fixed config and dataset on a given platform.
    """
    X = np.asarray(dataset.vectors, dtype=np.float64)
    y = dataset.labels()
    dim = X.shape[1]
    params = np.zeros(dim + 1)  # weights then bias
    m = np.zeros_like(params)
    v = np.zeros_like(params)
    t = 0
    rng = np.random.default_rng(config.seed)
    epoch_losses = []
    for _ in range(config.epochs):
        batch_losses = []
        for batch in balanced_batches(dataset, config.batch_size, rng):
            Xb, yb = X[batch], y[batch]
            z = Xb @ params[:dim] + params[dim]
            p = _sigmoid(z)
            pc = np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS)
            loss = float(np.mean(-(yb * np.log(pc) + (1.0 - yb) * np.log(1.0 - pc))))
            if not np.isfinite(loss):
                raise NonFiniteLoss("training loss became non-finite")
            residual = p - yb
            grad = np.empty_like(params)
            grad[:dim] = Xb.T @ residual / batch.size
            grad[dim] = residual.mean()
            t += 1
            m = config.adam_beta1 * m + (1.0 - config.adam_beta1) * grad
            v = config.adam_beta2 * v + (1.0 - config.adam_beta2) * grad * grad
            m_hat = m / (1.0 - config.adam_beta1**t)
            v_hat = v / (1.0 - config.adam_beta2**t)
            params = params - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_eps)
            batch_losses.append(loss)
        epoch_losses.append(float(np.mean(batch_losses)))
    head = ProbeHead(weights=params[:dim].copy(), bias=float(params[dim]), backbone_id=backbone_id)
    return head, TrainLog(epoch_losses=tuple(epoch_losses))


# -- serialization -----------------------------------------------------

def head_to_json(head: ProbeHead) -> str:
    obj = {
        "backbone_id": head.backbone_id,
        "dim": head.dim,
        "bias": head.bias,
        "weights": [float(w) for w in head.weights],
    }
    return json.dumps(obj, sort_keys=True)


def head_from_json(text: str) -> ProbeHead:
    obj = json.loads(text)
    head = ProbeHead(
        weights=np.array(obj["weights"], dtype=np.float64),
        bias=float(obj["bias"]),
        backbone_id=str(obj.get("backbone_id", "")),
    )
    if head.dim != int(obj["dim"]):
        raise DimMismatch("declared dim disagrees with weight vector length")
    return head


def save_head(head: ProbeHead, path):
    atomic_write_bytes(path, (head_to_json(head) + "\n").encode("utf-8"))


def load_head(path) -> ProbeHead:
    with open(path, "r", encoding="utf-8") as fh:
        return head_from_json(fh.read())
