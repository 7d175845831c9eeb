"""L2-regularised logistic regression on standardised features, with a
one-vs-rest wrapper for multi-label sentiment scales."""
from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .container import pack_meta, read_blobs, unpack_meta, write_blobs
from .tensor import ShapeError

log = logging.getLogger(__name__)

STD_FLOOR = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    batch_size: int = 0  # 0 means full batch
    lam: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 0 or self.lam < 0:
            raise ValueError("batch_size and lam must be >= 0")


@dataclass
class LRModel:
    w: np.ndarray
    b: float = 0.0
    lam: float = 0.0
    mu: np.ndarray = None
    sigma: np.ndarray = None
    loss_trace: list = field(default_factory=list)

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=np.float64).reshape(-1)
        d = self.w.shape[0]
        self.mu = np.zeros(d) if self.mu is None else np.asarray(self.mu, dtype=np.float64)
        self.sigma = np.ones(d) if self.sigma is None else np.asarray(self.sigma, dtype=np.float64)
        self.sigma = np.maximum(self.sigma, STD_FLOOR)

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    def standardize(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.dim:
            raise ShapeError(f"expected features of dimension {self.dim}, got shape {X.shape}")
        return (X - self.mu) / self.sigma


def sigmoid(z):
    """Logistic function, evaluated without overflow for either sign."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out if out.ndim else float(out)


def lr_loss_grad(model: LRModel, X, y):
    """Mean cross-entropy plus ``lam/2 * |w|^2`` and its gradient.

    ``X`` must already be standardised. Returns ``(loss, grad_w, grad_b)``;
    the bias is not regularised.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ShapeError(f"feature dimension {X.shape} does not match model dimension {model.dim}")
    if X.shape[0] != y.shape[0] or y.shape[0] == 0:
        raise ShapeError(f"{X.shape[0]} rows but {y.shape[0]} labels")
    n = X.shape[0]
    z = X @ model.w + model.b
    p = sigmoid(z)
    # -log(sigmoid(z)) = log(1 + e^z) - z; finite for every z, so no clamp is needed
    ce = np.logaddexp(0.0, z) - y * z
    loss = ce.mean() + 0.5 * model.lam * float(model.w @ model.w)
    r = p - y
    grad_w = X.T @ r / n + model.lam * model.w
    grad_b = float(r.sum() / n)
    return float(loss), grad_w, grad_b


def standardization(X):
    X = np.asarray(X, dtype=np.float64)
    return X.mean(axis=0), np.maximum(X.std(axis=0), STD_FLOOR)


def train_lr(X, y, config: TrainConfig = TrainConfig()) -> LRModel:
    """Fit by gradient descent from a zero initialisation.

    Full-batch steps use a step size that is halved whenever a step would
    raise the objective, so the recorded loss trace never increases.
    ``loss_trace[e]`` is the objective before epoch ``e``; the last entry is
    the objective of the returned model.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"{X.shape} features vs {y.shape[0]} labels")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    if y.min() == y.max():
        raise ValueError("training data contains a single class")
    mu, sigma = standardization(X)
    model = LRModel(np.zeros(X.shape[1]), 0.0, config.lam, mu, sigma)
    Z = model.standardize(X)
    if config.batch_size == 0 or config.batch_size >= Z.shape[0]:
        _full_batch(model, Z, y, config)
    else:
        _minibatch(model, Z, y, config)
    return model


def _full_batch(model, Z, y, config):
    lr = config.learning_rate
    loss, gw, gb = lr_loss_grad(model, Z, y)
    trace = [loss]
    for _ in range(config.epochs):
        w_old, b_old = model.w, model.b
        while True:
            model.w = w_old - lr * gw
            model.b = b_old - lr * gb
            new_loss, new_gw, new_gb = lr_loss_grad(model, Z, y)
            if new_loss <= loss or lr < 1e-12:
                break
            lr *= 0.5
        loss, gw, gb = new_loss, new_gw, new_gb
        trace.append(loss)
    model.loss_trace = trace


def _minibatch(model, Z, y, config):
    rng = np.random.default_rng(config.seed)
    n = Z.shape[0]
    trace = [lr_loss_grad(model, Z, y)[0]]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, gw, gb = lr_loss_grad(model, Z[idx], y[idx])
            model.w = model.w - config.learning_rate * gw
            model.b = model.b - config.learning_rate * gb
        trace.append(lr_loss_grad(model, Z, y)[0])
    model.loss_trace = trace


def predict_scores(model: LRModel, X) -> np.ndarray:
    return sigmoid(model.standardize(X) @ model.w + model.b)


@dataclass
class OneVsRestModel:
    models: "OrderedDict"
    skipped: list = field(default_factory=list)

    @property
    def labels(self) -> list:
        return list(self.models)

    def scores(self, X) -> "OrderedDict":
        return OrderedDict((label, predict_scores(m, X)) for label, m in self.models.items())

    def predict(self, X) -> list:
        labels = self.labels
        stacked = np.stack(list(self.scores(X).values()), axis=1)
        return [labels[i] for i in stacked.argmax(axis=1)]


def train_one_vs_rest(X, labels, config: TrainConfig = TrainConfig(), label_order=None) -> OneVsRestModel:
    """One binary model per label, positives being the rows carrying that label.

    ``label_order`` may list labels expected in the data; any of them without
    a positive example is skipped and reported in ``skipped``.
    """
    labels = list(labels)
    present = sorted(set(labels), key=label_sort_key)
    if len(present) < 2:
        raise ValueError(f"need at least two distinct labels, got {present}")
    wanted = list(label_order) if label_order is not None else present
    models = OrderedDict()
    skipped = []
    arr = np.array(labels, dtype=object)
    for label in wanted:
        y = (arr == label).astype(np.float64)
        if not y.any():
            log.warning("label %r has no training examples; no model trained", label)
            skipped.append(label)
            continue
        models[label] = train_lr(X, y, config)
    return OneVsRestModel(models, skipped)


def label_sort_key(label):
    """Numeric labels ascending; ``positive`` before ``negative``; others by name."""
    if isinstance(label, (int, np.integer)):
        return (0, int(label), "")
    order = {"positive": 0, "negative": 1}
    return (1, order.get(label, 2), str(label))


def save_model(path, model) -> None:
    """Persist an ``LRModel`` or ``OneVsRestModel`` to the blob container."""
    if isinstance(model, LRModel):
        items, meta = [("", model)], {"kind": "binary"}
    else:
        items = [(f"{label}/", m) for label, m in model.models.items()]
        meta = {"kind": "one_vs_rest", "labels": list(model.models)}
    blobs = OrderedDict()
    for prefix, m in items:
        blobs[prefix + "w"] = m.w
        blobs[prefix + "b"] = np.array([m.b])
        blobs[prefix + "mu"] = m.mu
        blobs[prefix + "sigma"] = m.sigma
        blobs[prefix + "lambda"] = np.array([m.lam])
    blobs["meta"] = pack_meta(meta)
    write_blobs(path, blobs)


def load_model(path):
    blobs = read_blobs(path)
    meta = unpack_meta(blobs["meta"])

    def build(prefix):
        return LRModel(blobs[prefix + "w"], float(blobs[prefix + "b"][0]), float(blobs[prefix + "lambda"][0]),
                       blobs[prefix + "mu"], blobs[prefix + "sigma"])

    if meta["kind"] == "binary":
        return build("")
    return OneVsRestModel(OrderedDict((label, build(f"{label}/")) for label in meta["labels"]))
