"""Pair featurization and from-scratch pair classifiers.

A candidate edge (u, v) becomes the ordered concatenation [e(u); e(v)], so
the classifier sees direction: featurize(u, v) != featurize(v, u) whenever
the two vectors differ. Models are deliberately minimal: full-batch gradient
descent logistic regression and a ReLU MLP trained with mini-batch SGD plus
momentum, both on the binary cross-entropy.
"""

import json
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DataError,
    DimensionMismatchError,
    NonFiniteLossError,
    SingleClassError,
)
from .rng import generator

PROB_EPS = 1e-12

OPERATORS = ("concat", "average", "hadamard", "l1", "l2")


def _sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _bce_from_logits(z, y):
    # mean softplus(z) - y*z; finite for any finite z
    return float(np.mean(np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))))


def _clip_probs(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def featurize(subject_vec, object_vec):
    """Ordered concatenation [subject; object]."""
    a = np.asarray(subject_vec, dtype=np.float64)
    b = np.asarray(object_vec, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise DimensionMismatchError(
            f"featurize needs two equal-length vectors, got {a.shape} and {b.shape}"
        )
    return np.concatenate([a, b])


def build_features(embedding, pairs, operator="concat"):
    """Feature matrix for a list of (subject_id, object_id) pairs.

    operator 'concat' is the supported path; the other binary operators are
    experimental and lose direction information.
    """
    if operator not in OPERATORS:
        raise ValueError(f"unknown operator {operator!r}")
    vectors = embedding.vectors if hasattr(embedding, "vectors") else np.asarray(embedding)
    pairs = np.asarray(list(pairs), dtype=np.int64).reshape(-1, 2)
    us = vectors[pairs[:, 0]]
    vs = vectors[pairs[:, 1]]
    if operator == "concat":
        return np.hstack([us, vs])
    if operator == "average":
        return (us + vs) / 2.0
    if operator == "hadamard":
        return us * vs
    if operator == "l1":
        return np.abs(us - vs)
    return (us - vs) ** 2


def _check_training_data(features, labels):
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(
            f"features {X.shape} and labels {y.shape} do not align"
        )
    if X.shape[0] < 2:
        raise DataError("need at least two training examples")
    values = set(np.unique(y).tolist())
    if not values <= {0.0, 1.0}:
        raise DataError(f"labels must be 0/1, got values {sorted(values)}")
    if len(values) < 2:
        raise SingleClassError("training labels contain a single class")
    return X, y


@dataclass
class LogisticModel:
    weights: np.ndarray
    bias: float
    l2: float = 0.0

    @property
    def dim(self):
        return self.weights.shape[0]

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"model expects {self.dim} features, got {X.shape[1]}"
            )
        return X @ self.weights + self.bias

    def predict_proba(self, X):
        return _clip_probs(_sigmoid(self.decision(X)))

    def to_dict(self):
        return {
            "kind": "logreg",
            "weights": self.weights.tolist(),
            "bias": float(self.bias),
            "l2": float(self.l2),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            weights=np.asarray(doc["weights"], dtype=np.float64),
            bias=float(doc["bias"]),
            l2=float(doc.get("l2", 0.0)),
        )


def logreg_gradients(weights, bias, X, y, l2=0.0):
    """(loss, grad_weights, grad_bias) of L2-regularized BCE."""
    z = X @ weights + bias
    p = _sigmoid(z)
    n = X.shape[0]
    loss = _bce_from_logits(z, y) + 0.5 * l2 * float(weights @ weights)
    residual = (p - y) / n
    return loss, X.T @ residual + l2 * weights, float(residual.sum())


def train_logreg(
    features,
    labels,
    learning_rate=0.1,
    epochs=500,
    l2=1e-4,
    seed=0,
) -> LogisticModel:
    """Full-batch gradient descent from a zero initialization.

    The objective is convex, so no restarts are needed; `seed` is accepted
    for interface symmetry but the procedure is deterministic anyway.
    """
    X, y = _check_training_data(features, labels)
    weights = np.zeros(X.shape[1], dtype=np.float64)
    bias = 0.0
    for step in range(epochs):
        loss, gw, gb = logreg_gradients(weights, bias, X, y, l2)
        if not np.isfinite(loss):
            raise NonFiniteLossError(step)
        weights -= learning_rate * gw
        bias -= learning_rate * gb
    return LogisticModel(weights=weights, bias=bias, l2=l2)


@dataclass
class MlpModel:
    sizes: tuple  # (input, hidden..., 1)
    weights: list  # per layer, shape (sizes[i], sizes[i+1])
    biases: list  # per layer, shape (sizes[i+1],)
    activation: str = "relu"
    seed: int = 0

    @property
    def dim(self):
        return self.sizes[0]

    def forward(self, X):
        """Returns (activations per layer incl. input, pre-activations)."""
        acts = [X]
        pres = []
        a = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = a @ W + b
            pres.append(z)
            a = z if i == last else np.maximum(z, 0.0)
            acts.append(a)
        return acts, pres

    def decision(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"model expects {self.dim} features, got {X.shape[1]}"
            )
        _, pres = self.forward(X)
        return pres[-1].ravel()

    def predict_proba(self, X):
        return _clip_probs(_sigmoid(self.decision(X)))

    def to_dict(self):
        return {
            "kind": "mlp",
            "sizes": list(self.sizes),
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "activation": self.activation,
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(
            sizes=tuple(doc["sizes"]),
            weights=[np.asarray(W, dtype=np.float64) for W in doc["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in doc["biases"]],
            activation=doc.get("activation", "relu"),
            seed=int(doc.get("seed", 0)),
        )


def _init_mlp(n_features, hidden, seed):
    sizes = (int(n_features),) + tuple(int(h) for h in hidden) + (1,)
    rng = generator(seed, 0)
    weights = []
    biases = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out, dtype=np.float64))
    return MlpModel(sizes=sizes, weights=weights, biases=biases, seed=int(seed))


def mlp_gradients(model: MlpModel, X, y):
    """(loss, weight grads, bias grads) via backprop on mean BCE."""
    y = np.asarray(y, dtype=np.float64).ravel()
    acts, pres = model.forward(X)
    z_out = pres[-1].ravel()
    n = X.shape[0]
    loss = _bce_from_logits(z_out, y)
    delta = ((_sigmoid(z_out) - y) / n).reshape(-1, 1)
    grad_ws = [None] * len(model.weights)
    grad_bs = [None] * len(model.biases)
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_ws[layer] = acts[layer].T @ delta
        grad_bs[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ model.weights[layer].T) * (pres[layer - 1] > 0.0)
    return loss, grad_ws, grad_bs


def train_mlp(
    features,
    labels,
    hidden: Sequence[int] = (200,),
    learning_rate=0.01,
    momentum=0.9,
    epochs=50,
    batch_size=128,
    seed=0,
) -> MlpModel:
    """Mini-batch SGD with momentum on a ReLU net with sigmoid output.

    hidden=() degenerates to a linear model, which is the consistency
    bridge to LogisticModel. Deterministic for a fixed seed.
    """
    X, y = _check_training_data(features, labels)
    model = _init_mlp(X.shape[1], hidden, seed)
    if epochs == 0:
        return model
    vel_w = [np.zeros_like(W) for W in model.weights]
    vel_b = [np.zeros_like(b) for b in model.biases]
    rng = generator(seed, 1)
    n = X.shape[0]
    for epoch in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            loss, grad_ws, grad_bs = mlp_gradients(model, X[batch], y[batch])
            epoch_loss += loss * len(batch)
            for i in range(len(model.weights)):
                vel_w[i] = momentum * vel_w[i] - learning_rate * grad_ws[i]
                vel_b[i] = momentum * vel_b[i] - learning_rate * grad_bs[i]
                model.weights[i] += vel_w[i]
                model.biases[i] += vel_b[i]
        if not np.isfinite(epoch_loss):
            raise NonFiniteLossError(epoch)
    return model


def predict_proba(model, features):
    """Probability that the pair encoded by `features` is a true edge."""
    X = np.asarray(features, dtype=np.float64)
    single = X.ndim == 1
    probs = model.predict_proba(np.atleast_2d(X))
    return float(probs[0]) if single else probs


def save_model(model, path, config: Optional[dict] = None):
    doc = model.to_dict()
    if config is not None:
        doc["config"] = config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    kind = doc.get("kind")
    if kind == "logreg":
        return LogisticModel.from_dict(doc)
    if kind == "mlp":
        return MlpModel.from_dict(doc)
    raise DataError(f"unknown model kind {kind!r} in {path}")
