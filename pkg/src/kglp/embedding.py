"""Entity embedding trainer.

Embeddings are learned on the label-dropped edge set with per-positive
k-negative sampling: each positive (u, v) is scored by dot product against
k object-corrupted pairs (u, w) and pushed above them by a margin (hinge) or
through a sampled softmax. One d-dimensional table covers every entity; no
relation vectors are learned.

Seed discipline inside one train() call, all derived from config.seed:
initialization uses sub-stream 0, per-epoch shuffles sub-stream 1, and the
in-kernel splitmix64 negative sampler sub-stream (2, thread). Single-threaded
runs are bit-reproducible; the parallel mode is hogwild and is not.
"""

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from .errors import (
    ConfigError,
    DataError,
    DimensionMismatchError,
    EmptyGraphError,
    NonFiniteLossError,
)
from .rng import generator, kernel_seed

_EMBED_MAGIC = b"KGEM"
_EMBED_VERSION = 1

LOSS_KINDS = ("hinge", "softmax")

# Set to a list to record every positive edge exposed to the trainer; used
# to prove that test-fold edges never reach training.
edge_access_log = None


def _log_edges(pairs):
    if edge_access_log is not None:
        edge_access_log.extend((int(u), int(v)) for u, v in pairs)


def similarity(a, b):
    """Plain dot product of two equal-length vectors."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise DimensionMismatchError(
            f"similarity needs two equal-length vectors, got {a.shape} and {b.shape}"
        )
    return float(np.dot(a, b))


def batch_loss(pos_sim, neg_sims, margin):
    """Mean hinge over one positive and its k negatives."""
    neg_sims = np.asarray(neg_sims, dtype=np.float64)
    if neg_sims.ndim != 1 or neg_sims.size < 1:
        raise ValueError("need at least one negative similarity")
    return float(np.mean(np.maximum(0.0, margin - pos_sim + neg_sims)))


def softmax_batch_loss(pos_sim, neg_sims):
    """Sampled-softmax loss over one positive and its k negatives."""
    neg_sims = np.asarray(neg_sims, dtype=np.float64)
    if neg_sims.ndim != 1 or neg_sims.size < 1:
        raise ValueError("need at least one negative similarity")
    logits = np.concatenate(([pos_sim], neg_sims))
    m = logits.max()
    return float(-(pos_sim - m) + np.log(np.exp(logits - m).sum()))


@dataclass
class TrainConfig:
    dim: int
    epochs: int = 10
    learning_rate: float = 0.05
    negatives_per_positive: int = 5
    margin: float = 0.05
    seed: int = 0
    threads: int = 1
    loss: str = "hinge"
    init_scale: Optional[float] = None

    def validate(self):
        if self.dim < 1:
            raise ConfigError("dim", f"must be positive, got {self.dim}")
        if self.epochs < 0:
            raise ConfigError("epochs", f"must be non-negative, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate", "must be positive")
        if self.negatives_per_positive < 1:
            raise ConfigError("negatives_per_positive", "must be at least 1")
        if self.margin < 0:
            raise ConfigError("margin", "must be non-negative")
        if self.threads < 1:
            raise ConfigError("threads", "must be at least 1")
        if self.loss not in LOSS_KINDS:
            raise ConfigError("loss", f"must be one of {LOSS_KINDS}, got {self.loss!r}")
        return self

    @property
    def scale(self):
        return self.init_scale if self.init_scale is not None else 1.0 / self.dim


@dataclass
class TrainReport:
    epoch_losses: list = field(default_factory=list)
    seconds: float = 0.0
    examples: int = 0
    threads: int = 1
    loss: str = "hinge"

    def to_dict(self):
        return {
            "epoch_losses": [float(x) for x in self.epoch_losses],
            "seconds": float(self.seconds),
            "examples": int(self.examples),
            "threads": int(self.threads),
            "loss": self.loss,
        }


class EmbeddingMatrix:
    """|V| x d table of entity vectors, row index = entity id."""

    def __init__(self, vectors, iris=None):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim != 2:
            raise ValueError("vectors must be a 2-D array")
        if iris is not None:
            iris = tuple(iris)
            if len(iris) != vectors.shape[0]:
                raise ValueError("iris length must match row count")
        self.vectors = vectors
        self.iris = iris
        self._index = None

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    def vector(self, entity_id):
        return self.vectors[entity_id]

    def index_of(self, iri):
        if self.iris is None:
            raise KeyError("embedding matrix carries no IRIs")
        if self._index is None:
            self._index = {iri: i for i, iri in enumerate(self.iris)}
        return self._index[iri]

    def vector_for(self, iri):
        return self.vectors[self.index_of(iri)]

    def save_text(self, path):
        """One line per entity: iri v1 ... vd, 9 significant digits."""
        if self.iris is None:
            raise ValueError("text format requires IRIs")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for iri, row in zip(self.iris, self.vectors):
                values = " ".join(format(x, ".9g") for x in row)
                fh.write(f"{iri} {values}\n")

    @classmethod
    def load_text(cls, path):
        iris = []
        rows = []
        width = None
        with open(path, "r", encoding="utf-8") as fh:
            for number, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line:
                    continue
                parts = line.split(" ")
                if len(parts) < 2:
                    raise DataError("embedding row needs iri and values", number)
                if width is None:
                    width = len(parts) - 1
                elif len(parts) - 1 != width:
                    raise DataError(
                        f"inconsistent dimension {len(parts) - 1}, expected {width}",
                        number,
                    )
                iris.append(parts[0])
                try:
                    rows.append([float(x) for x in parts[1:]])
                except ValueError as exc:
                    raise DataError(f"bad float: {exc}", number) from exc
        if not rows:
            raise DataError("empty embedding file")
        return cls(np.asarray(rows, dtype=np.float64), iris)

    def save_binary(self, path):
        """Header: magic 'KGEM' (4 bytes), version u32 LE, |V| u64 LE,
        d u32 LE; then |V| x d row-major little-endian float32."""
        import struct

        with open(path, "wb") as fh:
            fh.write(_EMBED_MAGIC)
            fh.write(struct.pack("<IQI", _EMBED_VERSION, self.n, self.dim))
            fh.write(self.vectors.astype("<f4").tobytes(order="C"))

    @classmethod
    def load_binary(cls, path, iris=None):
        import struct

        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _EMBED_MAGIC:
                raise DataError(f"bad embedding magic {magic!r}")
            header = fh.read(16)
            if len(header) != 16:
                raise DataError("truncated embedding header")
            version, n, d = struct.unpack("<IQI", header)
            if version != _EMBED_VERSION:
                raise DataError(f"unsupported embedding version {version}")
            raw = fh.read(n * d * 4)
            if len(raw) != n * d * 4:
                raise DataError("truncated embedding payload")
        vectors = np.frombuffer(raw, dtype="<f4").reshape(n, d).astype(np.float64)
        return cls(vectors, iris)


def _as_edge_arrays(edges):
    pairs = sorted(set((int(u), int(v)) for u, v in edges))
    if not pairs:
        raise EmptyGraphError("no training edges")
    arr = np.asarray(pairs, dtype=np.int64)
    return arr[:, 0].copy(), arr[:, 1].copy()


def train(edges, config: TrainConfig, n_entities=None, iris=None):
    """Train embeddings on an edge pair set; returns (matrix, report).

    edges: iterable of (subject_id, object_id); the caller guarantees test
    edges are excluded (audited upstream). n_entities sizes the table so
    entities that appear only in test folds still get rows.
    """
    config.validate()
    subs, objs = _as_edge_arrays(edges)
    _log_edges(zip(subs, objs))
    max_id = int(max(subs.max(), objs.max()))
    if n_entities is None:
        n_entities = max_id + 1
    elif max_id >= n_entities:
        raise DataError(
            f"edge references entity id {max_id} beyond n_entities={n_entities}"
        )
    if iris is not None and len(iris) != n_entities:
        raise DataError("iris length must equal n_entities")

    n_edges = subs.shape[0]
    g_init = generator(config.seed, 0)
    vectors = g_init.uniform(-config.scale, config.scale, size=(n_entities, config.dim))
    report = TrainReport(threads=config.threads, loss=config.loss)
    if config.epochs == 0:
        return EmbeddingMatrix(vectors, iris), report

    keys = np.sort(subs * np.int64(n_entities) + objs)
    loss_kind = LOSS_KINDS.index(config.loss)
    g_order = generator(config.seed, 1)

    n_threads = 1
    if config.threads > 1:
        import numba

        n_threads = min(config.threads, numba.config.NUMBA_NUM_THREADS)
        numba.set_num_threads(n_threads)
    rng_state = np.array(
        [kernel_seed(config.seed, 2, t) for t in range(max(n_threads, 1))],
        dtype=np.uint64,
    )

    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = g_order.permutation(n_edges).astype(np.int64)
        if n_threads > 1:
            total = _kernel.train_epoch_parallel(
                vectors, order, subs, objs, keys,
                np.int64(n_entities), config.negatives_per_positive,
                config.learning_rate, config.margin, loss_kind, rng_state,
            )
        else:
            total = _kernel.train_epoch_serial(
                vectors, order, subs, objs, keys,
                np.int64(n_entities), config.negatives_per_positive,
                config.learning_rate, config.margin, loss_kind, rng_state,
            )
        mean_loss = total / n_edges
        if not np.isfinite(mean_loss) or not np.all(np.isfinite(vectors)):
            raise NonFiniteLossError(epoch)
        report.epoch_losses.append(float(mean_loss))
    report.seconds = time.perf_counter() - start
    report.examples = config.epochs * n_edges
    return EmbeddingMatrix(vectors, iris), report


def example_gradients(emb, u, v, negatives, margin, loss="hinge"):
    """Analytic per-example gradients of the batch loss w.r.t. emb rows.

    Returns (loss_value, {row_id: gradient vector}); mirrors the kernel's
    update formulas, which subtract learning_rate times these gradients.
    """
    emb = np.asarray(emb, dtype=np.float64)
    k = len(negatives)
    eu = emb[u].copy()
    pos = float(eu @ emb[v])
    neg_sims = np.array([float(eu @ emb[w]) for w in negatives])
    grads = {}

    def add(row, vec):
        if row in grads:
            grads[row] = grads[row] + vec
        else:
            grads[row] = vec.copy()

    if loss == "hinge":
        value = float(np.mean(np.maximum(0.0, margin - pos + neg_sims)))
        for w, s in zip(negatives, neg_sims):
            if margin - pos + s > 0.0:
                add(v, -eu / k)
                add(w, eu / k)
                add(u, (emb[w] - emb[v]) / k)
    elif loss == "softmax":
        logits = np.concatenate(([pos], neg_sims))
        m = logits.max()
        exps = np.exp(logits - m)
        probs = exps / exps.sum()
        value = float(-(pos - m) + np.log(exps.sum()))
        add(v, (probs[0] - 1.0) * eu)
        add(u, (probs[0] - 1.0) * emb[v])
        for i, w in enumerate(negatives):
            add(w, probs[i + 1] * eu)
            add(u, probs[i + 1] * emb[w])
    else:
        raise ValueError(f"unknown loss {loss!r}")
    return value, grads


@dataclass(frozen=True)
class GradientCheckResult:
    max_rel_error: float
    probes_evaluated: int
    kinks_skipped: int
    loss: str


def gradient_check(
    config: Optional[TrainConfig] = None,
    n_entities=8,
    probes=100,
    seed=1234,
    step=1e-6,
    kink_tol=1e-3,
):
    """Compare analytic batch-loss gradients against central differences.

    Each probe draws a small embedding table, a positive pair, and k
    negatives, then checks every coordinate of every involved row. Probes
    whose hinge margin sits within kink_tol of the non-differentiable point
    are skipped and counted, not evaluated.
    """
    if config is None:
        config = TrainConfig(dim=4)
    config.validate()
    loss = config.loss
    rng = generator(seed, 0)
    max_rel = 0.0
    evaluated = 0
    kinks = 0

    def loss_at(emb, u, v, negatives):
        eu = emb[u]
        pos = float(eu @ emb[v])
        sims = [float(eu @ emb[w]) for w in negatives]
        if loss == "hinge":
            return batch_loss(pos, sims, config.margin)
        return softmax_batch_loss(pos, sims)

    k = config.negatives_per_positive
    if n_entities < k + 2:
        raise ValueError("n_entities must cover the pair plus k distinct negatives")
    while evaluated < probes:
        emb = rng.normal(0.0, 0.5, size=(n_entities, config.dim))
        # distinct rows: duplicate rows cancel gradient terms exactly, which
        # tells us nothing about the formulas and only amplifies FD noise
        ids = rng.choice(n_entities, size=k + 2, replace=False)
        u, v = int(ids[0]), int(ids[1])
        negatives = [int(w) for w in ids[2:]]
        value, grads = example_gradients(emb, u, v, negatives, config.margin, loss)
        if loss == "hinge":
            eu = emb[u]
            pos = float(eu @ emb[v])
            near_kink = any(
                abs(config.margin - pos + float(eu @ emb[w])) < kink_tol
                for w in negatives
            )
            if near_kink:
                kinks += 1
                continue
        for row, grad in grads.items():
            for j in range(config.dim):
                bumped = emb.copy()
                bumped[row, j] += step
                up = loss_at(bumped, u, v, negatives)
                bumped[row, j] -= 2 * step
                down = loss_at(bumped, u, v, negatives)
                numeric = (up - down) / (2 * step)
                if abs(numeric) < 1e-7 and abs(grad[j]) < 1e-7:
                    continue  # agreeing zeros; FD noise dominates the ratio
                rel = abs(numeric - grad[j]) / max(abs(numeric), abs(grad[j]), 1e-8)
                if rel > max_rel:
                    max_rel = rel
        evaluated += 1
    return GradientCheckResult(max_rel, evaluated, kinks, loss)
