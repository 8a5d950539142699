"""kglp: link prediction on flattened knowledge graphs.

The package turns a typed multigraph into per-relation train/test splits,
learns entity embeddings with a margin-based k-negative-sampling objective,
and scores pair classifiers (logistic regression, MLP) under a k-fold
cross-validation protocol that is audited for train/test leakage.
"""

from .classify import LogisticModel, MlpModel, featurize, predict_proba, train_logreg, train_mlp
from .embedding import (
    EmbeddingMatrix,
    TrainConfig,
    TrainReport,
    batch_loss,
    gradient_check,
    similarity,
    train,
)
from .errors import (
    AmbiguousPairError,
    ConfigError,
    DanglingAnonymousError,
    DataError,
    DimensionMismatchError,
    EmptyGraphError,
    ExhaustedError,
    KglpError,
    LeakageError,
    NonFiniteLossError,
    NoPositivesError,
    SingleClassError,
    TooFewEdgesError,
    TypeConflictError,
    UnknownRelationError,
)
from .graph import (
    Edge,
    KnowledgeGraph,
    RelationSchema,
    RelationStats,
    Triple,
    add_triple,
    collapse_anonymous_instances,
    relation_stats,
    verify_flattening_safety,
)
from .ingest import parse_document, parse_line, read_tsv_edges, serialize_triple
from .metrics import (
    MetricRow,
    cross_validate,
    delta_report,
    f_measure,
    load_baseline,
    roc_auc,
)
from .sampling import (
    EvaluationSplit,
    FoldPlan,
    NegativeSet,
    audit_leakage,
    build_split,
    make_folds,
    sample_negatives,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousPairError",
    "ConfigError",
    "DanglingAnonymousError",
    "DataError",
    "DimensionMismatchError",
    "Edge",
    "EmbeddingMatrix",
    "EmptyGraphError",
    "EvaluationSplit",
    "ExhaustedError",
    "FoldPlan",
    "KglpError",
    "KnowledgeGraph",
    "LeakageError",
    "LogisticModel",
    "MetricRow",
    "MlpModel",
    "NegativeSet",
    "NoPositivesError",
    "NonFiniteLossError",
    "RelationSchema",
    "RelationStats",
    "SingleClassError",
    "TooFewEdgesError",
    "TrainConfig",
    "TrainReport",
    "Triple",
    "TypeConflictError",
    "UnknownRelationError",
    "add_triple",
    "audit_leakage",
    "batch_loss",
    "build_split",
    "collapse_anonymous_instances",
    "cross_validate",
    "delta_report",
    "f_measure",
    "featurize",
    "gradient_check",
    "load_baseline",
    "make_folds",
    "parse_document",
    "parse_line",
    "predict_proba",
    "read_tsv_edges",
    "relation_stats",
    "roc_auc",
    "sample_negatives",
    "serialize_triple",
    "similarity",
    "train",
    "train_logreg",
    "train_mlp",
    "verify_flattening_safety",
    "__version__",
]
