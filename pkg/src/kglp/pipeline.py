"""End-to-end pipeline: ingest, flatten, stats, evaluate, report.

One JSON config (plus flag overrides) drives every stage. The master seed
deterministically derives all stage seeds, so a single integer reproduces a
run; every run writes effective-config.json and a stage manifest so later
stages can be re-run standalone against earlier outputs. The leakage audit
runs per fold and must come back clean before any classifier trains; an
audit violation aborts the run.

Stage DAG (each stage reads only earlier outputs):
  ingest -> flatten -> stats -> [per relation x dim] splits/embed/classify
  -> metrics.csv -> summary.json/report
"""

import dataclasses
import hashlib
import json
import os
import time
from dataclasses import dataclass, field
from typing import Optional

from .embedding import LOSS_KINDS, TrainConfig
from .errors import ConfigError, DataError, UnknownRelationError
from .graph import DEFAULT_ANONYMOUS_PATTERN, RDF_TYPE_IRI, KnowledgeGraph
from .ingest import (
    ingest_triples,
    load_prefix_map,
    read_tsv_edges,
    validate_prefixes,
)
from .metrics import (
    cross_validate,
    delta_report,
    load_baseline,
    render_delta_table,
    write_metrics_csv,
)
from .rng import resolve_master_seed

DEFAULT_DIMS = (5, 10, 20, 50)

_SEED_MAX = (1 << 64) - 1


@dataclass
class PipelineConfig:
    # inputs; at least one of triples / edges_tsv
    triples: Optional[str] = None
    prefixes: Optional[str] = None  # path to {"prefixes": {...}} JSON
    prefix_bindings: dict = field(default_factory=dict)  # label -> namespace
    edges_tsv: Optional[str] = None

    # protocol
    relations: list = field(default_factory=list)  # IRIs or display names; empty = all
    relation_names: dict = field(default_factory=dict)  # IRI -> display name
    dims: list = field(default_factory=lambda: list(DEFAULT_DIMS))
    folds: int = 5
    seed: Optional[int] = None  # None -> KGLP_SEED env -> 0
    out: str = "out"
    classifier: str = "logreg"
    hidden: list = field(default_factory=lambda: [200])
    threads: int = 1
    strict: bool = True
    shared_embeddings: bool = False
    operator: str = "concat"

    # embedding hyperparameters
    epochs: int = 10
    learning_rate: float = 0.05
    negatives_per_positive: int = 5
    margin: float = 0.05
    loss: str = "hinge"

    # classifier hyperparameter overrides
    logreg: dict = field(default_factory=dict)
    mlp: dict = field(default_factory=dict)

    # flattening
    anonymous_pattern: str = DEFAULT_ANONYMOUS_PATTERN
    structural: bool = False
    rdf_type_iri: str = RDF_TYPE_IRI

    baseline: Optional[str] = None  # override the bundled table

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in dataclasses.fields(cls)}
        for key in doc:
            if key not in known:
                raise ConfigError(key, "unknown config field")
        return cls(**doc)

    @classmethod
    def from_json(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError("config", f"file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("config", "top level must be a JSON object")
        return cls.from_dict(doc)

    def validate(self):
        if self.triples is None and self.edges_tsv is None:
            raise ConfigError("triples", "need a triples or edges_tsv input path")
        for fieldname in ("triples", "prefixes", "edges_tsv", "baseline"):
            path = getattr(self, fieldname)
            if path is not None and not os.path.exists(path):
                raise ConfigError(fieldname, f"path does not exist: {path}")
        if not self.dims:
            raise ConfigError("dims", "must list at least one dimension")
        for d in self.dims:
            if not isinstance(d, int) or d < 1:
                raise ConfigError("dims", f"dimensions must be positive ints, got {d!r}")
        if not isinstance(self.folds, int) or self.folds < 2:
            raise ConfigError("folds", f"must be an integer >= 2, got {self.folds!r}")
        if self.seed is not None and not (0 <= int(self.seed) <= _SEED_MAX):
            raise ConfigError("seed", "must fit in an unsigned 64-bit integer")
        if self.classifier not in ("logreg", "mlp"):
            raise ConfigError("classifier", f"must be logreg or mlp, got {self.classifier!r}")
        for h in self.hidden:
            if not isinstance(h, int) or h < 1:
                raise ConfigError("hidden", f"hidden sizes must be positive ints, got {h!r}")
        if not isinstance(self.threads, int) or self.threads < 1:
            raise ConfigError("threads", "must be a positive integer")
        if self.operator not in ("concat", "average", "hadamard", "l1", "l2"):
            raise ConfigError("operator", f"unknown operator {self.operator!r}")
        if self.epochs < 0:
            raise ConfigError("epochs", "must be non-negative")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate", "must be positive")
        if self.negatives_per_positive < 1:
            raise ConfigError("negatives_per_positive", "must be at least 1")
        if self.margin < 0:
            raise ConfigError("margin", "must be non-negative")
        if self.loss not in LOSS_KINDS:
            raise ConfigError("loss", f"must be one of {LOSS_KINDS}")
        if not self.out:
            raise ConfigError("out", "output directory must be non-empty")
        validate_prefixes(self.prefix_bindings)
        return self

    def resolved_seed(self):
        return resolve_master_seed(self.seed)

    def embed_template(self, dim=None):
        return TrainConfig(
            dim=dim if dim is not None else self.dims[0],
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            negatives_per_positive=self.negatives_per_positive,
            margin=self.margin,
            threads=self.threads,
            loss=self.loss,
        )

    def classifier_params(self):
        if self.classifier == "mlp":
            params = dict(self.mlp)
            params.setdefault("hidden", tuple(self.hidden))
            return params
        return dict(self.logreg)

    def to_dict(self):
        doc = dataclasses.asdict(self)
        doc["seed"] = self.resolved_seed()
        return doc

    def config_hash(self):
        doc = self.to_dict()
        doc.pop("out", None)  # the destination does not affect any computed value
        canonical = json.dumps(doc, sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def local_name(iri):
    """Last path segment of an IRI; used as the default display name."""
    if "#" in iri:
        return iri.rsplit("#", 1)[1]
    return iri.rstrip("/").rsplit("/", 1)[-1]


def display_name(iri, relation_names=None):
    if relation_names and iri in relation_names:
        return relation_names[iri]
    return local_name(iri)


def resolve_relation(kg: KnowledgeGraph, name, relation_names=None):
    """Accept an exact IRI, a configured display name, or a local name."""
    if kg.has_relation(name):
        return name
    matches = [
        iri
        for iri in kg.relations()
        if display_name(iri, relation_names) == name or local_name(iri) == name
    ]
    if len(matches) == 1:
        return matches[0]
    if not matches:
        raise UnknownRelationError(f"relation {name!r} not found in graph")
    raise UnknownRelationError(f"relation {name!r} is ambiguous: {matches}")


def load_graph(config: PipelineConfig) -> KnowledgeGraph:
    """Build the raw (pre-flattening) graph from the configured inputs."""
    kg = KnowledgeGraph(strict=config.strict, rdf_type_iri=config.rdf_type_iri)
    if config.triples is not None:
        prefixes = {}
        if config.prefixes is not None:
            prefixes.update(load_prefix_map(config.prefixes))
        prefixes.update(config.prefix_bindings)
        with open(config.triples, "r", encoding="utf-8") as fh:
            report = ingest_triples(fh, kg, prefixes)
        if report.errors:
            first = report.errors[0]
            raise DataError(
                f"{len(report.errors)} parse error(s) in {config.triples}; first at "
                f"line {first.line_number} column {first.payload.column}: "
                f"{first.payload.message}"
            )
    if config.edges_tsv is not None:
        read_tsv_edges(config.edges_tsv, kg)
    return kg


class _Manifest:
    """Ordered record of stage outputs; later stages may only read earlier
    entries (DAG discipline)."""

    def __init__(self, out_dir, config_hash):
        self.path = os.path.join(out_dir, "manifest.json")
        self.config_hash = config_hash
        self.stages = []

    def record(self, stage, outputs, **extra):
        entry = {"stage": stage, "outputs": outputs, "config_hash": self.config_hash}
        entry.update(extra)
        self.stages.append(entry)
        with open(self.path, "w", encoding="utf-8") as fh:
            json.dump({"stages": self.stages}, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _eligible_relations(kg: KnowledgeGraph, config: PipelineConfig):
    if config.relations:
        return [
            resolve_relation(kg, name, config.relation_names)
            for name in config.relations
        ]
    out = []
    for iri in kg.relations():
        if iri == config.rdf_type_iri:
            continue
        if kg.edge_count(iri) >= config.folds:
            out.append(iri)
    if not out:
        raise DataError("no relation has enough edges to evaluate")
    return out


def run_pipeline(config: PipelineConfig) -> dict:
    """Run every stage; returns the summary dict written to summary.json."""
    config.validate()
    seed = config.resolved_seed()
    out_dir = config.out
    os.makedirs(out_dir, exist_ok=True)

    with open(os.path.join(out_dir, "effective-config.json"), "w", encoding="utf-8") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest = _Manifest(out_dir, config.config_hash())

    t0 = time.perf_counter()
    raw = load_graph(config)
    edges_path = os.path.join(out_dir, "edges.tsv")
    raw.to_tsv(edges_path)
    manifest.record(
        "ingest",
        ["edges.tsv"],
        entities=raw.n_entities,
        relations=raw.n_relations,
        seconds=round(time.perf_counter() - t0, 3),
    )

    t0 = time.perf_counter()
    kg = raw.collapse_anonymous_instances(
        pattern=config.anonymous_pattern, structural=config.structural
    )
    kg.freeze()
    flat_path = os.path.join(out_dir, "flattened.tsv")
    kg.to_tsv(flat_path)
    safety = kg.verify_flattening_safety()
    manifest.record(
        "flatten",
        ["flattened.tsv"],
        entities=kg.n_entities,
        safety_violations=len(safety),
        seconds=round(time.perf_counter() - t0, 3),
    )

    counts = kg.relation_counts()
    stats_doc = {
        "relations": {
            display_name(iri, config.relation_names): {
                "iri": iri,
                "edges": counts[iri],
            }
            for iri in kg.relations()
        },
        "entities": kg.n_entities,
        "flattening_safety_violations": [
            {"subject": s, "relations": list(rels), "object": o}
            for s, rels, o in safety
        ],
    }
    with open(os.path.join(out_dir, "stats.json"), "w", encoding="utf-8") as fh:
        json.dump(stats_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    manifest.record("stats", ["stats.json"])

    relations = _eligible_relations(kg, config)
    template = config.embed_template()
    rows = []
    summaries = {}
    t0 = time.perf_counter()
    for rel in relations:
        label = display_name(rel, config.relation_names)
        for dim in config.dims:
            result = cross_validate(
                kg,
                rel,
                dim,
                classifier=config.classifier,
                k=config.folds,
                seed=seed,
                embed=template,
                classifier_params=config.classifier_params(),
                shared_embeddings=config.shared_embeddings,
                operator=config.operator,
                relation_label=label,
            )
            rows.extend(result.rows)
            summaries.setdefault(label, {"iri": rel, "dims": {}})["dims"][
                str(dim)
            ] = result.summary()
    metrics_path = os.path.join(out_dir, "metrics.csv")
    write_metrics_csv(rows, metrics_path)
    manifest.record(
        "evaluate",
        ["metrics.csv"],
        rows=len(rows),
        seconds=round(time.perf_counter() - t0, 3),
    )

    baseline = load_baseline(config.baseline)
    matched = [r for r in rows if r.relation in baseline]
    unmatched = sorted({r.relation for r in rows} - set(baseline))
    deltas = delta_report(matched, baseline) if matched else []
    summary = {
        "seed": seed,
        "classifier": config.classifier,
        "dims": list(config.dims),
        "folds": config.folds,
        "operator": config.operator,
        "shared_embeddings": config.shared_embeddings,
        "faithful_protocol": not config.shared_embeddings,
        "relations": summaries,
        "deltas": [
            {
                "relation": d.relation,
                "dim": d.dim,
                "mean_f_measure": d.mean_f,
                "mean_roc_auc": d.mean_auc,
                "baseline_f_measure": d.baseline_f,
                "baseline_roc_auc": d.baseline_auc,
                "delta_f_measure": d.delta_f,
                "delta_roc_auc": d.delta_auc,
            }
            for d in deltas
        ],
        "relations_not_in_baseline": unmatched,
        "config_hash": config.config_hash(),
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if deltas:
        with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
            fh.write(render_delta_table(deltas) + "\n")
    manifest.record("report", ["summary.json"] + (["report.txt"] if deltas else []))
    return summary


def mean_fold_metrics(summary: dict):
    """(relation, dim) -> (mean F, mean AUC) flattened from a summary dict."""
    out = {}
    for label, cell in summary["relations"].items():
        for dim, stats in cell["dims"].items():
            out[(label, int(dim))] = (
                stats["mean_f_measure"],
                stats["mean_roc_auc"],
            )
    return out
