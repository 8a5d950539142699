"""Command line interface.

Subcommands mirror the pipeline stages (ingest, flatten, stats, split,
embed, classify, evaluate, report) plus `run` for the whole chain. Each
stage reads the previous stage's files, so an interrupted run can resume
from any point. Exit codes: 0 success, 2 bad configuration or flags,
3 data errors, 4 leakage audit failures.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import pipeline
from .classify import build_features, predict_proba, save_model, train_logreg, train_mlp
from .embedding import EmbeddingMatrix, TrainConfig, train
from .errors import ConfigError, DataError, KglpError, LeakageError
from .graph import DEFAULT_ANONYMOUS_PATTERN, KnowledgeGraph
from .ingest import parse_prefix_flag, read_tsv_edges
from .metrics import (
    delta_report,
    f_measure,
    load_baseline,
    read_metrics_csv,
    render_delta_table,
    roc_auc,
)
from .pipeline import PipelineConfig, load_graph, resolve_relation
from .rng import STAGE_EMBED, STAGE_SPLIT, kernel_seed, resolve_master_seed
from .sampling import (
    audit_leakage,
    build_split,
    embedding_training_pairs,
    make_folds,
    read_split_tsv,
    write_split_tsv,
)

log = logging.getLogger("kglp")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_LEAKAGE = 4

# module that raised -> prefix shown in error lines
_ERROR_MODULES = {
    "AmbiguousPairError": "graph",
    "DanglingAnonymousError": "graph",
    "TypeConflictError": "graph",
    "DataError": "ingest",
    "TooFewEdgesError": "sampling",
    "ExhaustedError": "sampling",
    "LeakageError": "sampling",
    "EmptyGraphError": "embedding",
    "NonFiniteLossError": "embedding",
    "DimensionMismatchError": "embedding",
    "SingleClassError": "classify",
    "NoPositivesError": "metrics",
    "UnknownRelationError": "metrics",
    "ConfigError": "config",
}


def _csv_ints(text, flag):
    try:
        values = [int(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise ConfigError(flag, f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise ConfigError(flag, "expected at least one integer")
    return values


def _load_tsv_graph(path, strict=True):
    kg = KnowledgeGraph(strict=strict)
    read_tsv_edges(path, kg)
    return kg


def _write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _config_from_args(args):
    """Merge --config JSON with flag overrides; flags win."""
    if getattr(args, "config", None):
        config = PipelineConfig.from_json(args.config)
    else:
        config = PipelineConfig()
    overrides = {
        "triples": getattr(args, "triples", None),
        "edges_tsv": getattr(args, "tsv", None),
        "prefixes": getattr(args, "prefixes", None),
        "seed": getattr(args, "seed", None),
        "folds": getattr(args, "folds", None),
        "classifier": getattr(args, "classifier", None),
        "threads": getattr(args, "threads", None),
        "out": getattr(args, "out", None),
        "operator": getattr(args, "operator", None),
        "epochs": getattr(args, "epochs", None),
        "learning_rate": getattr(args, "learning_rate", None),
        "margin": getattr(args, "margin", None),
        "loss": getattr(args, "loss", None),
        "negatives_per_positive": getattr(args, "negatives", None),
        "anonymous_pattern": getattr(args, "pattern", None),
    }
    for name, value in overrides.items():
        if value is not None:
            setattr(config, name, value)
    if getattr(args, "dims", None):
        config.dims = _csv_ints(args.dims, "dims")
    if getattr(args, "hidden", None):
        config.hidden = _csv_ints(args.hidden, "hidden")
    if getattr(args, "relation", None):
        config.relations = list(args.relation)
    if getattr(args, "prefix", None):
        for binding in args.prefix:
            label, namespace = parse_prefix_flag(binding)
            config.prefix_bindings[label] = namespace
    if getattr(args, "strict", None) is not None:
        config.strict = args.strict
    if getattr(args, "shared_embeddings", False):
        config.shared_embeddings = True
    if getattr(args, "structural", False):
        config.structural = True
    if getattr(args, "baseline", None):
        config.baseline = args.baseline
    return config


def _add_input_flags(p, tsv_only=False):
    if not tsv_only:
        p.add_argument("--triples", help="N-Triples style input file")
        p.add_argument("--prefixes", help="JSON file with a prefixes mapping")
        p.add_argument(
            "--prefix",
            action="append",
            metavar="LABEL=IRI",
            help="extra prefix binding (repeatable)",
        )
    p.add_argument("--tsv", help="tab-separated relation/subject/object edge file")


def _add_strictness(p):
    group = p.add_mutually_exclusive_group()
    group.add_argument(
        "--strict", dest="strict", action="store_true", default=None,
        help="refuse ordered pairs connected by two relations (default)",
    )
    group.add_argument(
        "--lenient", dest="strict", action="store_false",
        help="defer ambiguity checks to the flattening-safety scan",
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kglp",
        description="Knowledge-graph link prediction: ingest, flatten, split, "
        "embed, classify, evaluate, report.",
    )
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse triples/TSV into an edge list")
    _add_input_flags(p)
    _add_strictness(p)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("flatten", help="collapse anonymous instances")
    p.add_argument("--tsv", required=True, help="edge list from ingest")
    p.add_argument("--pattern", help="regex marking anonymous IRIs")
    p.add_argument(
        "--structural", action="store_true",
        help="also detect anonymous nodes by shape instead of name",
    )
    _add_strictness(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stats", help="per-relation edge counts")
    p.add_argument("--tsv", required=True)
    p.add_argument("--out", help="also write stats.json here")

    p = sub.add_parser("split", help="build k-fold evaluation splits")
    p.add_argument("--tsv", required=True, help="flattened edge list")
    p.add_argument("--relation", action="append", required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("embed", help="train entity embeddings")
    p.add_argument("--tsv", required=True, help="flattened edge list")
    p.add_argument("--split", help="hold out this split's test edges")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--margin", type=float)
    p.add_argument("--negatives", type=int)
    p.add_argument("--loss", choices=["hinge", "softmax"])
    p.add_argument("--threads", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("classify", help="train a pair classifier on a split")
    p.add_argument("--tsv", required=True, help="flattened edge list")
    p.add_argument("--split", required=True)
    p.add_argument("--embeddings", required=True, help="text embedding file")
    p.add_argument("--classifier", choices=["logreg", "mlp"], default="logreg")
    p.add_argument("--hidden", help="comma-separated MLP layer sizes")
    p.add_argument("--operator", choices=["concat", "average", "hadamard", "l1", "l2"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evaluate", help="score prediction files")
    p.add_argument("--predictions", action="append", required=True)
    p.add_argument("--out")

    p = sub.add_parser("report", help="compare metrics.csv against the baseline")
    p.add_argument("--metrics", required=True)
    p.add_argument("--baseline", help="baseline JSON override")
    p.add_argument("--out")

    p = sub.add_parser("run", help="full pipeline from one config")
    p.add_argument("--config", help="pipeline config JSON")
    _add_input_flags(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--dims", help="comma-separated embedding dimensions")
    p.add_argument("--folds", type=int)
    p.add_argument("--relation", action="append")
    p.add_argument("--classifier", choices=["logreg", "mlp"])
    p.add_argument("--hidden")
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    _add_strictness(p)
    p.add_argument("--shared-embeddings", action="store_true", dest="shared_embeddings")
    p.add_argument("--operator", choices=["concat", "average", "hadamard", "l1", "l2"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--learning-rate", type=float, dest="learning_rate")
    p.add_argument("--margin", type=float)
    p.add_argument("--negatives", type=int)
    p.add_argument("--loss", choices=["hinge", "softmax"])
    p.add_argument("--pattern")
    p.add_argument("--structural", action="store_true")
    p.add_argument("--baseline")

    return parser


def _cmd_ingest(args):
    config = _config_from_args(args)
    if config.triples is None and config.edges_tsv is None:
        raise ConfigError("triples", "ingest needs --triples or --tsv")
    os.makedirs(args.out, exist_ok=True)
    kg = load_graph(config)
    out_path = os.path.join(args.out, "edges.tsv")
    kg.to_tsv(out_path)
    _write_json(
        os.path.join(args.out, "ingest-summary.json"),
        {
            "entities": kg.n_entities,
            "relations": kg.n_relations,
            "edges": sum(kg.relation_counts().values()),
        },
    )
    print(f"wrote {out_path} ({kg.n_entities} entities, {kg.n_relations} relations)")
    return EXIT_OK


def _cmd_flatten(args):
    strict = True if args.strict is None else args.strict
    kg = _load_tsv_graph(args.tsv, strict=strict)
    flat = kg.collapse_anonymous_instances(
        pattern=args.pattern or DEFAULT_ANONYMOUS_PATTERN,
        structural=args.structural,
    )
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "flattened.tsv")
    flat.to_tsv(out_path)
    violations = flat.verify_flattening_safety()
    _write_json(
        os.path.join(args.out, "flatten-summary.json"),
        {
            "entities_before": kg.n_entities,
            "entities_after": flat.n_entities,
            "collapsed": kg.n_entities - flat.n_entities,
            "safety_violations": [
                {"subject": s, "relations": list(r), "object": o}
                for s, r, o in violations
            ],
        },
    )
    print(
        f"wrote {out_path} (collapsed {kg.n_entities - flat.n_entities} nodes, "
        f"{len(violations)} safety violations)"
    )
    return EXIT_OK


def _cmd_stats(args):
    kg = _load_tsv_graph(args.tsv, strict=False)
    counts = kg.relation_counts()
    width = max((len(r) for r in counts), default=8)
    for iri in sorted(counts):
        print(f"{iri:<{width}}  {counts[iri]}")
    print(f"{'(entities)':<{width}}  {kg.n_entities}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(
            os.path.join(args.out, "stats.json"),
            {"relations": counts, "entities": kg.n_entities},
        )
    return EXIT_OK


def _cmd_split(args):
    kg = _load_tsv_graph(args.tsv, strict=False)
    kg.freeze()
    seed = resolve_master_seed(args.seed)
    os.makedirs(args.out, exist_ok=True)
    written = []
    for name in args.relation:
        rel = resolve_relation(kg, name)
        plan = make_folds(kg, rel, args.folds, kernel_seed(seed, STAGE_SPLIT, kg.relation_id(rel)))
        for fold in range(args.folds):
            split = build_split(kg, plan, fold, seed=seed)
            label = pipeline.local_name(rel)
            path = os.path.join(args.out, f"split-{label}-fold{fold}.tsv")
            write_split_tsv(split, kg, path)
            written.append(path)
    print(f"wrote {len(written)} split files under {args.out}")
    return EXIT_OK


def _cmd_embed(args):
    kg = _load_tsv_graph(args.tsv, strict=False)
    kg.freeze()
    seed = resolve_master_seed(args.seed)
    pairs = None
    holdout = 0
    if args.split:
        split = read_split_tsv(args.split, kg)
        pairs = embedding_training_pairs(kg, split.test_pos)
        holdout = len(split.test_pos)
    if pairs is None:
        pairs = sorted(kg.all_pairs())
    config = TrainConfig(
        dim=args.dim,
        epochs=args.epochs if args.epochs is not None else 10,
        learning_rate=args.learning_rate if args.learning_rate is not None else 0.05,
        negatives_per_positive=args.negatives if args.negatives is not None else 5,
        margin=args.margin if args.margin is not None else 0.05,
        seed=kernel_seed(seed, STAGE_EMBED, args.dim),
        threads=args.threads if args.threads is not None else 1,
        loss=args.loss or "hinge",
    )
    iris = [kg.entity_iri(i) for i in range(kg.n_entities)]
    matrix, report = train(pairs, config, n_entities=kg.n_entities, iris=iris)
    os.makedirs(args.out, exist_ok=True)
    text_path = os.path.join(args.out, f"embeddings-d{args.dim}.txt")
    bin_path = os.path.join(args.out, f"embeddings-d{args.dim}.bin")
    matrix.save_text(text_path)
    matrix.save_binary(bin_path)
    doc = report.to_dict()
    doc.update({"dim": args.dim, "training_edges": len(pairs), "held_out_edges": holdout})
    if args.split:
        doc["split"] = args.split
    _write_json(os.path.join(args.out, f"embed-report-d{args.dim}.json"), doc)
    print(
        f"wrote {text_path} (|V|={matrix.vectors.shape[0]}, d={args.dim}, "
        f"final loss {report.epoch_losses[-1]:.6f})"
        if report.epoch_losses
        else f"wrote {text_path} (|V|={matrix.vectors.shape[0]}, d={args.dim})"
    )
    return EXIT_OK


def _cmd_classify(args):
    kg = _load_tsv_graph(args.tsv, strict=False)
    kg.freeze()
    seed = resolve_master_seed(args.seed)
    split = read_split_tsv(args.split, kg)

    # The audit gates everything: no classifier trains on a leaky split.
    training_pairs = embedding_training_pairs(kg, split.test_pos)
    violations = audit_leakage(split, training_pairs, kg.all_pairs())
    if violations:
        raise LeakageError([v.describe(kg) for v in violations])

    matrix = EmbeddingMatrix.load_text(args.embeddings)
    ids = {iri: i for i, iri in enumerate(matrix.iris)}
    missing = [
        kg.entity_iri(e)
        for pair in split.train_pos
        for e in pair
        if kg.entity_iri(e) not in ids
    ]
    if missing:
        raise DataError(f"embeddings missing {len(missing)} entities, e.g. {missing[0]}")

    def rows(pairs):
        return [(ids[kg.entity_iri(u)], ids[kg.entity_iri(v)]) for u, v in pairs]

    operator = args.operator or "concat"
    train_pairs = rows(sorted(split.train_pos) + sorted(split.train_neg))
    test_pairs = sorted(split.test_pos) + sorted(split.test_neg)
    y_train = np.array([1.0] * len(split.train_pos) + [0.0] * len(split.train_neg))
    y_test = np.array([1.0] * len(split.test_pos) + [0.0] * len(split.test_neg))
    X_train = build_features(matrix.vectors, train_pairs, operator)
    X_test = build_features(matrix.vectors, rows(test_pairs), operator)

    if args.classifier == "mlp":
        hidden = tuple(_csv_ints(args.hidden, "hidden")) if args.hidden else (200,)
        model = train_mlp(X_train, y_train, hidden=hidden, seed=seed)
    else:
        model = train_logreg(X_train, y_train, seed=seed)
    scores = predict_proba(model, X_test)

    os.makedirs(args.out, exist_ok=True)
    model_path = os.path.join(args.out, "model.json")
    save_model(model, model_path, config={"classifier": args.classifier, "operator": operator})
    pred_path = os.path.join(args.out, "predictions.tsv")
    with open(pred_path, "w", encoding="utf-8") as fh:
        fh.write(
            f"# relation={split.relation} fold={split.fold_index} "
            f"operator={operator}\n"
        )
        for (u, v), label, score in zip(test_pairs, y_test, scores):
            fh.write(
                f"{kg.entity_iri(u)}\t{kg.entity_iri(v)}\t{int(label)}\t{score:.9g}\n"
            )
    print(
        f"audit clean ({len(split.train_pos)} train positives); "
        f"wrote {pred_path} and {model_path}"
    )
    return EXIT_OK


def _read_predictions(path):
    labels, scores = [], []
    with open(path, "r", encoding="utf-8") as fh:
        for i, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(f"expected 4 columns, found {len(parts)}", line_number=i)
            labels.append(int(parts[2]))
            scores.append(float(parts[3]))
    return np.array(scores, dtype=float), np.array(labels, dtype=int)


def _cmd_evaluate(args):
    rows = []
    for path in args.predictions:
        scores, labels = _read_predictions(path)
        rows.append(
            {
                "predictions": path,
                "n": int(labels.size),
                "f_measure": f_measure(scores, labels),
                "roc_auc": roc_auc(scores, labels),
            }
        )
    doc = {"rows": rows}
    if len(rows) > 1:
        doc["mean_f_measure"] = sum(r["f_measure"] for r in rows) / len(rows)
        doc["mean_roc_auc"] = sum(r["roc_auc"] for r in rows) / len(rows)
    print(json.dumps(doc, indent=2, sort_keys=True))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(os.path.join(args.out, "eval.json"), doc)
    return EXIT_OK


def _cmd_report(args):
    rows = read_metrics_csv(args.metrics)
    baseline = load_baseline(args.baseline)
    matched = [r for r in rows if r.relation in baseline]
    unmatched = sorted({r.relation for r in rows} - set(baseline))
    if not matched:
        print("no measured relation matches the baseline table")
    else:
        deltas = delta_report(matched, baseline)
        print(render_delta_table(deltas))
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            _write_json(
                os.path.join(args.out, "report.json"),
                {
                    "deltas": [
                        {
                            "relation": d.relation,
                            "dim": d.dim,
                            "delta_f_measure": d.delta_f,
                            "delta_roc_auc": d.delta_auc,
                        }
                        for d in deltas
                    ],
                    "relations_not_in_baseline": unmatched,
                },
            )
    if unmatched:
        print("not in baseline: " + ", ".join(unmatched))
    return EXIT_OK


def _cmd_run(args):
    config = _config_from_args(args)
    summary = pipeline.run_pipeline(config)
    out = config.out
    print(f"pipeline finished; outputs under {out}")
    for label, cell in sorted(summary["relations"].items()):
        for dim, stats in sorted(cell["dims"].items(), key=lambda kv: int(kv[0])):
            print(
                f"  {label} d={dim}: F={stats['mean_f_measure']:.3f} "
                f"AUC={stats['mean_roc_auc']:.3f} over {stats['folds']} folds"
            )
    if summary["deltas"]:
        print(f"  deltas vs baseline in {os.path.join(out, 'report.txt')}")
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "flatten": _cmd_flatten,
    "stats": _cmd_stats,
    "split": _cmd_split,
    "embed": _cmd_embed,
    "classify": _cmd_classify,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "run": _cmd_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return _COMMANDS[args.command](args)
    except LeakageError as exc:
        print("error[sampling]: leakage audit failed:", file=sys.stderr)
        for violation in exc.violations:
            print(f"  - {violation}", file=sys.stderr)
        return EXIT_LEAKAGE
    except ConfigError as exc:
        print(f"error[config]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KglpError as exc:
        module = _ERROR_MODULES.get(type(exc).__name__, "kglp")
        print(f"error[{module}]: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
