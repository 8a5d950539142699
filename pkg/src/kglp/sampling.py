"""Leakage-safe splits and type-consistent negative sampling.

Folds partition a relation's positive edges. Negatives are ordered pairs
drawn from the relation's (domain pool x range pool) grid that are not an
edge anywhere in the FULL graph; rejecting only against the training split
would let true test edges appear as class-0 examples. Train and test
negatives are kept disjoint via the `excluded` parameter.
"""

from dataclasses import dataclass
from typing import Optional

from .errors import DataError, ExhaustedError, TooFewEdgesError
from .graph import KnowledgeGraph
from .rng import STAGE_NEGATIVES, STAGE_SPLIT, generator, kernel_seed

ROLES = ("train_pos", "test_pos", "train_neg", "test_neg")


@dataclass(frozen=True)
class FoldPlan:
    relation: str
    k: int
    folds: tuple  # k tuples of (subject_id, object_id) pairs
    seed: int


@dataclass(frozen=True)
class NegativeSet:
    relation: str
    pairs: tuple  # sorted (subject_id, object_id) pairs
    seed: int


@dataclass(frozen=True)
class EvaluationSplit:
    relation: str
    k: int
    fold_index: int
    seed: int
    train_pos: tuple
    test_pos: tuple
    train_neg: tuple
    test_neg: tuple

    def sets(self):
        return {
            "train_pos": set(self.train_pos),
            "test_pos": set(self.test_pos),
            "train_neg": set(self.train_neg),
            "test_neg": set(self.test_neg),
        }


@dataclass(frozen=True)
class Violation:
    kind: str
    relation: str
    pair: tuple

    def describe(self, kg: Optional[KnowledgeGraph] = None):
        u, v = self.pair
        if kg is not None:
            u, v = kg.entity_iri(u), kg.entity_iri(v)
        return f"{self.kind}: relation {self.relation} pair ({u}, {v})"


def make_folds(kg: KnowledgeGraph, relation, k, seed) -> FoldPlan:
    """Shuffle a relation's edges into k folds of near-equal size."""
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    edges = sorted(kg.edges(relation))
    n = len(edges)
    if n < k:
        raise TooFewEdgesError(
            f"relation {relation!r} has {n} edges, need at least {k} for {k} folds"
        )
    rng = generator(seed, STAGE_SPLIT)
    order = rng.permutation(n)
    base, extra = divmod(n, k)
    folds = []
    start = 0
    for i in range(k):
        size = base + (1 if i < extra else 0)
        chunk = order[start : start + size]
        folds.append(tuple(sorted(edges[j] for j in chunk)))
        start += size
    return FoldPlan(relation=relation, k=k, folds=tuple(folds), seed=int(seed))


def candidate_pools(kg: KnowledgeGraph, relation):
    """(subject pool, object pool) of entity ids for negative generation.

    Uses declared domain/range types when the schema and typed entities are
    available, otherwise falls back to the entities observed in each slot.
    """
    schema = kg.schema(relation)
    if schema is not None:
        subjects = kg.entities_of_type(schema.domain_type)
        objects = kg.entities_of_type(schema.range_type)
        if subjects and objects:
            return subjects, objects
    return kg.subjects(relation), kg.objects(relation)


def sample_negatives(
    kg: KnowledgeGraph, relation, count, seed, excluded=()
) -> NegativeSet:
    """Draw `count` distinct type-consistent non-edges.

    Rejection-samples uniform (subject, object) pairs against the full
    graph's edge set; switches to explicit enumeration of the non-edge pool
    when the pool is small relative to the positives or to the request, so
    sampling always terminates. Raises ExhaustedError (with the pool size)
    when fewer than `count` candidates exist.
    """
    count = int(count)
    if isinstance(excluded, NegativeSet):
        excluded = excluded.pairs
    subjects, objects = candidate_pools(kg, relation)
    subj_set, obj_set = set(subjects), set(objects)
    excluded_in_grid = {
        p for p in excluded if p[0] in subj_set and p[1] in obj_set
    }
    grid = len(subjects) * len(objects)
    blocked_pos = sum(
        1 for (u, v) in kg.all_pairs() if u in subj_set and v in obj_set
    )
    pool = grid - blocked_pos - len(excluded_in_grid)
    if count == 0:
        return NegativeSet(relation, (), int(seed))
    if pool < count:
        raise ExhaustedError(count, pool)

    rng = generator(seed, STAGE_NEGATIVES)
    if pool < 2 * blocked_pos or pool < 2 * count:
        pairs = _enumerate_negatives(
            kg, subjects, objects, excluded_in_grid, count, rng
        )
    else:
        pairs = _reject_negatives(
            kg, subjects, objects, excluded_in_grid, count, rng
        )
    return NegativeSet(relation, tuple(sorted(pairs)), int(seed))


def _enumerate_negatives(kg, subjects, objects, excluded, count, rng):
    candidates = [
        (u, v)
        for u in subjects
        for v in objects
        if not kg.pair_exists(u, v) and (u, v) not in excluded
    ]
    picked = rng.permutation(len(candidates))[:count]
    return [candidates[i] for i in picked]


def _reject_negatives(kg, subjects, objects, excluded, count, rng):
    chosen = set()
    n_s, n_o = len(subjects), len(objects)
    while len(chosen) < count:
        need = count - len(chosen)
        us = rng.integers(0, n_s, size=2 * need + 16)
        vs = rng.integers(0, n_o, size=2 * need + 16)
        for iu, iv in zip(us, vs):
            pair = (subjects[iu], objects[iv])
            if pair in chosen or pair in excluded or kg.pair_exists(*pair):
                continue
            chosen.add(pair)
            if len(chosen) == count:
                break
    return chosen


def build_split(
    kg: KnowledgeGraph, plan: FoldPlan, test_fold_index, seed=None
) -> EvaluationSplit:
    """Assemble one evaluation split from a fold plan.

    test_pos is the chosen fold, train_pos the rest; negatives are sampled
    to match each side's size, with test negatives excluded from the train
    negatives so the four sets are pairwise disjoint.
    """
    if not (0 <= test_fold_index < plan.k):
        raise ValueError(
            f"test fold index {test_fold_index} out of range for k={plan.k}"
        )
    if seed is None:
        seed = plan.seed
    test_pos = plan.folds[test_fold_index]
    train_pos = tuple(
        sorted(
            pair
            for i, fold in enumerate(plan.folds)
            if i != test_fold_index
            for pair in fold
        )
    )
    seed_train = kernel_seed(seed, STAGE_NEGATIVES, test_fold_index, 0)
    seed_test = kernel_seed(seed, STAGE_NEGATIVES, test_fold_index, 1)
    train_neg = sample_negatives(kg, plan.relation, len(train_pos), seed_train)
    test_neg = sample_negatives(
        kg, plan.relation, len(test_pos), seed_test, excluded=train_neg
    )
    return EvaluationSplit(
        relation=plan.relation,
        k=plan.k,
        fold_index=int(test_fold_index),
        seed=int(seed),
        train_pos=train_pos,
        test_pos=test_pos,
        train_neg=train_neg.pairs,
        test_neg=test_neg.pairs,
    )


def audit_leakage(split: EvaluationSplit, embedding_training_edges, full_graph_pairs=None):
    """Check a split for information leakage; empty result means clean.

    Violation kinds:
      test-edge-in-training   a test positive fed to the embedding trainer
      split-overlap           a pair in two split sets (pos/pos or pos/neg)
      negative-overlap        a pair in both negative sets
      negative-is-positive    a sampled negative that is a real edge
    """
    sets = split.sets()
    training = set(embedding_training_edges)
    positives = (
        set(full_graph_pairs)
        if full_graph_pairs is not None
        else sets["train_pos"] | sets["test_pos"]
    )
    violations = []

    for pair in sorted(sets["test_pos"] & training):
        violations.append(Violation("test-edge-in-training", split.relation, pair))

    names = list(sets)
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            a, b = names[i], names[j]
            overlap = sets[a] & sets[b]
            kind = (
                "negative-overlap"
                if {a, b} == {"train_neg", "test_neg"}
                else "split-overlap"
            )
            for pair in sorted(overlap):
                violations.append(Violation(kind, split.relation, pair))

    for pair in sorted((sets["train_neg"] | sets["test_neg"]) & positives):
        violations.append(Violation("negative-is-positive", split.relation, pair))
    return violations


def embedding_training_pairs(kg: KnowledgeGraph, test_pos=()):
    """All ordered edge pairs of the graph minus one relation's test fold."""
    pairs = set(kg.all_pairs())
    pairs.difference_update(test_pos)
    return pairs


# -- split TSV round-trip ---------------------------------------------


def write_split_tsv(split: EvaluationSplit, kg: KnowledgeGraph, path):
    """Role-tagged TSV: role, relation, subject, object; header carries
    relation, k, fold, seed."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            f"# relation={split.relation} k={split.k} "
            f"fold={split.fold_index} seed={split.seed}\n"
        )
        for role in ROLES:
            pairs = getattr(split, role)
            rows = sorted(
                (kg.entity_iri(u), kg.entity_iri(v)) for u, v in pairs
            )
            for s, o in rows:
                fh.write(f"{role}\t{split.relation}\t{s}\t{o}\n")


def read_split_tsv(path, kg: KnowledgeGraph) -> EvaluationSplit:
    header = None
    collected = {role: [] for role in ROLES}
    with open(path, "r", encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            if line.startswith("#"):
                if header is None:
                    header = _parse_split_header(line, number)
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise DataError(
                    f"expected 4 tab-separated columns, found {len(parts)}",
                    line_number=number,
                )
            role, relation, s, o = parts
            if role not in collected:
                raise DataError(f"unknown role {role!r}", line_number=number)
            if header and relation != header["relation"]:
                raise DataError(
                    f"row relation {relation!r} does not match header "
                    f"{header['relation']!r}",
                    line_number=number,
                )
            try:
                pair = (kg.entity_id(s), kg.entity_id(o))
            except KeyError as exc:
                raise DataError(str(exc), line_number=number) from exc
            collected[role].append(pair)
    if header is None:
        raise DataError("split file missing header comment")
    return EvaluationSplit(
        relation=header["relation"],
        k=header["k"],
        fold_index=header["fold"],
        seed=header["seed"],
        train_pos=tuple(sorted(collected["train_pos"])),
        test_pos=tuple(sorted(collected["test_pos"])),
        train_neg=tuple(sorted(collected["train_neg"])),
        test_neg=tuple(sorted(collected["test_neg"])),
    )


def _parse_split_header(line, number):
    fields = {}
    for chunk in line.lstrip("#").split():
        key, sep, value = chunk.partition("=")
        if sep:
            fields[key] = value
    try:
        return {
            "relation": fields["relation"],
            "k": int(fields["k"]),
            "fold": int(fields["fold"]),
            "seed": int(fields["seed"]),
        }
    except (KeyError, ValueError) as exc:
        raise DataError(
            f"bad split header {line!r}", line_number=number
        ) from exc
