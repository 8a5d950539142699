"""
Leakage-safe folds and type-consistent negatives
================================================

Evaluating a link predictor needs (a) k folds that partition a
relation's edges, (b) negative pairs that are plausible — right entity
types, but never an actual edge of the graph — and (c) an audit that
proves no information leaks from the test fold into training.
"""

import dataclasses

from kglp import audit_leakage, build_split, make_folds, sample_negatives
from kglp.sampling import embedding_training_pairs
from kglp.synth import latent_factor_graph

kg = latent_factor_graph(
    n_subjects=60, n_objects=60, rank=4, seed=5, exact_count=400
)
relation = next(iter(kg.relations()))
print("relation:", relation, "with", kg.edge_count(relation), "edges")

# five folds of near-equal size; together they cover every edge once
plan = make_folds(kg, relation, k=5, seed=11)
print("fold sizes:", [len(fold) for fold in plan.folds])

# negatives are drawn from the typed candidate grid minus every real
# edge of the graph, so a sampled pair can never be a disguised positive
negs = sample_negatives(kg, relation, count=10, seed=11)
for u, v in negs.pairs[:3]:
    print("negative:", kg.entity_iri(u), "-/->", kg.entity_iri(v))
    assert not kg.pair_exists(u, v)

# one full split: fold 2 held out, the other four train, negatives
# matched in size on both sides and mutually disjoint
split = build_split(kg, plan, test_fold_index=2)
print(
    "split sizes: train_pos=%d test_pos=%d train_neg=%d test_neg=%d"
    % (
        len(split.train_pos),
        len(split.test_pos),
        len(split.train_neg),
        len(split.test_neg),
    )
)

# the audit cross-checks the four sets against each other, against the
# graph, and against whatever edge list the embedding trainer will see
training = embedding_training_pairs(kg, split.test_pos)
violations = audit_leakage(split, training, kg.all_pairs())
print("violations on the honest split:", len(violations))

# plant a fault: slip one test positive into the embedding training set
tampered = training | {split.test_pos[0]}
caught = audit_leakage(split, tampered, kg.all_pairs())
print("after planting a test edge in training:")
for violation in caught:
    print(" ", violation.describe(kg))

# and a second kind: relabel a real edge as a test negative
bad_split = dataclasses.replace(
    split, test_neg=split.test_neg[:-1] + (split.train_pos[0],)
)
caught = audit_leakage(bad_split, training, kg.all_pairs())
print("after disguising a positive as a negative:")
for violation in caught:
    print(" ", violation.describe(kg))
