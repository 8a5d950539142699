"""Synthetic graph generators for tests, demos, and the bundled fixture.

Each generator is a pure function of its arguments and seed. The latent
factor construction mirrors how link structure is usually modeled: entities
get nonnegative rank-r factors, pair scores are factor dot products, and the
top-scoring slice of the grid becomes the positive edge set, so a dot
product embedding plus a linear classifier can recover it.
"""

import numpy as np

from .graph import RDF_TYPE_IRI, KnowledgeGraph
from .rng import STAGE_SYNTH, generator

NS = "http://example.org/"


def latent_factor_graph(
    n_subjects=200,
    n_objects=200,
    rank=5,
    density=0.05,
    seed=0,
    exact_count=None,
    relation=NS + "rel/links-to",
    domain_type="subject-kind",
    range_type="object-kind",
):
    """Bipartite one-relation graph whose edges are the top factor scores.

    Gamma(2, 1) factors keep scores nonnegative and give a popularity skew,
    which is the regime where dot-product embeddings separate well. With
    exact_count the highest-scoring pairs are taken directly (deterministic
    tie handling), otherwise the (1 - density) quantile thresholds the grid.
    """
    rng = generator(seed, STAGE_SYNTH)
    U = rng.gamma(2.0, 1.0, size=(n_subjects, rank))
    V = rng.gamma(2.0, 1.0, size=(n_objects, rank))
    scores = U @ V.T

    kg = KnowledgeGraph()
    kg.declare_schema(relation, domain_type, range_type)
    subjects = [f"{NS}ent/s{i}" for i in range(n_subjects)]
    objects = [f"{NS}ent/o{j}" for j in range(n_objects)]
    for iri in subjects:
        kg.set_entity_type(iri, domain_type)
    for iri in objects:
        kg.set_entity_type(iri, range_type)

    if exact_count is not None:
        flat = np.argsort(-scores, axis=None, kind="stable")[:exact_count]
        picked = [(int(f) // n_objects, int(f) % n_objects) for f in flat]
    else:
        cut = np.quantile(scores, 1.0 - density)
        ii, jj = np.nonzero(scores > cut)
        picked = list(zip(ii.tolist(), jj.tolist()))
    for i, j in picked:
        kg.add_edge(relation, subjects[i], objects[j])
    return kg


def asymmetric_rank_graph(
    n=150,
    threshold=0.5,
    seed=0,
    relation=NS + "rel/outranks",
    node_type="node",
):
    """Strictly one-directional relation over a single entity pool.

    Every entity gets a latent position x ~ Beta(0.4, 0.4) (bimodal, so few
    pairs sit near the decision boundary) and (i, j) is an edge iff
    x_j - x_i > threshold. The relation is antisymmetric by construction:
    no reversed pair is ever an edge, which is what a direction-preserving
    featurization has to get right.
    """
    rng = generator(seed, STAGE_SYNTH)
    x = rng.beta(0.4, 0.4, size=n)
    kg = KnowledgeGraph()
    kg.declare_schema(relation, node_type, node_type)
    nodes = [f"{NS}ent/n{i}" for i in range(n)]
    for iri in nodes:
        kg.set_entity_type(iri, node_type)
    for i in range(n):
        for j in range(n):
            if x[j] - x[i] > threshold:
                kg.add_edge(relation, nodes[i], nodes[j])
    return kg


def reified_graph(
    n_assertions=1000,
    n_relations=3,
    n_subjects=None,
    direct_fraction=0.1,
    seed=0,
    anon_namespace=NS + "anon/",
):
    """Unflattened graph where most assertions go through anonymous nodes.

    Assertion i of relation r becomes (s, r, instance_i) plus
    (instance_i, rdf:type, class_i); classes are unique per assertion so the
    collapsed graph has exactly one direct edge per assertion and per-relation
    counts are conserved. A slice of plain direct edges is mixed in to check
    that the rewrite leaves them alone.
    """
    rng = generator(seed, STAGE_SYNTH)
    if n_subjects is None:
        n_subjects = max(2, n_assertions // 5)
    relations = [f"{NS}rel/r{t}" for t in range(n_relations)]
    kg = KnowledgeGraph()
    n_direct = int(n_assertions * direct_fraction)
    for i in range(n_assertions):
        s = f"{NS}ent/s{int(rng.integers(0, n_subjects))}"
        r = relations[int(rng.integers(0, n_relations))]
        if i < n_direct:
            kg.add_edge(r, s, f"{NS}cls/direct_{i}")
        else:
            anon = f"{anon_namespace}instance_{i}"
            kg.add_edge(r, s, anon)
            kg.add_edge(RDF_TYPE_IRI, anon, f"{NS}cls/class_{i}")
    return kg


def random_graph(
    n_entities=1000,
    n_edges=5000,
    n_relations=2,
    seed=0,
):
    """Uniform random digraph with distinct pairs and no self loops.

    Pairs are globally unique so the graph satisfies flattening safety in
    strict mode; relations are assigned uniformly.
    """
    if n_edges > n_entities * (n_entities - 1):
        raise ValueError("more edges requested than distinct ordered pairs")
    rng = generator(seed, STAGE_SYNTH)
    relations = [f"{NS}rel/r{t}" for t in range(n_relations)]
    nodes = [f"{NS}ent/e{i}" for i in range(n_entities)]
    seen = set()
    kg = KnowledgeGraph()
    while len(seen) < n_edges:
        need = n_edges - len(seen)
        us = rng.integers(0, n_entities, size=2 * need + 16)
        vs = rng.integers(0, n_entities, size=2 * need + 16)
        rs = rng.integers(0, n_relations, size=2 * need + 16)
        for u, v, r in zip(us, vs, rs):
            if u == v:
                continue
            pair = (int(u), int(v))
            if pair in seen:
                continue
            seen.add(pair)
            kg.add_edge(relations[int(r)], nodes[pair[0]], nodes[pair[1]])
            if len(seen) == n_edges:
                break
    return kg
