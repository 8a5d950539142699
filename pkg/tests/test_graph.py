import pytest

from kglp.errors import (
    AmbiguousPairError,
    DanglingAnonymousError,
    DataError,
    TypeConflictError,
)
from kglp.graph import (
    DUPLICATE,
    INSERTED,
    RDF_TYPE_IRI,
    KnowledgeGraph,
    Triple,
    add_triple,
    collapse_anonymous_instances,
    relation_stats,
    verify_flattening_safety,
)
from kglp.synth import reified_graph

EX = "http://example.org/"


def t(s, p, o):
    return Triple(EX + s, EX + p, EX + o)


def test_add_triple_inserts():
    kg = KnowledgeGraph()
    assert add_triple(kg, t("gene/10155", "has-function", "go/122")) == INSERTED
    assert relation_stats(kg) == {EX + "has-function": 1}


def test_add_triple_duplicate_keeps_count():
    kg = KnowledgeGraph()
    triple = t("a", "r", "b")
    assert add_triple(kg, triple) == INSERTED
    assert add_triple(kg, triple) == DUPLICATE
    assert relation_stats(kg) == {EX + "r": 1}


def test_strict_mode_rejects_ambiguous_pair():
    kg = KnowledgeGraph(strict=True)
    add_triple(kg, t("a", "r1", "b"))
    with pytest.raises(AmbiguousPairError) as err:
        add_triple(kg, t("a", "r2", "b"))
    assert EX + "r1" in str(err.value)
    assert EX + "r2" in str(err.value)


def test_lenient_mode_defers_to_verifier():
    kg = KnowledgeGraph(strict=False)
    add_triple(kg, t("a", "r1", "b"))
    add_triple(kg, t("a", "r2", "b"))
    violations = verify_flattening_safety(kg)
    assert violations == [(EX + "a", (EX + "r1", EX + "r2"), EX + "b")]


def test_verifier_clean_on_safe_graph():
    kg = KnowledgeGraph(strict=False)
    add_triple(kg, t("a", "r1", "b"))
    add_triple(kg, t("b", "r2", "a"))  # reversed order is a different pair
    assert verify_flattening_safety(kg) == []


def test_entity_ids_first_seen_order():
    kg = KnowledgeGraph()
    add_triple(kg, t("s1", "r", "o1"))
    add_triple(kg, t("s2", "r", "o1"))
    assert kg.entity_id(EX + "s1") == 0
    assert kg.entity_id(EX + "o1") == 1
    assert kg.entity_id(EX + "s2") == 2
    # ids are stable under further inserts
    add_triple(kg, t("s1", "r", "o2"))
    assert kg.entity_id(EX + "s1") == 0


def test_relation_stats_empty_graph():
    assert relation_stats(KnowledgeGraph()) == {}


def test_collapse_reified_pair_example(reified_pair_kg):
    flat = collapse_anonymous_instances(reified_pair_kg)
    assert relation_stats(flat) == {"http://purl.obolibrary.org/obo/RO_0000085": 1}
    pairs = flat.edges("http://purl.obolibrary.org/obo/RO_0000085")
    (pair,) = pairs
    assert flat.entity_iri(pair[0]) == "http://example.org/gene/10155"
    assert flat.entity_iri(pair[1]) == "http://purl.obolibrary.org/obo/GO_0000122"
    # the anonymous node is gone from the dictionary
    assert not flat.has_entity("http://example.org/go/instance_106358")


def test_collapse_without_matches_is_identity():
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "b"))
    add_triple(kg, t("b", "r", "c"))
    flat = collapse_anonymous_instances(kg)
    assert relation_stats(flat) == relation_stats(kg)
    assert sorted(flat.iter_edge_rows()) == sorted(kg.iter_edge_rows())


def test_collapse_requires_exactly_one_type_edge():
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "anon/instance_1"))
    with pytest.raises(DanglingAnonymousError) as err:
        collapse_anonymous_instances(kg)
    assert "instance_1" in str(err.value)

    kg2 = KnowledgeGraph()
    add_triple(kg2, t("a", "r", "anon/instance_2"))
    kg2.add_triple(Triple(EX + "anon/instance_2", RDF_TYPE_IRI, EX + "c1"))
    kg2.add_triple(Triple(EX + "anon/instance_2", RDF_TYPE_IRI, EX + "c2"))
    with pytest.raises(DanglingAnonymousError):
        collapse_anonymous_instances(kg2)


def test_collapse_resolves_chains():
    # anonymous node typed by another anonymous node
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "anon/instance_1"))
    kg.add_triple(Triple(EX + "anon/instance_1", RDF_TYPE_IRI, EX + "anon/instance_2"))
    kg.add_triple(Triple(EX + "anon/instance_2", RDF_TYPE_IRI, EX + "classes/C"))
    flat = collapse_anonymous_instances(kg)
    (pair,) = flat.edges(EX + "r")
    assert flat.entity_iri(pair[1]) == EX + "classes/C"


def test_collapse_cycle_is_a_data_error():
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "anon/instance_1"))
    kg.add_triple(Triple(EX + "anon/instance_1", RDF_TYPE_IRI, EX + "anon/instance_2"))
    kg.add_triple(Triple(EX + "anon/instance_2", RDF_TYPE_IRI, EX + "anon/instance_1"))
    with pytest.raises(DataError):
        collapse_anonymous_instances(kg)


def test_collapse_conservation_on_synthetic_reified_graph():
    kg = reified_graph(n_assertions=1000, n_relations=3, seed=3)
    # each reified assertion and each direct edge becomes exactly one edge
    before = {
        rel: kg.edge_count(rel) for rel in kg.relations() if rel != RDF_TYPE_IRI
    }
    flat = kg.collapse_anonymous_instances()
    for rel, expected in before.items():
        assert flat.edge_count(rel) == expected, rel
    for rel in flat.relations():
        for u, v in flat.edges(rel):
            assert "anon/instance_" not in flat.entity_iri(u)
            assert "anon/instance_" not in flat.entity_iri(v)


def test_collapse_idempotent():
    kg = reified_graph(n_assertions=200, n_relations=2, seed=5)
    once = kg.collapse_anonymous_instances()
    twice = once.collapse_anonymous_instances()
    assert sorted(once.iter_edge_rows()) == sorted(twice.iter_edge_rows())


def test_collapse_structural_fallback():
    # anonymous node that does NOT match the name pattern
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "blank/b0"))
    kg.add_triple(Triple(EX + "blank/b0", RDF_TYPE_IRI, EX + "classes/C"))
    unchanged = collapse_anonymous_instances(kg)
    assert unchanged.edge_count(EX + "r") == 1
    assert unchanged.has_entity(EX + "blank/b0")

    flat = kg.collapse_anonymous_instances(structural=True)
    (pair,) = flat.edges(EX + "r")
    assert flat.entity_iri(pair[1]) == EX + "classes/C"
    assert not flat.has_entity(EX + "blank/b0")


def test_structural_fallback_spares_reused_nodes():
    # a node that is an object twice is not structurally anonymous
    kg = KnowledgeGraph()
    add_triple(kg, t("a", "r", "shared"))
    add_triple(kg, t("b", "r", "shared"))
    kg.add_triple(Triple(EX + "shared", RDF_TYPE_IRI, EX + "classes/C"))
    flat = kg.collapse_anonymous_instances(structural=True)
    assert flat.has_entity(EX + "shared")
    assert flat.edge_count(EX + "r") == 2


def test_entity_type_conflict():
    kg = KnowledgeGraph()
    kg.set_entity_type(EX + "a", "gene")
    kg.set_entity_type(EX + "a", "gene")  # same label is fine
    with pytest.raises(TypeConflictError):
        kg.set_entity_type(EX + "a", "drug")


def test_schema_rejects_shared_domain_range():
    kg = KnowledgeGraph()
    kg.declare_schema(EX + "r1", "gene", "disease")
    with pytest.raises(TypeConflictError):
        kg.declare_schema(EX + "r2", "gene", "disease")


def test_entities_of_type_sorted():
    kg = KnowledgeGraph()
    for name in ["c", "a", "b"]:
        kg.set_entity_type(EX + name, "thing")
    ids = kg.entities_of_type("thing")
    assert list(ids) == sorted(ids)
    assert len(ids) == 3


def test_snapshot_roundtrip(tmp_path, reified_pair_kg):
    path = tmp_path / "kg.bin"
    reified_pair_kg.save_snapshot(path)
    loaded = KnowledgeGraph.load_snapshot(path)
    assert sorted(loaded.iter_edge_rows()) == sorted(reified_pair_kg.iter_edge_rows())
    assert [loaded.entity_iri(i) for i in range(loaded.n_entities)] == [
        reified_pair_kg.entity_iri(i) for i in range(reified_pair_kg.n_entities)
    ]


def test_tsv_roundtrip(tmp_path):
    from kglp.ingest import read_tsv_edges

    kg = KnowledgeGraph()
    add_triple(kg, t("s1", "r1", "o1"))
    add_triple(kg, t("s2", "r2", "o2"))
    path = tmp_path / "edges.tsv"
    kg.to_tsv(path)
    loaded = KnowledgeGraph()
    read_tsv_edges(path, loaded)
    assert sorted(loaded.iter_edge_rows()) == sorted(kg.iter_edge_rows())


def test_frozen_graph_rejects_new_edges(toy_kg):
    toy_kg.freeze()
    with pytest.raises(DataError):
        add_triple(toy_kg, t("new", "r", "edge"))


def test_pair_exists_and_all_pairs(toy_kg):
    a = toy_kg.entity_id("http://example.org/a")
    x = toy_kg.entity_id("http://example.org/x")
    assert toy_kg.pair_exists(a, x)
    assert (a, x) in toy_kg.all_pairs()
    assert len(toy_kg.all_pairs()) == 1
