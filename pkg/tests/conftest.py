import sys

import pytest

from kglp.graph import KnowledgeGraph, Triple


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines, which capture would otherwise hide."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
EX = "http://example.org/"
REL = EX + "rel/links-to"


@pytest.fixture
def toy_kg():
    """Two subjects {a, b}, two objects {x, y}, one positive edge (a, x).

    The candidate negative grid has exactly three free cells:
    (a, y), (b, x), (b, y).
    """
    kg = KnowledgeGraph()
    kg.add_triple(Triple(EX + "a", REL, EX + "x"))
    for iri, type_label in [
        (EX + "a", "subject-kind"),
        (EX + "b", "subject-kind"),
        (EX + "x", "object-kind"),
        (EX + "y", "object-kind"),
    ]:
        kg.set_entity_type(iri, type_label)
    kg.declare_schema(REL, "subject-kind", "object-kind")
    return kg


@pytest.fixture(scope="session")
def fixture_path():
    from importlib.resources import files

    return str(files("kglp.data").joinpath("fixture_200.tsv"))


@pytest.fixture
def fixture_kg(fixture_path):
    from kglp.ingest import read_tsv_edges

    kg = KnowledgeGraph()
    read_tsv_edges(fixture_path, kg)
    kg.freeze()
    return kg


@pytest.fixture
def reified_pair_kg():
    """One reified assertion plus its typing edge."""
    kg = KnowledgeGraph()
    kg.add_triple(
        Triple(
            "http://example.org/gene/10155",
            "http://purl.obolibrary.org/obo/RO_0000085",
            "http://example.org/go/instance_106358",
        )
    )
    kg.add_triple(
        Triple(
            "http://example.org/go/instance_106358",
            RDF_TYPE,
            "http://purl.obolibrary.org/obo/GO_0000122",
        )
    )
    return kg
