"""Typed knowledge graph core.

Entities and relations are interned into dense integer ids, assigned in
first-seen order and stable for the life of the graph. Edges are per-relation
sets of ordered (subject_id, object_id) pairs. The graph tracks the
flattening-safety invariant: once relation labels are dropped, an ordered
entity pair must identify at most one relation, otherwise label-free pair
classification is ambiguous. Strict graphs reject violating insertions;
lenient graphs accept them and leave detection to verify_flattening_safety.

rdf:type assertions are stored as ordinary edges of the configured type
relation. collapse_anonymous_instances uses them to rewrite reified
assertions (s, r, b) + (b, rdf:type, c) into direct edges (s, r, c).
"""

import re
import struct
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .errors import (
    AmbiguousPairError,
    DanglingAnonymousError,
    DataError,
    TypeConflictError,
)

RDF_TYPE_IRI = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

# Anonymous instance nodes are recognized by IRI convention: a local name of
# the form instance_<digits> at the end of the IRI.
DEFAULT_ANONYMOUS_PATTERN = r"instance_\d+$"

_SNAPSHOT_MAGIC = b"KGSN"
_SNAPSHOT_VERSION = 1

INSERTED = "inserted"
DUPLICATE = "duplicate"

_BAD_IRI_CHARS = (" ", "\t", "\r", "\n")


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str


class Edge(NamedTuple):
    """One row of the canonical TSV edge dump."""

    relation: str
    subject: str
    object: str


@dataclass(frozen=True)
class RelationSchema:
    relation: str
    domain_type: str
    range_type: str


@dataclass(frozen=True)
class RelationStats:
    relation: str
    n_edges: int
    n_subjects: int
    n_objects: int
    domain_type: Optional[str]
    range_type: Optional[str]


def _check_iri(value, what="IRI"):
    if not isinstance(value, str) or not value:
        raise DataError(f"empty or non-string {what}: {value!r}")
    for ch in _BAD_IRI_CHARS:
        if ch in value:
            raise DataError(f"{what} contains whitespace: {value!r}")
    return value


class KnowledgeGraph:
    """In-memory typed multigraph over interned IRIs."""

    def __init__(self, strict=True, rdf_type_iri=RDF_TYPE_IRI):
        self.strict = bool(strict)
        self.rdf_type_iri = rdf_type_iri
        self._entity_ids = {}  # iri -> id
        self._entity_iris = []  # id -> iri
        self._relation_ids = {}  # iri -> id
        self._relation_iris = []  # id -> iri
        self._edge_sets = []  # rel id -> set of (u, v)
        # First relation to assert each ordered pair; used for the strict
        # ambiguity check and for full-graph negative rejection.
        self._pair_owner = {}  # (u, v) -> rel id
        self._entity_type = {}  # entity id -> type label
        self._schemas = {}  # rel id -> RelationSchema
        self._frozen = False

    # -- dictionaries -------------------------------------------------

    @property
    def n_entities(self):
        return len(self._entity_iris)

    @property
    def n_relations(self):
        return len(self._relation_iris)

    def entity_id(self, iri, register=False):
        eid = self._entity_ids.get(iri)
        if eid is None:
            if not register:
                raise KeyError(f"unknown entity {iri!r}")
            _check_iri(iri, "entity IRI")
            eid = len(self._entity_iris)
            self._entity_ids[iri] = eid
            self._entity_iris.append(iri)
        return eid

    def entity_iri(self, eid):
        return self._entity_iris[eid]

    def has_entity(self, iri):
        return iri in self._entity_ids

    def entities(self):
        """Entity IRIs in id order."""
        return tuple(self._entity_iris)

    def relation_id(self, iri, register=False):
        rid = self._relation_ids.get(iri)
        if rid is None:
            if not register:
                raise KeyError(f"unknown relation {iri!r}")
            _check_iri(iri, "relation IRI")
            rid = len(self._relation_iris)
            self._relation_ids[iri] = rid
            self._relation_iris.append(iri)
            self._edge_sets.append(set())
        return rid

    def relation_iri(self, rid):
        return self._relation_iris[rid]

    def has_relation(self, iri):
        return iri in self._relation_ids

    def relations(self):
        """Relation IRIs in id order."""
        return tuple(self._relation_iris)

    # -- construction -------------------------------------------------

    def freeze(self):
        """Disallow further mutation; queries stay available."""
        self._frozen = True
        return self

    def add_triple(self, triple):
        """Insert one triple; returns 'inserted' or 'duplicate'.

        Raises AmbiguousPairError in strict mode when the ordered
        (subject, object) pair is already asserted under another relation.
        """
        return self.add_edge(triple.predicate, triple.subject, triple.object)

    def add_edge(self, relation, subject, obj):
        if self._frozen:
            raise DataError("graph is frozen")
        rid = self.relation_id(relation, register=True)
        u = self.entity_id(subject, register=True)
        v = self.entity_id(obj, register=True)
        pair = (u, v)
        if pair in self._edge_sets[rid]:
            return DUPLICATE
        owner = self._pair_owner.get(pair)
        if owner is None:
            self._pair_owner[pair] = rid
        elif owner != rid and self.strict:
            raise AmbiguousPairError(
                subject, obj, self._relation_iris[owner], relation
            )
        self._edge_sets[rid].add(pair)
        return INSERTED

    def set_entity_type(self, iri, label):
        eid = self.entity_id(iri, register=True)
        current = self._entity_type.get(eid)
        if current is not None and current != label:
            raise TypeConflictError(
                f"entity {iri!r} typed both {current!r} and {label!r}"
            )
        self._entity_type[eid] = label

    def entity_type(self, iri):
        eid = self._entity_ids.get(iri)
        if eid is None:
            return None
        return self._entity_type.get(eid)

    def entity_type_by_id(self, eid):
        return self._entity_type.get(eid)

    def declare_schema(self, relation, domain_type, range_type):
        """Register a (domain, range) typing for a relation.

        No two relations may share a (domain_type, range_type) pair; that
        property is what makes dropping arc labels safe.
        """
        rid = self.relation_id(relation, register=True)
        schema = RelationSchema(relation, domain_type, range_type)
        existing = self._schemas.get(rid)
        if existing is not None:
            if existing != schema:
                raise TypeConflictError(
                    f"relation {relation!r} already declared as "
                    f"({existing.domain_type!r}, {existing.range_type!r})"
                )
            return schema
        for other in self._schemas.values():
            if (other.domain_type, other.range_type) == (domain_type, range_type):
                raise TypeConflictError(
                    f"relations {other.relation!r} and {relation!r} share the "
                    f"(domain, range) pair ({domain_type!r}, {range_type!r})"
                )
        self._schemas[rid] = schema
        return schema

    def schema(self, relation):
        rid = self._relation_ids.get(relation)
        if rid is None:
            return None
        return self._schemas.get(rid)

    def schemas(self):
        return tuple(self._schemas[rid] for rid in sorted(self._schemas))

    def infer_types_from_schemas(self):
        """Assign entity types from declared relation schemas.

        Subjects of a relation get its domain type, objects its range type.
        Conflicting assignments raise TypeConflictError.
        """
        for rid, schema in sorted(self._schemas.items()):
            for u, v in self._edge_sets[rid]:
                for eid, label in ((u, schema.domain_type), (v, schema.range_type)):
                    current = self._entity_type.get(eid)
                    if current is None:
                        self._entity_type[eid] = label
                    elif current != label:
                        raise TypeConflictError(
                            f"entity {self._entity_iris[eid]!r} typed both "
                            f"{current!r} and {label!r}"
                        )

    def entities_of_type(self, label):
        """Sorted ids of entities carrying the given type label."""
        return tuple(
            sorted(eid for eid, t in self._entity_type.items() if t == label)
        )

    # -- queries ------------------------------------------------------

    def edges(self, relation):
        """The (subject_id, object_id) pair set of one relation. Read-only."""
        rid = self.relation_id(relation)
        return self._edge_sets[rid]

    def edge_count(self, relation):
        return len(self._edge_sets[self.relation_id(relation)])

    def pair_exists(self, u, v):
        """True if the ordered id pair is an edge under any relation."""
        pair = (u, v)
        if pair in self._pair_owner:
            # Owner map covers the first asserting relation; in lenient mode a
            # pair may live in several sets, but presence here is sufficient.
            return True
        # In lenient mode a pair removed from the owner map never happens
        # (owner map is insert-only), so this lookup alone is exact.
        return False

    def all_pairs(self):
        """View of every ordered edge pair across relations (ids)."""
        return self._pair_owner.keys()

    def subjects(self, relation):
        rid = self.relation_id(relation)
        return tuple(sorted({u for u, _ in self._edge_sets[rid]}))

    def objects(self, relation):
        rid = self.relation_id(relation)
        return tuple(sorted({v for _, v in self._edge_sets[rid]}))

    def relation_counts(self):
        """Map relation IRI -> edge count, in id order."""
        return {
            iri: len(self._edge_sets[rid])
            for rid, iri in enumerate(self._relation_iris)
        }

    def describe_relation(self, relation):
        rid = self.relation_id(relation)
        edges = self._edge_sets[rid]
        schema = self._schemas.get(rid)
        return RelationStats(
            relation=relation,
            n_edges=len(edges),
            n_subjects=len({u for u, _ in edges}),
            n_objects=len({v for _, v in edges}),
            domain_type=schema.domain_type if schema else None,
            range_type=schema.range_type if schema else None,
        )

    def verify_flattening_safety(self):
        """List ordered pairs asserted under more than one relation.

        Empty result means arc labels can be dropped without collapsing two
        distinct assertions onto one pair. Each violation is
        (subject_iri, sorted tuple of relation IRIs, object_iri).
        """
        seen = {}
        for rid, edge_set in enumerate(self._edge_sets):
            for pair in edge_set:
                seen.setdefault(pair, []).append(rid)
        violations = []
        for (u, v), rids in seen.items():
            if len(rids) > 1:
                violations.append(
                    (
                        self._entity_iris[u],
                        tuple(sorted(self._relation_iris[r] for r in rids)),
                        self._entity_iris[v],
                    )
                )
        violations.sort(key=lambda item: (item[0], item[2]))
        return violations

    # -- reification collapse -----------------------------------------

    def collapse_anonymous_instances(self, pattern=None, structural=False):
        """Rewrite reified assertions to direct edges; returns a new graph.

        A node b matching the anonymous pattern participating in
        (s, r, b) + (b, rdf:type, c) is replaced by c in all non-type edges,
        and its rdf:type edge is dropped. Chains of anonymous nodes resolve
        transitively. Every anonymous node must carry exactly one rdf:type
        edge, otherwise DanglingAnonymousError.

        With structural=True, anonymity is detected by shape instead of IRI:
        a node that appears exactly once as a non-type object, exactly once
        as an rdf:type subject, and nowhere else.
        """
        regex = re.compile(pattern if pattern is not None else DEFAULT_ANONYMOUS_PATTERN)
        type_rid = self._relation_ids.get(self.rdf_type_iri)

        type_objects = {}  # anon candidate id -> list of type-edge objects
        if type_rid is not None:
            for u, v in self._edge_sets[type_rid]:
                type_objects.setdefault(u, []).append(v)

        if structural:
            anon = self._structurally_anonymous(type_rid)
        else:
            anon = {
                eid
                for eid, iri in enumerate(self._entity_iris)
                if regex.search(iri)
            }

        resolved = {}

        def resolve(eid):
            if eid in resolved:
                return resolved[eid]
            chain = []
            cur = eid
            seen = set()
            while cur in anon:
                if cur in seen:
                    raise DataError(
                        "cycle of anonymous instances at "
                        f"{self._entity_iris[eid]!r}"
                    )
                seen.add(cur)
                chain.append(cur)
                targets = type_objects.get(cur, [])
                if len(targets) != 1:
                    raise DanglingAnonymousError(
                        self._entity_iris[cur], len(targets)
                    )
                cur = targets[0]
            for node in chain:
                resolved[node] = cur
            return cur

        out = KnowledgeGraph(strict=self.strict, rdf_type_iri=self.rdf_type_iri)
        for rid, rel_iri in enumerate(self._relation_iris):
            # id-sorted iteration keeps new-graph id assignment deterministic
            for u, v in sorted(self._edge_sets[rid]):
                if rid == type_rid and u in anon:
                    continue  # the reification typing edge itself
                nu = resolve(u) if u in anon else u
                nv = resolve(v) if v in anon else v
                out.add_edge(
                    rel_iri, self._entity_iris[nu], self._entity_iris[nv]
                )

        for rid, schema in sorted(self._schemas.items()):
            out.declare_schema(schema.relation, schema.domain_type, schema.range_type)
        for eid, label in sorted(self._entity_type.items()):
            if eid in anon:
                continue
            iri = self._entity_iris[eid]
            if out.has_entity(iri):
                out.set_entity_type(iri, label)
        return out

    def _structurally_anonymous(self, type_rid):
        as_type_subject = {}
        as_type_object = set()
        as_plain_subject = set()
        as_plain_object = {}
        for rid, edge_set in enumerate(self._edge_sets):
            if rid == type_rid:
                for u, v in edge_set:
                    as_type_subject[u] = as_type_subject.get(u, 0) + 1
                    as_type_object.add(v)
            else:
                for u, v in edge_set:
                    as_plain_subject.add(u)
                    as_plain_object[v] = as_plain_object.get(v, 0) + 1
        return {
            eid
            for eid in range(len(self._entity_iris))
            if as_type_subject.get(eid, 0) == 1
            and as_plain_object.get(eid, 0) == 1
            and eid not in as_plain_subject
            and eid not in as_type_object
        }

    # -- serialization ------------------------------------------------

    def iter_edge_rows(self):
        """Edge rows as IRI triples, sorted by (relation, subject, object)."""
        rows = []
        for rid, rel_iri in enumerate(self._relation_iris):
            for u, v in self._edge_sets[rid]:
                rows.append(Edge(rel_iri, self._entity_iris[u], self._entity_iris[v]))
        rows.sort()
        return rows

    def to_tsv(self, path):
        """Canonical TSV dump: relation, subject, object; UTF-8, LF, sorted."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for row in self.iter_edge_rows():
                fh.write(f"{row.relation}\t{row.subject}\t{row.object}\n")

    def save_snapshot(self, path):
        """Binary snapshot.

        Layout (all integers little-endian):
          magic   4 bytes  b'KGSN'
          version u32      1
          flags   u8       bit 0 = strict
          then length-prefixed UTF-8 strings (u32 byte length + bytes):
          rdf_type IRI; u32 entity count + entities in id order; u32 relation
          count + relations in id order; per relation a u64 edge count and
          that many (u32 subject id, u32 object id) pairs in sorted order;
          u32 typed-entity count + (u32 id, string label) pairs; u32 schema
          count + (u32 relation id, string domain, string range) triples.
        """
        def put_str(fh, s):
            raw = s.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)

        with open(path, "wb") as fh:
            fh.write(_SNAPSHOT_MAGIC)
            fh.write(struct.pack("<IB", _SNAPSHOT_VERSION, 1 if self.strict else 0))
            put_str(fh, self.rdf_type_iri)
            fh.write(struct.pack("<I", len(self._entity_iris)))
            for iri in self._entity_iris:
                put_str(fh, iri)
            fh.write(struct.pack("<I", len(self._relation_iris)))
            for iri in self._relation_iris:
                put_str(fh, iri)
            for edge_set in self._edge_sets:
                fh.write(struct.pack("<Q", len(edge_set)))
                for u, v in sorted(edge_set):
                    fh.write(struct.pack("<II", u, v))
            fh.write(struct.pack("<I", len(self._entity_type)))
            for eid in sorted(self._entity_type):
                fh.write(struct.pack("<I", eid))
                put_str(fh, self._entity_type[eid])
            fh.write(struct.pack("<I", len(self._schemas)))
            for rid in sorted(self._schemas):
                schema = self._schemas[rid]
                fh.write(struct.pack("<I", rid))
                put_str(fh, schema.domain_type)
                put_str(fh, schema.range_type)

    @classmethod
    def load_snapshot(cls, path):
        def get_str(fh):
            (n,) = struct.unpack("<I", _read_exact(fh, 4))
            return _read_exact(fh, n).decode("utf-8")

        with open(path, "rb") as fh:
            magic = _read_exact(fh, 4)
            if magic != _SNAPSHOT_MAGIC:
                raise DataError(f"bad snapshot magic {magic!r}")
            version, flags = struct.unpack("<IB", _read_exact(fh, 5))
            if version != _SNAPSHOT_VERSION:
                raise DataError(f"unsupported snapshot version {version}")
            rdf_type = get_str(fh)
            kg = cls(strict=bool(flags & 1), rdf_type_iri=rdf_type)
            (n_ent,) = struct.unpack("<I", _read_exact(fh, 4))
            for _ in range(n_ent):
                kg.entity_id(get_str(fh), register=True)
            (n_rel,) = struct.unpack("<I", _read_exact(fh, 4))
            for _ in range(n_rel):
                kg.relation_id(get_str(fh), register=True)
            for rid in range(n_rel):
                (count,) = struct.unpack("<Q", _read_exact(fh, 8))
                rel_iri = kg._relation_iris[rid]
                for _ in range(count):
                    u, v = struct.unpack("<II", _read_exact(fh, 8))
                    kg.add_edge(rel_iri, kg._entity_iris[u], kg._entity_iris[v])
            (n_typed,) = struct.unpack("<I", _read_exact(fh, 4))
            for _ in range(n_typed):
                (eid,) = struct.unpack("<I", _read_exact(fh, 4))
                kg.set_entity_type(kg._entity_iris[eid], get_str(fh))
            (n_schema,) = struct.unpack("<I", _read_exact(fh, 4))
            for _ in range(n_schema):
                (rid,) = struct.unpack("<I", _read_exact(fh, 4))
                kg.declare_schema(kg._relation_iris[rid], get_str(fh), get_str(fh))
        return kg


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise DataError("truncated snapshot")
    return data


# Module-level forms of the core operations.

def add_triple(kg, triple):
    return kg.add_triple(triple)


def collapse_anonymous_instances(kg, pattern=None, structural=False):
    return kg.collapse_anonymous_instances(pattern=pattern, structural=structural)


def relation_stats(kg):
    """Map relation name -> exact edge count."""
    return kg.relation_counts()


def verify_flattening_safety(kg):
    return kg.verify_flattening_safety()


def graph_from_edges(edge_rows: Iterable, strict=True, rdf_type_iri=RDF_TYPE_IRI):
    """Build a graph from (relation, subject, object) string rows."""
    kg = KnowledgeGraph(strict=strict, rdf_type_iri=rdf_type_iri)
    for relation, subject, obj in edge_rows:
        kg.add_edge(relation, subject, obj)
    return kg
