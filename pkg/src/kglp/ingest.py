"""Streaming parser for an N-Triples subset plus TSV edge-list ingestion.

The triple grammar is deliberately small: three IRI terms and a terminating
dot. Terms are either full IRIs in angle brackets or prefixed names expanded
by pure string concatenation against a prefix map. Literals, blank-node
labels, and language tags are parse errors, not skips. parse_line is total:
it returns an event for every input line and never raises.
"""

import json
import logging
import os
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Union

from .errors import ConfigError, DataError
from .graph import DUPLICATE, INSERTED, KnowledgeGraph, Triple

log = logging.getLogger(__name__)

_WS = " \t"


@dataclass(frozen=True)
class Comment:
    text: str


@dataclass(frozen=True)
class Blank:
    pass


@dataclass(frozen=True)
class Error:
    """A non-raising parse fault; column is 1-based."""

    message: str
    column: int


Payload = Union[Triple, Comment, Blank, Error]


@dataclass(frozen=True)
class ParseEvent:
    line_number: int
    payload: Payload


@dataclass
class ParseSummary:
    lines: int = 0
    triples: int = 0
    comments: int = 0
    blanks: int = 0
    errors: int = 0

    def count(self, event):
        self.lines += 1
        payload = event.payload
        if isinstance(payload, Triple):
            self.triples += 1
        elif isinstance(payload, Comment):
            self.comments += 1
        elif isinstance(payload, Blank):
            self.blanks += 1
        else:
            self.errors += 1


class _Fault(Exception):
    def __init__(self, message, column):
        self.message = message
        self.column = column
        super().__init__(message)


def _skip_ws(line, i):
    while i < len(line) and line[i] in _WS:
        i += 1
    return i


def _scan_iri(line, i):
    # line[i] == '<'
    end = line.find(">", i + 1)
    if end < 0:
        raise _Fault("unterminated IRI", i + 1)
    value = line[i + 1 : end]
    if not value:
        raise _Fault("empty IRI", i + 1)
    for k, ch in enumerate(value):
        if ch in " \t":
            raise _Fault("whitespace inside IRI", i + 2 + k)
    return value, end + 1


def _scan_prefixed(line, i, prefixes):
    j = i
    while j < len(line) and line[j] not in _WS:
        j += 1
    token = line[i:j]
    # A single trailing dot doubles as the statement terminator (local names
    # may contain dots, just not end with one).
    dot_at = None
    if token.endswith(".") and len(token) > 1:
        token = token[:-1]
        dot_at = i + len(token)
    colon = token.find(":")
    if colon < 0:
        raise _Fault("expected an IRI or prefixed name", i + 1)
    label = token[:colon]
    local = token[colon + 1 :]
    if not label:
        raise _Fault("empty prefix label", i + 1)
    if label not in prefixes:
        raise _Fault(f"unknown prefix {label!r}", i + 1)
    if not local:
        raise _Fault("empty local name", i + colon + 2)
    for k, ch in enumerate(local):
        if not (ch.isalnum() or ch in "_-."):
            raise _Fault(
                f"invalid character {ch!r} in local name", i + colon + 2 + k
            )
    if local.endswith("."):
        raise _Fault("local name may not end with '.'", i + colon + 1 + len(local))
    return prefixes[label] + local, j, dot_at


def parse_line(line, prefixes=None, line_number=1):
    """Parse one physical line (no trailing newline) into a ParseEvent."""
    if prefixes is None:
        prefixes = {}
    line = line.rstrip("\r\n")
    try:
        payload = _parse_payload(line, prefixes)
    except _Fault as fault:
        payload = Error(fault.message, fault.column)
    return ParseEvent(line_number, payload)


def _parse_payload(line, prefixes):
    i = _skip_ws(line, 0)
    if i == len(line):
        return Blank()
    if line[i] == "#":
        return Comment(line[i + 1 :])
    terms = []
    dot_col = None
    while True:
        i = _skip_ws(line, i)
        if i == len(line):
            break
        ch = line[i]
        if dot_col is not None:
            raise _Fault("content after terminating '.'", i + 1)
        if ch == ".":
            dot_col = i + 1
            i = _skip_ws(line, i + 1)
            if i < len(line):
                raise _Fault("content after terminating '.'", i + 1)
            break
        if len(terms) == 3:
            raise _Fault("expected '.' after three terms", i + 1)
        if ch == "<":
            value, i = _scan_iri(line, i)
        elif ch == '"' or ch == "'":
            raise _Fault("literals are not supported", i + 1)
        elif line.startswith("_:", i):
            raise _Fault("blank node labels are not supported", i + 1)
        else:
            value, i, dot_at = _scan_prefixed(line, i, prefixes)
            if dot_at is not None:
                dot_col = dot_at + 1
        terms.append(value)
    if dot_col is None:
        raise _Fault("missing final '.'", len(line) + 1)
    if len(terms) != 3:
        raise _Fault(f"expected 3 terms before '.', found {len(terms)}", dot_col)
    return Triple(*terms)


def serialize_triple(triple):
    """Full-IRI one-line form; parse_line(serialize_triple(t)) round-trips."""
    return f"<{triple.subject}> <{triple.predicate}> <{triple.object}> ."


def iter_document(lines: Iterable[str], prefixes=None) -> Iterator[ParseEvent]:
    """Stream ParseEvents over a line source, numbering from 1."""
    if prefixes is None:
        prefixes = {}
    for number, raw in enumerate(lines, start=1):
        yield parse_line(raw, prefixes, line_number=number)


def parse_document(lines, prefixes=None, handler=None) -> ParseSummary:
    """Consume a document, returning counts; handler sees every event."""
    summary = ParseSummary()
    for event in iter_document(lines, prefixes):
        summary.count(event)
        if handler is not None:
            handler(event)
    return summary


@dataclass
class IngestReport:
    inserted: int
    duplicates: int
    summary: ParseSummary
    errors: list  # ParseEvents with Error payloads

    @property
    def ok(self):
        return not self.errors


def ingest_triples(lines, kg: KnowledgeGraph, prefixes=None) -> IngestReport:
    """Feed every parsed triple into the graph; collect parse errors."""
    inserted = 0
    duplicates = 0
    errors = []
    summary = ParseSummary()
    for event in iter_document(lines, prefixes):
        summary.count(event)
        payload = event.payload
        if isinstance(payload, Triple):
            if kg.add_triple(payload) == INSERTED:
                inserted += 1
            else:
                duplicates += 1
        elif isinstance(payload, Error):
            errors.append(event)
    return IngestReport(inserted, duplicates, summary, errors)


def read_tsv_edges(source, kg: KnowledgeGraph) -> int:
    """Read canonical TSV rows (relation, subject, object) into the graph.

    Returns the number of newly inserted edges. Duplicate rows are logged.
    Malformed rows raise DataError with their line number.
    """
    close = False
    if isinstance(source, (str, os.PathLike)):
        fh = open(source, "r", encoding="utf-8")
        close = True
    else:
        fh = source
    inserted = 0
    try:
        for number, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(
                    f"expected 3 tab-separated columns, found {len(parts)}",
                    line_number=number,
                )
            relation, subject, obj = parts
            outcome = kg.add_edge(relation, subject, obj)
            if outcome == DUPLICATE:
                log.warning("duplicate edge row at line %d: %s", number, line)
            else:
                inserted += 1
    finally:
        if close:
            fh.close()
    return inserted


def validate_prefixes(prefixes) -> dict:
    if not isinstance(prefixes, dict):
        raise ConfigError("prefixes", "must be a mapping of label to namespace")
    for label, namespace in prefixes.items():
        if not isinstance(label, str) or not label or ":" in label or " " in label:
            raise ConfigError("prefixes", f"bad prefix label {label!r}")
        if not isinstance(namespace, str) or not namespace:
            raise ConfigError("prefixes", f"empty namespace for prefix {label!r}")
    return dict(prefixes)


def load_prefix_map(path) -> dict:
    """Load { "prefixes": { label: namespace } } from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid prefix JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict) or "prefixes" not in doc:
        raise DataError(f"prefix file {path} must contain a 'prefixes' object")
    return validate_prefixes(doc["prefixes"])


def parse_prefix_flag(value) -> tuple:
    """Split a LABEL=IRI command-line binding."""
    label, sep, namespace = value.partition("=")
    if not sep or not label or not namespace:
        raise ConfigError("prefix", f"expected LABEL=IRI, got {value!r}")
    return label, namespace
