"""
Parsing triple lines and prefixed names
=======================================

The ingest parser works line by line: each line is a triple, a comment,
a blank, or an error that names the line and the column of the first
offending character. Prefixed names like go:instance_2 expand against a
prefix map before the triple is stored.
"""

from kglp import parse_line
from kglp.graph import Triple
from kglp.ingest import Error, iter_document

prefixes = {
    "gene": "http://example.org/gene/",
    "go": "http://example.org/go/",
    "obo": "http://purl.obolibrary.org/obo/",
}

document = """\
# gene annotations, strict OWL rendering
<http://example.org/gene/10155> <http://purl.obolibrary.org/obo/RO_0000085> go:instance_2.

gene:2099 obo:RO_0000085 go:instance_7 .
gene:7018 obo:RO_0000085 "a literal" .
gene:7018 obo:RO_0000085 <http://example.org/go/instance_9
"""

for event in iter_document(document.splitlines(), prefixes=prefixes):
    payload = event.payload
    if isinstance(payload, Triple):
        print(f"line {event.line_number}: triple  {payload.subject} -> {payload.object}")
    elif isinstance(payload, Error):
        print(
            f"line {event.line_number}: error at column {payload.column}: {payload.message}"
        )
    else:
        print(f"line {event.line_number}: {type(payload).__name__.lower()}")

# a terminating dot attached to the last term is still a terminator,
# but a dot inside a local name is part of the name
event = parse_line("gene:1.5 obo:RO_0000085 go:instance_2.", prefixes=prefixes)
print("\nsubject with interior dot:", event.payload.subject)
print("object (attached dot consumed):", event.payload.object)
