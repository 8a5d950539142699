"""Exception types shared across the package."""


class KglpError(Exception):
    """Base class for all kglp errors."""


class AmbiguousPairError(KglpError):
    """An ordered entity pair was asserted under two different relations.

    Raised in strict mode only; lenient graphs record the violation instead.
    """

    def __init__(self, subject, obj, existing_relation, new_relation):
        self.subject = subject
        self.object = obj
        self.existing_relation = existing_relation
        self.new_relation = new_relation
        super().__init__(
            f"pair ({subject}, {obj}) already asserted under "
            f"{existing_relation!r}, cannot add under {new_relation!r}"
        )


class DanglingAnonymousError(KglpError):
    """An anonymous instance node lacks exactly one rdf:type edge."""

    def __init__(self, iri, n_type_edges):
        self.iri = iri
        self.n_type_edges = n_type_edges
        super().__init__(
            f"anonymous node {iri!r} has {n_type_edges} rdf:type edges, expected exactly 1"
        )


class TypeConflictError(KglpError):
    """Entity-type inference produced two different labels for one entity."""


class TooFewEdgesError(KglpError):
    """A relation has fewer edges than the requested fold count."""


class ExhaustedError(KglpError):
    """The type-consistent non-edge pool is smaller than the requested count."""

    def __init__(self, requested, pool_size):
        self.requested = requested
        self.pool_size = pool_size
        super().__init__(
            f"requested {requested} negatives but only {pool_size} "
            f"type-consistent non-edges exist"
        )


class DimensionMismatchError(KglpError):
    """Vector operands have different dimensionalities."""


class EmptyGraphError(KglpError):
    """Training was requested on an empty edge set."""


class NonFiniteLossError(KglpError):
    """Training diverged to a non-finite loss or parameters."""

    def __init__(self, epoch, message="loss became non-finite"):
        self.epoch = epoch
        super().__init__(f"{message} at epoch {epoch}")


class SingleClassError(KglpError):
    """Classifier training data contains only one label value."""


class NoPositivesError(KglpError):
    """F-measure is undefined without at least one positive example."""


class UnknownRelationError(KglpError):
    """A relation name is missing from the baseline table or the graph."""


class ConfigError(KglpError):
    """Invalid pipeline configuration; names the offending field."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


class DataError(KglpError):
    """Malformed input data (bad TSV row, unknown IRI, broken snapshot)."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class LeakageError(KglpError):
    """A split failed the leakage audit."""

    def __init__(self, violations):
        self.violations = list(violations)
        first = self.violations[0] if self.violations else None
        super().__init__(
            f"leakage audit failed with {len(self.violations)} violation(s), "
            f"first: {first}"
        )
