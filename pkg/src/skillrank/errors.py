"""Exception hierarchy. Every documented failure mode maps to exactly one class."""


class SkillRankError(Exception):
    """Base class for all errors raised by this package."""


# --- feature files / datasets ---------------------------------------------

class FeatureFormatError(SkillRankError):
    """A feature file violates the binary format; `offset` is the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class MalformedHeaderError(FeatureFormatError):
    pass


class TruncatedPayloadError(FeatureFormatError):
    """Payload size disagrees with the header (short or trailing bytes)."""


class NonFiniteValueError(FeatureFormatError):
    def __init__(self, message: str, offset: int, row: int, column: int):
        super().__init__(message, offset)
        self.row = row
        self.column = column


class DatasetError(SkillRankError):
    """Manifest or dataset invariant violation (missing file, dim mismatch, ...)."""


# --- annotation pipeline ---------------------------------------------------

class AnnotationProtocolError(SkillRankError):
    """A pair has the wrong number of judgments for the annotation protocol."""


class QcConfigError(SkillRankError):
    """A quality-control pair appears without ground truth."""


class CyclicGraphError(SkillRankError):
    """An operation requiring an acyclic pair graph was given cycles."""

    def __init__(self, message: str, cycles: list):
        super().__init__(message)
        self.cycles = cycles


# --- sampling / scoring ----------------------------------------------------

class SamplingError(SkillRankError):
    pass


class ArchitectureError(SkillRankError):
    pass


class DimensionError(SkillRankError):
    """Shape disagreement between inputs (feature dim, split counts, lengths)."""


# --- training / evaluation -------------------------------------------------

class TrainingError(SkillRankError):
    pass


class DataError(SkillRankError):
    """A referenced video or modality is missing from the dataset."""


class EvaluationError(SkillRankError):
    pass


class OrchestrationError(SkillRankError):
    """Cross-validation fold cannot be run (e.g. empty training pair set)."""


# --- annotation service ----------------------------------------------------

class ServiceError(SkillRankError):
    """HIT construction or submission protocol violation."""
