"""Exception hierarchy shared across the package.

Every error raised by library code derives from EqsimError so callers
(and the CLI exit-code mapping) can distinguish our failures from bugs.
"""


class EqsimError(Exception):
    """Base class for all eqsim errors."""


class DimensionMismatchError(EqsimError):
    """Vector or matrix dimensions do not line up."""


class DegenerateVectorError(EqsimError):
    """A vector norm is too close to zero to give a meaningful cosine."""


class BadTemperatureError(EqsimError):
    """Similarity temperature must be strictly positive."""


class AlreadyNormalizedError(EqsimError):
    """Softmax normalization applied to an already-normalized matrix."""


class IndexOutOfRangeError(EqsimError):
    """Matrix index outside [0, n)."""


class SamePairIndexError(EqsimError):
    """A similarity grid needs two distinct batch indices."""


class BadKError(EqsimError):
    """A k parameter is out of range for the batch / eval set size."""


class NormalizationMismatchError(EqsimError):
    """Matrix normalization state disagrees with the loss configuration."""


class NonFiniteLossError(EqsimError):
    """A loss or gradient went NaN/Inf during training."""


class EmptyEvalSetError(EqsimError):
    """Metrics require at least one sample."""


class LengthMismatchError(EqsimError):
    """Paired score sequences must have equal length."""


class EmptyValuesError(EqsimError):
    """Histogram input must be nonempty."""


class SlotOutOfRangeError(EqsimError):
    """A semantic slot value exceeds its configured cardinality."""


class UneditableAspectError(EqsimError):
    """Cannot minimally edit a slot with fewer than two values."""


class MissingFieldError(EqsimError):
    """A required annotation field is empty or absent."""


class BadSegmentError(EqsimError):
    """A video segment must satisfy start < end."""


class EmptySubsetError(EqsimError):
    """A caption-edit category has no configured alternatives."""


class SchemaError(EqsimError):
    """A config or input file violates its schema. Carries location info."""

    def __init__(self, message, record_index=None, field=None):
        super().__init__(message)
        self.record_index = record_index
        self.field = field
