"""Exception hierarchy shared by every stage of the pipeline."""


class SparseDistError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SparseDistError, ValueError):
    """An input program, format, distribution or schedule is malformed."""


class ParseError(ValidationError):
    """Text could not be parsed by one of the front-end grammars."""


class BoundsError(SparseDistError, IndexError):
    """A coordinate or position range falls outside its index space."""


class ShapeError(SparseDistError, ValueError):
    """Two objects that must correspond index-for-index do not."""


class PartitionError(SparseDistError, ValueError):
    """A partition builder was misused (overlap, entry after finalize, ...)."""


class TensorFormatError(ValidationError):
    """A tensor file is malformed or its contents violate the declared shape."""


class ClosureError(SparseDistError, RuntimeError):
    """A worker touched an index outside the sub-region it was given."""

    def __init__(self, tensor, region, index, color):
        self.tensor = tensor
        self.region = region
        self.index = index
        self.color = color
        super().__init__(
            f"closure violation: worker {color} accessed {tensor}.{region}[{index}] "
            "outside its partition"
        )


class AssemblyError(SparseDistError, RuntimeError):
    """Output assembly wrote past the space reserved by its symbolic phase."""
