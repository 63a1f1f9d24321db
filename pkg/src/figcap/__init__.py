"""Figure-caption pipeline tooling: metrics, ranking losses, consensus fusion."""

from figcap.errors import (
    AlignmentError,
    CorpusError,
    FigcapError,
    FormatError,
    NoReferenceError,
    NormalizationError,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentError",
    "CorpusError",
    "FigcapError",
    "FormatError",
    "NoReferenceError",
    "NormalizationError",
]
