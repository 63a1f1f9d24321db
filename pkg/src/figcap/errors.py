class FigcapError(Exception):
    """Base class for data/validation failures (CLI exit code 2)."""


class FormatError(FigcapError):
    """Malformed input line or schema violation."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)


class CorpusError(FigcapError):
    """Corpus-level inconsistency such as duplicate ids."""


class AlignmentError(FigcapError):
    """Id sets of two or more files disagree."""

    def __init__(self, message, record_id=None):
        self.record_id = record_id
        super().__init__(message)


class NormalizationError(FigcapError, ValueError):
    """Normalizer undefined for the given pair (e.g. empty reference)."""


class NoReferenceError(FigcapError, ValueError):
    """No figure/table reference could be found in the mentions."""
