"""Exception types shared across the package."""


class GapflowError(Exception):
    """Base class for all package errors."""


# --- order-flow parsing ---

class ParseError(GapflowError):
    """Base for order-flow file errors; carries the offending file line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedRow(ParseError):
    pass


class NonMonotoneTimestamp(ParseError):
    pass


class UnknownCancelTarget(ParseError):
    pass


class PriceNotOnTick(ParseError):
    pass


# --- book / gap series ---

class EmptySeries(GapflowError):
    pass


# --- tail fitting ---

class InsufficientSample(GapflowError):
    pass


class InsufficientTail(GapflowError):
    pass


class DegenerateTail(GapflowError):
    pass


# --- fluctuation analysis ---

class TooShort(GapflowError):
    pass


class ScaleOutOfRange(GapflowError):
    pass


class EvenScaleForCentered(GapflowError):
    pass


class TooFewScales(GapflowError):
    pass


class GridTooSparse(GapflowError):
    pass


class AllBoxesDegenerate(GapflowError):
    pass


# --- generators ---

class BadParams(GapflowError):
    pass


class EmbeddingNotPSD(GapflowError):
    pass


# --- regression / reporting ---

class DegenerateX(GapflowError):
    pass


class InsufficientData(GapflowError):
    pass


class MissingAnalysis(GapflowError):
    pass
