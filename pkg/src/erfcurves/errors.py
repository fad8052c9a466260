"""Exception hierarchy shared by all modules."""


class ErfCurvesError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(ErfCurvesError, ValueError):
    pass


class InvalidLayerError(InvalidArgumentError):
    pass


class EmptyCurveError(ErfCurvesError):
    pass


class OutOfDomainError(ErfCurvesError, ValueError):
    pass


class NoIntersectionError(ErfCurvesError):
    """Demand already lies below supply at zero quantity."""


class NoIntersectionInDomainError(NoIntersectionError):
    """Demand is still above supply at the end of the common quantity range."""


class NumericalError(ErfCurvesError, ArithmeticError):
    pass


class InvalidProblemError(InvalidArgumentError):
    pass


class EmptySegmentError(ErfCurvesError):
    pass


class SegmentFitError(ErfCurvesError):
    """A per-segment failure, tagged with the segment index."""

    def __init__(self, index, cause):
        super().__init__(f"segment {index}: {cause}")
        self.index = index
        self.cause = cause


class ParseError(ErfCurvesError):
    def __init__(self, path, problems):
        self.path = path
        self.problems = list(problems)
        shown = "; ".join(f"line {n}: {msg}" for n, msg in self.problems[:5])
        more = len(self.problems) - 5
        if more > 0:
            shown += f"; ... and {more} more"
        super().__init__(f"{path}: {shown}")


class EmptyCorpusError(ErfCurvesError):
    pass


class EmptyReportError(ErfCurvesError):
    pass


class InvalidInputError(InvalidArgumentError):
    pass
