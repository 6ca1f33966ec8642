"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command line front end:
1 for malformed input, 2 for violated preconditions, 3 for exhausted budgets.
"""


class AnalysisError(Exception):
    exit_code = 2


class SpecError(AnalysisError):
    """Malformed system or polytope description.

    ``pointer`` is a JSON pointer to the offending field, when known.
    """

    exit_code = 1

    def __init__(self, message, pointer=""):
        super().__init__(message)
        self.pointer = pointer


class DimensionUnsupported(AnalysisError):
    pass


class CycleLimit(AnalysisError):
    pass


class EmptyIntersection(AnalysisError):
    pass


class SingularMatrix(AnalysisError):
    pass


class IllConditionedSplit(AnalysisError):
    pass


class ControlOutOfRange(AnalysisError):
    pass


class NotControllable(AnalysisError):
    pass


class NotHyperbolic(AnalysisError):
    pass


class SingularShift(AnalysisError):
    pass


class PreconditionViolated(AnalysisError):
    pass


class SteeringOutOfRange(AnalysisError):
    pass


class CubeNotInD(AnalysisError):
    pass


class SpanningValidationError(AnalysisError):
    pass


class UnspannableGrid(AnalysisError):
    pass


class BudgetExceeded(AnalysisError):
    exit_code = 3


class EmptyGrid(AnalysisError):
    pass


class ParseError(SpecError):
    """Syntax error in a potential expression.

    ``offset`` is the byte offset of the offending token and ``expected``
    the set of token kinds that would have been accepted there.
    """

    def __init__(self, message, offset, expected=()):
        super().__init__(f"{message} at byte {offset}")
        self.offset = offset
        self.expected = frozenset(expected)


class UnknownIdentifier(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(AnalysisError):
    def __init__(self, message, subexpression="", inputs=None):
        super().__init__(message)
        self.subexpression = subexpression
        self.inputs = inputs
