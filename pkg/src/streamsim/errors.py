"""Exception hierarchy shared by all streamsim modules."""


class StreamSimError(Exception):
    """Base class for every error raised by streamsim."""


class DataError(StreamSimError):
    """Input data is malformed or inconsistent."""


class MissingColumn(DataError):
    def __init__(self, column, line=None):
        self.column = column
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"missing column {column!r}{where}")


class UnparseableTimestamp(DataError):
    def __init__(self, value, line=None):
        self.value = value
        self.line = line
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"cannot parse timestamp {value!r}{where}")


class OutOfOrderEvent(DataError):
    pass


class SpanTooShort(DataError):
    pass


class EmptyInput(DataError):
    pass


class EmptyLog(DataError):
    pass


class EmptySample(DataError):
    pass


class NoSharedResources(DataError):
    pass


class NoCompleteTraces(DataError):
    pass


class StateSpaceBudgetExceeded(StreamSimError):
    pass


class NoCapableResource(StreamSimError):
    pass


class TargetTypeMismatch(StreamSimError, TypeError):
    pass


class InconsistentModel(StreamSimError):
    pass


class HorizonZero(StreamSimError, ValueError):
    pass


class MissingBranchModel(StreamSimError, KeyError):
    pass


class PlanError(StreamSimError):
    """The experiment plan is invalid (CLI exit code 1)."""


class TreeSyntaxError(StreamSimError, ValueError):
    pass
