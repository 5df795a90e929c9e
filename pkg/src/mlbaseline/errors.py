"""Exception hierarchy shared by every module."""


class BaselineError(Exception):
    """Base class for all harness errors."""


# dataset
class DatasetError(BaselineError):
    pass


class MalformedCsv(DatasetError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class NonNumericFeature(MalformedCsv):
    pass


class EmptyDataset(DatasetError):
    pass


class DegenerateStatistic(DatasetError):
    pass


class DimensionMismatch(BaselineError):
    pass


class HashMismatch(DatasetError):
    pass


class SnapshotIOError(DatasetError, OSError):
    pass


# learners
class LearnerError(BaselineError):
    pass


class InsufficientData(LearnerError):
    pass


class InvalidHyperparameter(LearnerError):
    pass


class UnsupportedForModel(LearnerError):
    pass


# metrics
class MetricError(BaselineError):
    pass


class LengthMismatch(MetricError):
    pass


class EmptyInput(MetricError):
    pass


class ConstantTarget(MetricError):
    pass


class LabelOutOfRange(MetricError):
    pass


class UndefinedDiagnostic(MetricError):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


# validation
class InvalidPlan(BaselineError):
    pass


class StratificationImpossible(InvalidPlan):
    pass


class ExperimentFailed(BaselineError):
    def __init__(self, experiment_id, fold_index, cause):
        where = f"experiment {experiment_id!r}"
        if fold_index is not None:
            where += f", fold {fold_index}"
        super().__init__(f"{where}: {type(cause).__name__}: {cause}")
        self.experiment_id = experiment_id
        self.fold_index = fold_index
        self.cause = cause


# reporting
class EmptyReport(BaselineError):
    pass


class MissingResults(BaselineError):
    pass
