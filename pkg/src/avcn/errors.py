"""Exception hierarchy shared by every stage of the pipeline."""


class AvcnError(Exception):
    pass


class DataError(AvcnError):
    """Problems with input data on disk or in memory (CLI exit code 2)."""


class MissingFile(DataError, FileNotFoundError):
    pass


class MalformedDataset(DataError, ValueError):
    pass


class UnknownLabel(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyInput(AvcnError, ValueError):
    pass


class InvalidParameter(AvcnError, ValueError):
    pass


class NumericalError(AvcnError, ArithmeticError):
    """Non-finite values showed up in training (CLI exit code 3)."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
