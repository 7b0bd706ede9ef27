"""Exception hierarchy shared across msbench modules."""


class MsbenchError(Exception):
    """Base class for all msbench errors."""


class DatasetError(MsbenchError):
    pass


class EmptyDatasetError(DatasetError):
    pass


class DecodeError(MsbenchError):
    def __init__(self, path, reason):
        self.path = path
        self.reason = reason
        super().__init__(f"cannot decode {path}: {reason}")


class BackendError(MsbenchError):
    """Raised when a backend fails; ``diagnostics`` carries captured context."""

    def __init__(self, message, diagnostics=""):
        self.diagnostics = diagnostics
        text = message if not diagnostics else f"{message}\n{diagnostics}"
        super().__init__(text)


class ProtocolError(BackendError):
    pass


class ReportError(MsbenchError):
    pass


class CsvParseError(ReportError):
    def __init__(self, path, row, column, message):
        self.row = row
        self.column = column
        super().__init__(f"{path}: row {row}, column {column}: {message}")
