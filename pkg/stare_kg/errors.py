"""Exception hierarchy shared by every stare_kg module."""


class StareError(Exception):
    pass


class NamespaceCollisionError(StareError, ValueError):
    def __init__(self, label: str):
        super().__init__(f"label used as both entity and relation: {label!r}")
        self.label = label


class DoubleAugmentationError(StareError):
    pass


class GraphIntegrityError(StareError):
    pass


class DimensionMismatchError(StareError, ValueError):
    pass


class QueryTruncationError(StareError, ValueError):
    pass


class StatementParseError(StareError, ValueError):
    def __init__(self, path: str, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class UnreachableRatioError(StareError, ValueError):
    pass


class NonFiniteLossError(StareError, FloatingPointError):
    pass


class EvaluationIntegrityError(StareError):
    pass


class ConfigKeyError(StareError, KeyError):
    def __init__(self, key: str):
        super().__init__(key)
        self.key = key

    def __str__(self):
        return f"unknown config key: {self.key}"


class ConfigValueError(StareError, ValueError):
    pass
