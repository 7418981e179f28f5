"""Typed errors shared by every module.

Each error carries a short machine-parsable ``category`` that the command line
prints on failure (``error <category>: <message>``).
"""


class LabError(Exception):
    category = "error"


class InvalidParameterError(LabError, ValueError):
    category = "invalid-parameter"


class NotFoundError(LabError, KeyError):
    category = "not-found"

    def __str__(self) -> str:
        # KeyError quotes its argument; keep the plain message
        return str(self.args[0]) if self.args else ""


class NoPathError(LabError):
    category = "no-path"


class ContractError(LabError, ValueError):
    category = "contract"


class VocabularyError(LabError, KeyError):
    category = "vocabulary"

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class InvalidInputError(LabError, ValueError):
    category = "invalid-input"


class MalformedTrajectoryError(LabError, ValueError):
    category = "malformed-trajectory"


class StepIndexError(LabError, IndexError):
    category = "index"


class ShapeError(LabError, ValueError):
    category = "shape"

    def __init__(self, op: str, left, right=None):
        self.op = op
        self.left = tuple(left)
        self.right = tuple(right) if right is not None else None
        if self.right is None:
            message = f"{op}: unexpected shape {self.left}"
        else:
            message = f"{op}: incompatible shapes {self.left} and {self.right}"
        super().__init__(message)


class NumericError(LabError, ArithmeticError):
    category = "numeric"


class ConfigError(LabError, ValueError):
    category = "config"


class FormatError(LabError):
    category = "format"


class CorruptionError(LabError):
    category = "corruption"


class DependencyError(LabError):
    category = "dependency"


class ArtifactIOError(LabError, OSError):
    category = "io"
