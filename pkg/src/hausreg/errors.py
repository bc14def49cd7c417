"""Exception hierarchy.

Every error carries a short machine-readable ``code`` (``tail-unresolved``,
``eval-error``, ...) that the CLI surfaces verbatim.
"""

from __future__ import annotations


class HausdorffError(Exception):
    code = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details

    def __str__(self) -> str:
        base = super().__str__()
        return f"[{self.code}] {base}"


class TailUnresolved(HausdorffError):
    code = "tail-unresolved"


class NanInIntegrand(HausdorffError):
    code = "nan-in-integrand"


class EvalError(HausdorffError):
    code = "eval-error"


class SequenceTooShort(HausdorffError):
    code = "sequence-too-short"


class PrecisionLoss(HausdorffError):
    code = "precision-loss"


class BadSupport(HausdorffError):
    code = "bad-support"


class SignedMeasureRejected(HausdorffError):
    code = "signed-measure-rejected"


class BadOrder(HausdorffError):
    code = "bad-order"


class NotPositive(HausdorffError):
    code = "not-positive"


class BudgetExceeded(HausdorffError):
    code = "budget-exceeded"


class InconclusiveByConstruction(HausdorffError):
    code = "inconclusive-by-construction"


class InvalidMeasure(HausdorffError):
    code = "invalid-measure"


class ConfigError(HausdorffError):
    """Config or expression parse failure, with 1-based line/column when known."""

    code = "parse-error"

    def __init__(self, message: str, line: int | None = None, column: int | None = None, **details):
        super().__init__(message, **details)
        self.line = line
        self.column = column

    def __str__(self) -> str:
        where = ""
        if self.line is not None:
            where = f" (line {self.line}, column {self.column})"
        elif self.column is not None:
            where = f" (column {self.column})"
        return f"[{self.code}] {Exception.__str__(self)}{where}"
