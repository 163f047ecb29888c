"""Exception hierarchy and structured diagnostics.

Two error families matter to callers: ValidationError for bad inputs
(files, configs, units, grids, parameter ranges) and NumericalError for
evaluation failures (poles, directivity nulls, fits that pin to a bracket
edge). The command-line tool maps them to exit codes 1 and 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class MicvibError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(MicvibError):
    """Invalid input: malformed file, bad config, unit or grid mismatch."""


class SchemaError(ValidationError):
    """A JSON document failed schema validation.

    Carries the JSON path of the offending element ("$" for the document
    root) so callers can point at the exact field.
    """

    def __init__(self, message: str, json_path: str = "$"):
        super().__init__(f"{json_path}: {message}")
        self.json_path = json_path


class SweepFormatError(ValidationError):
    """A sweep CSV file violates the expected schema.

    Carries the source name and the 1-based line number when known.
    """

    def __init__(self, message: str, source: str | None = None,
                 line: int | None = None):
        where = source or "<sweep>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class UnitError(ValidationError):
    """Unknown unit tag, or an operation between incompatible units."""


class GridError(ValidationError):
    """Frequency-grid problem: not increasing, mismatched, or out of range."""


class VariantError(ValidationError):
    """An operation was asked of the wrong package variant."""


class NumericalError(MicvibError):
    """Evaluation failure inside an otherwise valid computation."""


class PoleError(NumericalError):
    """Closed-form sensitivity evaluated at or below its 1/omega pole."""


class OffAxisNullError(NumericalError):
    """Directional sensitivity requested exactly at the broadside null."""


class FitConvergenceError(NumericalError):
    """A fit terminated without a usable interior optimum."""


@dataclass(frozen=True)
class Diagnostic:
    """A machine-checkable warning attached to a result.

    code: short stable identifier, e.g. "port_spacing_exceeds_tenth_wavelength".
    message: human-readable explanation.
    predicate: the violated or assumed condition, as text, stated so it can
        be re-evaluated from ``data``.
    data: the operands needed to re-check the predicate (plain JSON types).
    """

    code: str
    message: str
    predicate: str
    data: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "code": self.code,
            "message": self.message,
            "predicate": self.predicate,
            "data": dict(self.data),
        }
