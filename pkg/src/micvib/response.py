"""Frequency grids and unit-tagged frequency responses.

Every sweep in this package, modeled or measured, is a FrequencyResponse:
a strictly increasing positive frequency axis in Hz, non-negative linear
magnitudes, and a unit tag fixed at construction. Arithmetic between
responses requires identical grids and propagates units through a small
algebra (volt / g_accel = V_per_g, and so on).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridError, UnitError, ValidationError

#: Recognized unit tags for response values (linear magnitudes).
UNITS = (
    "V_per_g",
    "V_per_Pa",
    "Pa_per_g",
    "m_per_Pa",
    "m_per_g",
    "volt",
    "g_accel",
    "dimensionless",
)

_QUOTIENTS = {
    ("V_per_g", "V_per_Pa"): "Pa_per_g",
    ("m_per_g", "m_per_Pa"): "Pa_per_g",
    ("volt", "g_accel"): "V_per_g",
}

_PRODUCTS = {
    ("Pa_per_g", "V_per_Pa"): "V_per_g",
    ("V_per_g", "g_accel"): "volt",
    ("m_per_Pa", "Pa_per_g"): "m_per_g",
}


def check_unit(unit: str) -> str:
    """Return ``unit`` if it is a recognized tag, else raise UnitError."""
    if unit not in UNITS:
        raise UnitError(
            f"unknown unit tag {unit!r}; expected one of {', '.join(UNITS)}")
    return unit


def divide_units(numerator: str, denominator: str) -> str:
    check_unit(numerator)
    check_unit(denominator)
    if numerator == denominator:
        return "dimensionless"
    if denominator == "dimensionless":
        return numerator
    try:
        return _QUOTIENTS[(numerator, denominator)]
    except KeyError:
        raise UnitError(
            f"no defined quotient for {numerator!r} / {denominator!r}") from None


def multiply_units(left: str, right: str) -> str:
    check_unit(left)
    check_unit(right)
    if left == "dimensionless":
        return right
    if right == "dimensionless":
        return left
    for pair in ((left, right), (right, left)):
        if pair in _PRODUCTS:
            return _PRODUCTS[pair]
    raise UnitError(f"no defined product for {left!r} * {right!r}")


def _as_frequency_array(frequencies) -> np.ndarray:
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or f.size < 1:
        raise GridError("frequency grid must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(f)):
        raise GridError("frequency grid contains non-finite values")
    if f[0] <= 0.0:
        raise GridError(f"frequencies must be positive, got {f[0]!r}")
    if f.size > 1 and not np.all(np.diff(f) > 0.0):
        bad = int(np.flatnonzero(np.diff(f) <= 0.0)[0]) + 1
        raise GridError(
            f"frequencies must be strictly increasing; point {bad} "
            f"({f[bad]!r} Hz) does not exceed its predecessor")
    f = f.copy()
    f.setflags(write=False)
    return f


@dataclass(frozen=True, eq=False)
class FrequencyGrid:
    """Strictly increasing, positive frequency points in Hz."""

    frequencies: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "frequencies",
                           _as_frequency_array(self.frequencies))

    @classmethod
    def logspace(cls, fmin: float, fmax: float, points: int) -> "FrequencyGrid":
        """Logarithmically spaced grid from fmin to fmax inclusive."""
        if points < 1:
            raise GridError("grid needs at least one point")
        if points == 1:
            if fmax != fmin:
                raise GridError("a single-point grid requires fmin == fmax")
            return cls(np.array([float(fmin)]))
        if not fmin < fmax:
            raise GridError(f"need fmin < fmax, got {fmin!r} and {fmax!r}")
        return cls(np.geomspace(float(fmin), float(fmax), int(points)))

    def __len__(self) -> int:
        return int(self.frequencies.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FrequencyGrid):
            return NotImplemented
        return np.array_equal(self.frequencies, other.frequencies)

    @property
    def fmin(self) -> float:
        return float(self.frequencies[0])

    @property
    def fmax(self) -> float:
        return float(self.frequencies[-1])


@dataclass(frozen=True, eq=False)
class FrequencyResponse:
    """A unit-tagged magnitude sweep on a frequency grid.

    values are linear (never dB) and non-negative; the unit tag is fixed
    after construction.
    """

    frequencies: np.ndarray
    values: np.ndarray
    unit: str

    def __post_init__(self):
        f = _as_frequency_array(self.frequencies)
        v = np.asarray(self.values, dtype=float)
        if v.shape != f.shape:
            raise ValidationError(
                f"values shape {v.shape} does not match grid shape {f.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("response values contain non-finite entries")
        if np.any(v < 0.0):
            bad = int(np.argmin(v))
            raise ValidationError(
                f"response values must be non-negative; got {v[bad]!r} "
                f"at {f[bad]!r} Hz")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "unit", check_unit(self.unit))

    def __len__(self) -> int:
        return int(self.frequencies.size)

    @property
    def grid(self) -> FrequencyGrid:
        return FrequencyGrid(self.frequencies)

    def same_grid(self, other: "FrequencyResponse") -> bool:
        return np.array_equal(self.frequencies, other.frequencies)

    def _require_same_grid(self, other: "FrequencyResponse", op: str):
        if not self.same_grid(other):
            raise GridError(
                f"cannot {op} responses on different grids "
                f"({len(self)} points {self.frequencies[0]:g}-"
                f"{self.frequencies[-1]:g} Hz vs {len(other)} points "
                f"{other.frequencies[0]:g}-{other.frequencies[-1]:g} Hz); "
                f"resample first")

    def __truediv__(self, other):
        if not isinstance(other, FrequencyResponse):
            return NotImplemented
        self._require_same_grid(other, "divide")
        unit = divide_units(self.unit, other.unit)
        if np.any(other.values == 0.0):
            bad = int(np.flatnonzero(other.values == 0.0)[0])
            raise ValidationError(
                f"division by zero response value at "
                f"{self.frequencies[bad]!r} Hz")
        return FrequencyResponse(self.frequencies, self.values / other.values,
                                 unit)

    def __mul__(self, other):
        if not isinstance(other, FrequencyResponse):
            return NotImplemented
        self._require_same_grid(other, "multiply")
        unit = multiply_units(self.unit, other.unit)
        return FrequencyResponse(self.frequencies, self.values * other.values,
                                 unit)

    def scaled(self, factor: float) -> "FrequencyResponse":
        """Same sweep with values multiplied by a non-negative scalar."""
        return FrequencyResponse(self.frequencies, self.values * float(factor),
                                 self.unit)
