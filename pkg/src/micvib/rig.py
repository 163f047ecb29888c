"""Synthetic shaker-rig data: mounting-plate dynamics, drive roll-off, noise.

Acceleration model
------------------
The rig produces an acceleration magnitude (in g) over a frequency grid:

    a(f) = drive_v * accel_per_volt * |H_hp(f)| * |H_res(f)| * (1 + eta(f))

|H_hp| is a Butterworth high-pass magnitude modeling the shaker's
low-frequency roll-off,

    |H_hp(f)| = (f / fc)^n / sqrt(1 + (f / fc)^(2 n)),

|H_res| is a unit-DC-gain resonance at the mounting plate's fundamental,

    |H_res(f)| = 1 / sqrt((1 - x^2)^2 + (x / Q)^2),   x = f / f_plate,

and eta is bounded multiplicative noise, uniform and symmetric in log
space: eta = exp(u * ln(1 + fraction)) - 1 with u drawn uniformly from
[-1, 1]. Each grid point's draw comes from its own counter-based generator
seeded with (seed, stream, point index), so a point's noise never depends
on how many other points are in the sweep.

Plate fundamental
-----------------
A clamped circular plate of radius r, thickness h, Young's modulus E,
Poisson ratio mu, and density rho has flexural rigidity

    D = E h^3 / (12 (1 - mu^2))

and fundamental angular frequency

    omega = (4.979 / r^2) * sqrt(D / (rho h)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import Diagnostic, ValidationError
from .response import FrequencyGrid, FrequencyResponse

#: Leading eigenvalue coefficient for the clamped circular plate fundamental.
CLAMPED_PLATE_COEFFICIENT = 4.979

_ACCEL_STREAM = 0
_MIC_STREAM = 1


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a positive finite number, "
                              f"got {value!r}")
    return value


@dataclass(frozen=True)
class PlateSpec:
    """Clamped circular mounting plate (SI units)."""

    radius: float
    thickness: float
    youngs_modulus: float
    poisson_ratio: float
    density: float
    resonance_q: float = 20.0

    def __post_init__(self):
        _require_positive("radius", self.radius)
        _require_positive("thickness", self.thickness)
        _require_positive("youngs_modulus", self.youngs_modulus)
        _require_positive("density", self.density)
        _require_positive("resonance_q", self.resonance_q)
        mu = float(self.poisson_ratio)
        if not 0.0 < mu < 0.5:
            raise ValidationError(
                f"poisson_ratio must lie in (0, 0.5), got {mu!r}")


@dataclass(frozen=True)
class ShakerSpec:
    """Shaker drive chain: roll-off, plate resonance, gain, and noise."""

    plate: PlateSpec
    rolloff_corner: float = 40.0
    rolloff_order: int = 2
    accel_per_volt: float = 1.0
    noise_fraction: float = 0.0
    seed: int = 0
    label: str = ""

    def __post_init__(self):
        _require_positive("rolloff_corner", self.rolloff_corner)
        _require_positive("accel_per_volt", self.accel_per_volt)
        if int(self.rolloff_order) != self.rolloff_order \
                or self.rolloff_order < 1:
            raise ValidationError(
                f"rolloff_order must be a positive integer, got "
                f"{self.rolloff_order!r}")
        object.__setattr__(self, "rolloff_order", int(self.rolloff_order))
        _check_noise_fraction(self.noise_fraction)
        _check_seed(self.seed)
        object.__setattr__(self, "seed", int(self.seed))


def _check_noise_fraction(fraction: float) -> float:
    fraction = float(fraction)
    if not math.isfinite(fraction) or not 0.0 <= fraction < 1.0:
        raise ValidationError(
            f"noise_fraction must lie in [0, 1), got {fraction!r}")
    return fraction


def _check_seed(seed: int) -> int:
    if int(seed) != seed or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, "
                              f"got {seed!r}")
    return int(seed)


def plate_stiffness(plate: PlateSpec) -> float:
    """Flexural rigidity D = E h^3 / (12 (1 - mu^2)), in N m."""
    return plate.youngs_modulus * plate.thickness ** 3 \
        / (12.0 * (1.0 - plate.poisson_ratio ** 2))


def plate_natural_frequency(plate: PlateSpec) -> float:
    """Fundamental frequency of the clamped plate, in Hz."""
    d = plate_stiffness(plate)
    omega = (CLAMPED_PLATE_COEFFICIENT / plate.radius ** 2) \
        * math.sqrt(d / (plate.density * plate.thickness))
    return omega / (2.0 * math.pi)


def highpass_magnitude(frequency, corner: float, order: int):
    """Butterworth high-pass magnitude, 1/sqrt(2) at the corner."""
    _require_positive("corner", corner)
    if int(order) != order or order < 1:
        raise ValidationError(f"order must be a positive integer, got {order!r}")
    x = np.asarray(frequency, dtype=float) / float(corner)
    if np.any(x < 0.0):
        raise ValidationError("frequency must be non-negative")
    xn = x ** int(order)
    out = xn / np.sqrt(1.0 + xn * xn)
    return out if out.ndim else float(out)


def resonance_magnitude(frequency, natural_frequency: float, q: float):
    """Unit-DC-gain resonance magnitude peaking near natural_frequency."""
    _require_positive("natural_frequency", natural_frequency)
    _require_positive("q", q)
    x = np.asarray(frequency, dtype=float) / float(natural_frequency)
    out = 1.0 / np.hypot(1.0 - x * x, x / q)
    return out if out.ndim else float(out)


def noise_multipliers(seed: int, fraction: float, count: int,
                      stream: int = 0) -> np.ndarray:
    """Per-point factors (1 + eta), eta bounded by the noise fraction.

    eta = exp(u * ln(1 + fraction)) - 1, u ~ Uniform[-1, 1], so the factor
    lies in [1/(1+fraction), 1+fraction] and is symmetric in log space.
    Point i draws from default_rng([seed, stream, i]); fraction 0 returns
    exact ones.
    """
    _check_seed(seed)
    _check_noise_fraction(fraction)
    if fraction == 0.0:
        return np.ones(int(count))
    span = math.log1p(fraction)
    out = np.empty(int(count))
    for i in range(int(count)):
        u = np.random.default_rng([seed, stream, i]).uniform(-1.0, 1.0)
        out[i] = math.exp(u * span)
    return out


def shaker_acceleration(spec: ShakerSpec, drive_voltage: float,
                        grid: FrequencyGrid) -> FrequencyResponse:
    """Acceleration sweep (in g) for a drive voltage over a grid.

    Output is exactly linear in drive_voltage: for a fixed spec and grid,
    doubling the drive doubles every sample bit for bit (the drive enters
    as one final scalar multiplication).
    """
    drive = float(drive_voltage)
    if not math.isfinite(drive) or drive < 0.0:
        raise ValidationError(
            f"drive_voltage must be non-negative, got {drive!r}")
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(grid)
    f = grid.frequencies
    f_plate = plate_natural_frequency(spec.plate)
    base = spec.accel_per_volt \
        * highpass_magnitude(f, spec.rolloff_corner, spec.rolloff_order) \
        * resonance_magnitude(f, f_plate, spec.plate.resonance_q) \
        * noise_multipliers(spec.seed, spec.noise_fraction, len(grid),
                            _ACCEL_STREAM)
    return FrequencyResponse(f, drive * base, "g_accel")


@dataclass(frozen=True)
class SyntheticMicSweep:
    """Raw voltage and per-g normalization produced by the rig."""

    raw: FrequencyResponse
    per_g: FrequencyResponse
    diagnostics: tuple = field(default_factory=tuple)


def synthesize_mic_sweep(model_curve: FrequencyResponse,
                         acoustic: FrequencyResponse,
                         accel: FrequencyResponse,
                         noise_fraction: float = 0.0,
                         seed: int = 0,
                         leakage_pressure_pa: float = 0.0
                         ) -> SyntheticMicSweep:
    """Synthesize what the mic would output on the rig.

    raw(f) = (S_pa_per_g(f) * a(f) + p_leak) * S_v_per_pa(f) * (1 + eta(f))

    model_curve must be Pa_per_g, acoustic V_per_Pa, accel g_accel, all on
    one grid. leakage_pressure_pa adds a flat airborne pressure reaching
    the mic regardless of acceleration (for staging leakage studies). The
    per-g sweep divides raw by acceleration; points with zero acceleration
    are set to 0 and flagged as undefined.
    """
    _check_noise_fraction(noise_fraction)
    _check_seed(seed)
    p_leak = float(leakage_pressure_pa)
    if not math.isfinite(p_leak) or p_leak < 0.0:
        raise ValidationError(
            f"leakage_pressure_pa must be non-negative, got {p_leak!r}")
    expected = {"model_curve": ("Pa_per_g", model_curve),
                "acoustic": ("V_per_Pa", acoustic),
                "accel": ("g_accel", accel)}
    for name, (unit, sweep) in expected.items():
        if sweep.unit != unit:
            raise ValidationError(
                f"{name} must carry unit {unit!r}, got {sweep.unit!r}")
    if not (model_curve.same_grid(acoustic) and model_curve.same_grid(accel)):
        raise ValidationError(
            "model_curve, acoustic, and accel must share one grid")
    for name, sweep in (("model_curve", model_curve), ("acoustic", acoustic)):
        if np.any(sweep.values <= 0.0):
            bad = int(np.flatnonzero(sweep.values <= 0.0)[0])
            raise ValidationError(
                f"{name} must be strictly positive; got "
                f"{sweep.values[bad]!r} at {sweep.frequencies[bad]!r} Hz")

    factors = noise_multipliers(seed, noise_fraction, len(accel), _MIC_STREAM)
    pressure = model_curve.values * accel.values + p_leak
    raw_values = pressure * acoustic.values * factors
    raw = FrequencyResponse(accel.frequencies, raw_values, "volt")

    diags = []
    per_g_values = np.zeros(len(accel))
    moving = accel.values > 0.0
    per_g_values[moving] = raw_values[moving] / accel.values[moving]
    for i in np.flatnonzero(~moving):
        f_i = float(accel.frequencies[i])
        diags.append(Diagnostic(
            code="per_g_undefined_zero_acceleration",
            message=f"per-g response undefined at {f_i:g} Hz (zero "
                    f"acceleration); value set to 0",
            predicate="acceleration_g == 0 at frequency_hz",
            data={"frequency_hz": f_i, "acceleration_g": 0.0},
        ))
    per_g = FrequencyResponse(accel.frequencies, per_g_values, "V_per_g")
    return SyntheticMicSweep(raw=raw, per_g=per_g, diagnostics=tuple(diags))
