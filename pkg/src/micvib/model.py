"""Lumped-parameter vibration sensitivity of MEMS microphone packages.

Everything here works in SI units (m, kg, s, Pa) except the final
sensitivity figures, which are acoustically referred and expressed in
Pa per g with g = 9.81 m/s^2 exactly. Sensitivities are magnitudes; phase
is never tracked.

Physical picture
----------------
A package mounted on a vibrating surface carries its internal air column
and membrane along with it. For a sealed one-port package the co-moving
air in front of the membrane (length l1 plus half the vent path l2) and
the membrane mass itself produce an equivalent pressure per g of
acceleration:

    S = g_0 * rho_air * (l1 + l2 / 2) + g_0 * rho_m * t_m        (full)
    S = g_0 * rho_air * (l1 + l2 / 2)                            (air only)

A differential two-port package senses the pressure difference across its
port spacing d_p. A plane wave of sound at frequency f produces a
fractional pressure difference d_p * omega / c across the ports, while
whole-body acceleration drives the membrane through the total co-moving
mass. Referring the vibration response to the acoustic response gives

    S = g_0 * (rho_m * t_m + rho_air * L_air) * c / (d_p_eff * omega)

with L_air the modeled air-column length and d_p_eff the port spacing
projected onto the excitation axis (cos(theta) directivity). The air-only
variant drops the membrane term; when L_air equals d_p it collapses to
g_0 * rho_air * c / omega, independent of geometry.

The mechanical response chi(omega) of the membrane cancels out of the
referred figures but is exposed for displacement-level work:

    chi = 1 / (m * omega_n^2 * sqrt((1 - r^2)^2 + (r / Q)^2)),  r = omega/omega_n
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .errors import (Diagnostic, OffAxisNullError, PoleError, ValidationError,
                     VariantError)
from .response import FrequencyGrid, FrequencyResponse

TWO_PI = 2.0 * math.pi

#: Acceleration of one "g", exact by convention throughout the package.
STANDARD_GRAVITY = 9.81

#: Projections closer to zero than this are treated as an exact broadside null.
NULL_PROJECTION_EPS = 1e-12

#: Plane-wave validity: flag port spacings beyond a tenth of a wavelength.
WAVELENGTH_FRACTION_LIMIT = 0.1


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value <= 0.0:
        raise ValidationError(f"{name} must be a positive finite number, "
                              f"got {value!r}")
    return value


@dataclass(frozen=True)
class Environment:
    """Acoustic medium and gravity convention.

    Defaults: dry air at 20 degC (1.204 kg/m^3, 343 m/s) and g = 9.81 m/s^2.
    """

    air_density: float = 1.204
    speed_of_sound: float = 343.0
    standard_gravity: float = STANDARD_GRAVITY

    def __post_init__(self):
        _require_positive("air_density", self.air_density)
        _require_positive("speed_of_sound", self.speed_of_sound)
        _require_positive("standard_gravity", self.standard_gravity)


@dataclass(frozen=True)
class SensingElement:
    """Membrane parameters of the transducer die.

    membrane_density and membrane_thickness set the membrane's mass per
    area; area is the moving plate area (nominal 1 mm^2 unless a datasheet
    value is known; it cancels in every Pa-per-g figure). natural_frequency
    (Hz) and quality_factor describe the fundamental mechanical resonance.
    """

    membrane_density: float = 2300.0
    membrane_thickness: float = 1.0e-6
    area: float = 1.0e-6
    natural_frequency: float = 10_000.0
    quality_factor: float = 0.707

    def __post_init__(self):
        _require_positive("membrane_density", self.membrane_density)
        _require_positive("membrane_thickness", self.membrane_thickness)
        _require_positive("area", self.area)
        _require_positive("natural_frequency", self.natural_frequency)
        _require_positive("quality_factor", self.quality_factor)

    @property
    def membrane_mass(self) -> float:
        """Membrane mass in kg (density * thickness * area)."""
        return self.membrane_density * self.membrane_thickness * self.area

    @property
    def omega_n(self) -> float:
        """Angular natural frequency in rad/s."""
        return TWO_PI * self.natural_frequency


@dataclass(frozen=True)
class OnePortPackage:
    """Sealed bottom-port package: front volume l1, vent path l2 (meters)."""

    element: SensingElement
    l1: float
    l2: float
    label: str = ""

    def __post_init__(self):
        _require_positive("l1", self.l1)
        _require_positive("l2", self.l2)


@dataclass(frozen=True)
class _TwoPortGeometry:
    """Shared geometry for packages sensing a pressure difference."""

    element: SensingElement
    l1: float
    l2: float
    port_spacing: float
    effective_length: float | None = None
    label: str = ""

    def __post_init__(self):
        _require_positive("l1", self.l1)
        _require_positive("l2", self.l2)
        _require_positive("port_spacing", self.port_spacing)
        if self.effective_length is not None:
            _require_positive("effective_length", self.effective_length)


@dataclass(frozen=True)
class TwoPortPackage(_TwoPortGeometry):
    """Single differential package with two ports spaced port_spacing apart.

    The modeled air-column length defaults to l1 + l2 unless
    effective_length overrides it (for example from a fit to measured data).
    """


@dataclass(frozen=True)
class MicArrayPackage(_TwoPortGeometry):
    """Two one-port capsules wired differentially, spaced port_spacing apart.

    The air column that co-moves with each capsule is not the inter-capsule
    spacing, so the full model requires an effective_length (typically
    fitted); the air-only model may fall back to port_spacing with a
    warning.
    """


MicPackage = Union[OnePortPackage, TwoPortPackage, MicArrayPackage]


class PressureDifferenceRatio(NamedTuple):
    """Fractional port-to-port pressure difference and its validity flag.

    value mirrors the shape of the frequency argument and is signed (odd in
    cos(theta)); downstream sensitivities use its magnitude.
    long_wavelength_ok is False wherever the port spacing exceeds a tenth
    of the wavelength, outside the small-spacing linearization.
    """

    value: float | np.ndarray
    long_wavelength_ok: bool | np.ndarray


@dataclass(frozen=True)
class Prediction:
    """A modeled sweep plus the diagnostics accumulated while building it."""

    response: FrequencyResponse
    diagnostics: tuple = field(default_factory=tuple)


def axis_projection(incidence_angle: float) -> float:
    """cos(theta) projection of the port axis onto the excitation axis.

    Angles are radians; 0 means the ports are aligned with the excitation.
    Projections within 1e-12 of zero snap to exactly 0 so that broadside
    (pi/2) is an exact null despite cos(pi/2) rounding to ~6.1e-17.
    """
    p = math.cos(float(incidence_angle))
    if abs(p) < NULL_PROJECTION_EPS:
        return 0.0
    return p


def mechanical_compliance(element: SensingElement, frequency) -> np.ndarray:
    """Membrane displacement per unit force, chi(omega), in m/N.

    Magnitude of the damped single-resonance response. Evaluates exactly to
    1 / (m * omega_n^2) at zero frequency and to Q times that value at the
    natural frequency (the formulation below preserves both identities in
    floating point).

    Args:
        element: the sensing element.
        frequency: Hz, scalar or array; zero is allowed, negatives are not.

    Returns:
        chi with the same shape as ``frequency``.
    """
    f = np.asarray(frequency, dtype=float)
    if np.any(f < 0.0) or not np.all(np.isfinite(f)):
        raise ValidationError("frequency must be finite and non-negative")
    q = element.quality_factor
    chi0 = 1.0 / (element.membrane_mass * element.omega_n ** 2)
    r = f / element.natural_frequency
    denom = np.hypot(q * (1.0 - r * r), r)
    out = chi0 * q / denom
    return out if out.ndim else float(out)


def modeled_air_length(package: MicPackage,
                       mode: str = "full") -> tuple[float, list[Diagnostic]]:
    """Resolve the air-column length used by the two-port model, in meters.

    Order: an explicit effective_length override wins; a plain two-port
    package falls back to l1 + l2; the array variant falls back to
    port_spacing in air-only mode (with a warning) and is an error in full
    mode, where an un-fitted length would silently mis-scale the membrane
    term.
    """
    _check_mode(mode)
    if isinstance(package, OnePortPackage):
        raise VariantError("one-port packages have no differential air column")
    if not isinstance(package, _TwoPortGeometry):
        raise VariantError(f"unsupported package variant {type(package).__name__}")
    if package.effective_length is not None:
        return float(package.effective_length), []
    if isinstance(package, MicArrayPackage):
        if mode == "full":
            raise ValidationError(
                "array-of-one-ports needs an effective_length (fit one from "
                "measured data) before full-model prediction")
        diag = Diagnostic(
            code="array_air_length_fallback",
            message="array air-column length approximated by the port "
                    "spacing; fit an effective length for full-model work",
            predicate="effective_length is None and variant == "
                      "'array_of_one_ports'",
            data={"port_spacing_m": package.port_spacing},
        )
        return float(package.port_spacing), [diag]
    return float(package.l1 + package.l2), []


def lumped_mass(package: MicPackage, env: Environment | None = None,
                mode: str = "full") -> float:
    """Total co-moving mass over the membrane area of a two-port package, kg.

    m = rho_air * A * L_air + rho_m * t_m * A (the membrane term drops in
    air-only mode). Uses the same air-column resolution as the sensitivity
    formulas, so mass and sensitivity always describe the same model.
    """
    env = env or Environment()
    _check_mode(mode)
    el = package.element
    air_len, _ = modeled_air_length(package, mode)
    mass = env.air_density * el.area * air_len
    if mode == "full":
        mass += el.membrane_mass
    return mass


def pressure_difference_ratio(port_spacing: float, frequency, env: Environment
                              | None = None,
                              incidence_angle: float = 0.0
                              ) -> PressureDifferenceRatio:
    """Fractional pressure difference across the ports for a plane wave.

    delta_p / p = (d_p * cos(theta)) * omega / c, signed: behind-the-axis
    incidence gives a negative ratio, broadside and zero frequency give
    exactly 0. The companion flag is False wherever the spacing itself
    (unprojected, a conservative orientation-independent check) exceeds a
    tenth of the wavelength; the comparison is written spacing * f <= c/10
    so zero frequency needs no special case.
    """
    env = env or Environment()
    dp = _require_positive("port_spacing", port_spacing)
    f = np.asarray(frequency, dtype=float)
    if np.any(f < 0.0) or not np.all(np.isfinite(f)):
        raise ValidationError("frequency must be finite and non-negative")
    proj = axis_projection(incidence_angle)
    value = dp * proj * TWO_PI * f / env.speed_of_sound
    ok = dp * f <= WAVELENGTH_FRACTION_LIMIT * env.speed_of_sound
    if value.ndim:
        return PressureDifferenceRatio(value, ok)
    return PressureDifferenceRatio(float(value), bool(ok))


def displacement_per_pascal(package: MicPackage, frequency,
                            env: Environment | None = None,
                            incidence_angle: float = 0.0):
    """Membrane displacement per pascal of incident sound, in m/Pa.

    Two-port family only: x/p = (d_p_eff * omega / c) * A * chi(omega).
    """
    env = env or Environment()
    if not isinstance(package, _TwoPortGeometry):
        raise VariantError("displacement_per_pascal applies to the two-port "
                           "family; one-port acoustic response is not modeled")
    ratio, _ = pressure_difference_ratio(package.port_spacing, frequency, env,
                                         incidence_angle)
    chi = mechanical_compliance(package.element, frequency)
    out = np.abs(ratio) * package.element.area * chi
    return out if np.ndim(out) else float(out)


def displacement_per_g(package: MicPackage, frequency,
                       env: Environment | None = None,
                       mode: str = "full"):
    """Membrane displacement per g of package acceleration, in m/g.

    x/a = g_0 * m_tot * chi(omega), with m_tot the co-moving lumped mass.
    """
    env = env or Environment()
    mass = lumped_mass(package, env, mode)
    chi = mechanical_compliance(package.element, frequency)
    return env.standard_gravity * mass * chi


def sensitivity_one_port(package: OnePortPackage,
                         env: Environment | None = None,
                         mode: str = "full") -> float:
    """Acoustically referred vibration sensitivity of a sealed one-port, Pa/g.

    Frequency independent: g_0 * rho_air * (l1 + l2/2) plus, in full mode,
    the membrane term g_0 * rho_m * t_m.
    """
    env = env or Environment()
    _check_mode(mode)
    if not isinstance(package, OnePortPackage):
        raise VariantError(
            f"sensitivity_one_port needs a one-port package, got "
            f"{type(package).__name__}")
    el = package.element
    air = env.standard_gravity * env.air_density * (package.l1
                                                    + 0.5 * package.l2)
    if mode == "air_only":
        return air
    return air + env.standard_gravity * el.membrane_density \
        * el.membrane_thickness


def sensitivity_two_port(package: MicPackage, frequency,
                         env: Environment | None = None,
                         incidence_angle: float = 0.0,
                         mode: str = "full"):
    """Acoustically referred vibration sensitivity of the two-port family,
    Pa/g.

    S = g_0 * (rho_m * t_m + rho_air * L_air) * c / (d_p_eff * omega) in
    full mode; the air-only variant keeps only the rho_air * L_air term and
    collapses to g_0 * rho_air * c / omega when L_air equals d_p. Falls as
    1/f, so frequency must be positive; a broadside incidence (projection 0)
    has no finite referred sensitivity and raises OffAxisNullError.

    Args:
        frequency: Hz, scalar or array.
        incidence_angle: radians between port axis and excitation axis.
        mode: "full" or "air_only".

    Returns:
        Sensitivity with the shape of ``frequency``.
    """
    env = env or Environment()
    _check_mode(mode)
    if isinstance(package, OnePortPackage):
        raise VariantError("one-port packages use sensitivity_one_port")
    f = np.asarray(frequency, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValidationError("frequency must be finite")
    if np.any(f <= 0.0):
        bad = float(f.min())
        raise PoleError(
            f"referred sensitivity has a 1/omega pole; frequency must be "
            f"positive, got {bad!r} Hz")
    proj = axis_projection(incidence_angle)
    if proj == 0.0:
        raise OffAxisNullError(
            "broadside incidence: projected port spacing is zero, referred "
            "sensitivity diverges")
    dp_eff = package.port_spacing * abs(proj)
    air_len, _ = modeled_air_length(package, mode)
    el = package.element
    numerator = env.air_density * air_len
    if mode == "full":
        numerator += el.membrane_density * el.membrane_thickness
    out = env.standard_gravity * numerator * env.speed_of_sound \
        / (dp_eff * TWO_PI * f)
    return out if out.ndim else float(out)


def predict_sweep(package: MicPackage, grid: FrequencyGrid,
                  env: Environment | None = None,
                  incidence_angle: float = 0.0,
                  mode: str = "full") -> Prediction:
    """Model the Pa-per-g sensitivity over a frequency grid.

    One-port packages give a flat line (incidence_angle is ignored; the
    response is omnidirectional). The two-port family gives the 1/f law and
    attaches a diagnostic at every grid point where the projected port
    spacing exceeds a tenth of the wavelength.
    """
    env = env or Environment()
    _check_mode(mode)
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(grid)
    diags: list[Diagnostic] = []
    if isinstance(package, OnePortPackage):
        level = sensitivity_one_port(package, env, mode)
        values = np.full(len(grid), level)
    else:
        air_len, diags_len = modeled_air_length(package, mode)
        diags.extend(diags_len)
        values = sensitivity_two_port(package, grid.frequencies, env,
                                      incidence_angle, mode)
        _, ok = pressure_difference_ratio(package.port_spacing,
                                          grid.frequencies, env,
                                          incidence_angle)
        dp = package.port_spacing
        for i in np.flatnonzero(~np.atleast_1d(ok)):
            f_i = float(grid.frequencies[i])
            diags.append(Diagnostic(
                code="port_spacing_exceeds_tenth_wavelength",
                message=f"port spacing {dp:g} m exceeds lambda/10 at "
                        f"{f_i:g} Hz; the small-spacing pressure "
                        f"linearization degrades",
                predicate="port_spacing_m > 0.1 * speed_of_sound_m_s "
                          "/ frequency_hz",
                data={"port_spacing_m": dp, "frequency_hz": f_i,
                      "speed_of_sound_m_s": env.speed_of_sound},
            ))
    response = FrequencyResponse(grid.frequencies, values, "Pa_per_g")
    return Prediction(response=response, diagnostics=tuple(diags))


def _check_mode(mode: str):
    if mode not in ("full", "air_only"):
        raise ValidationError(
            f"mode must be 'full' or 'air_only', got {mode!r}")
