"""Effective-length fitting and interval-corner uncertainty envelopes.

The two-port vibration model needs an air-column length; for packages
where the geometric guess l1 + l2 is poor (arrays especially), the length
is fitted to a measured Pa-per-g sweep by minimizing the RMS log residual
between measurement and model. The objective is smooth and unimodal in the
length, so a derivative-free golden-section search on a wide bracket is
enough.

Parameter uncertainty is propagated as intervals: the referred sensitivity
is monotone in each of l1, l2, membrane density, and membrane thickness,
so evaluating the model at the 2^4 interval corners brackets it exactly;
the envelope keeps the pointwise min and max over the corners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import Diagnostic, ValidationError, VariantError
from .model import (Environment, MicPackage, OnePortPackage,
                    _TwoPortGeometry, predict_sweep, sensitivity_two_port)
from .response import FrequencyGrid, FrequencyResponse

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0

#: Fits with RMS log residual above this look like the wrong model shape
#: (a clean two-port law leaves residuals orders of magnitude smaller).
HIGH_RESIDUAL_RMS_LOG = 0.1

#: Bracket for the length search, as multiples of the port spacing.
BRACKET_LOW_FACTOR = 0.01
BRACKET_HIGH_FACTOR = 10.0

#: Fractional distance from a bracket edge under which the optimum is
#: considered pinned (bracket exhausted rather than converged).
EDGE_PIN_FRACTION = 1e-6


def golden_section_minimize(fun, lo: float, hi: float,
                            rel_tol: float = 1e-9) -> float:
    """Minimize a unimodal scalar function on [lo, hi].

    Classic golden-section search with the iteration count fixed up front
    from the bracket width and tolerance. Returns the midpoint of the final
    bracket. rel_tol is relative to hi.
    """
    lo = float(lo)
    hi = float(hi)
    if not lo < hi:
        raise ValidationError(f"need lo < hi, got {lo!r} and {hi!r}")
    if rel_tol <= 0.0:
        raise ValidationError("rel_tol must be positive")
    tol = rel_tol * abs(hi)
    span = hi - lo
    if span <= tol:
        return 0.5 * (lo + hi)
    steps = int(math.ceil(math.log(tol / span) / math.log(INV_PHI)))
    a = lo + INV_PHI_SQ * span
    b = lo + INV_PHI * span
    fa = fun(a)
    fb = fun(b)
    for _ in range(steps):
        if fa < fb:
            hi = b
            b, fb = a, fa
            span = hi - lo
            a = lo + INV_PHI_SQ * span
            fa = fun(a)
        else:
            lo = a
            a, fa = b, fb
            span = hi - lo
            b = lo + INV_PHI * span
            fb = fun(b)
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class FitResult:
    """Outcome of an effective-length fit.

    effective_length is in meters and positive whenever converged is True;
    converged is False when the optimum pinned to an edge of the search
    bracket (the model family then cannot explain the data inside it).
    residual_rms_log is the RMS of ln(measured / model) at the optimum.
    """

    effective_length: float
    residual_rms_log: float
    points_used: int
    converged: bool
    bracket: tuple[float, float]
    diagnostics: tuple = field(default_factory=tuple)


def fit_effective_length(measured: FrequencyResponse, package: MicPackage,
                         env: Environment | None = None,
                         incidence_angle: float = 0.0,
                         rel_tol: float = 1e-9) -> FitResult:
    """Fit the air-column length of a two-port-family package to data.

    Minimizes sum over points of (ln measured - ln model)^2 with the
    full-model closed form evaluated at the candidate length. The bracket
    is [port_spacing / 100, 10 * port_spacing]. Needs a Pa_per_g sweep with
    at least 3 strictly positive points.

    Large residuals at the optimum (RMS log above HIGH_RESIDUAL_RMS_LOG)
    do not fail the fit but attach a diagnostic: the data's slope is then
    probably not the modeled 1/f.
    """
    env = env or Environment()
    if isinstance(package, OnePortPackage) \
            or not isinstance(package, _TwoPortGeometry):
        raise VariantError(
            "effective-length fitting applies to the two-port family")
    if measured.unit != "Pa_per_g":
        raise ValidationError(
            f"measured sweep must be Pa_per_g, got {measured.unit!r}")
    if len(measured) < 3:
        raise ValidationError(
            f"need at least 3 measured points, got {len(measured)}")
    if np.any(measured.values <= 0.0):
        bad = int(np.flatnonzero(measured.values <= 0.0)[0])
        raise ValidationError(
            f"measured values must be strictly positive for a log-domain "
            f"fit; got {measured.values[bad]!r} at "
            f"{measured.frequencies[bad]!r} Hz")

    log_measured = np.log(measured.values)
    freqs = measured.frequencies

    def objective(length: float) -> float:
        candidate = replace(package, effective_length=length)
        model = sensitivity_two_port(candidate, freqs, env, incidence_angle,
                                     mode="full")
        r = log_measured - np.log(model)
        return float(r @ r)

    lo = BRACKET_LOW_FACTOR * package.port_spacing
    hi = BRACKET_HIGH_FACTOR * package.port_spacing
    best = golden_section_minimize(objective, lo, hi, rel_tol)

    span = hi - lo
    pinned = best - lo <= EDGE_PIN_FRACTION * span \
        or hi - best <= EDGE_PIN_FRACTION * span
    rms = math.sqrt(objective(best) / len(measured))

    diags = []
    if pinned:
        diags.append(Diagnostic(
            code="fit_bracket_exhausted",
            message=f"optimum pinned to the search bracket "
                    f"[{lo:g}, {hi:g}] m; the two-port law cannot explain "
                    f"the data with any in-bracket length",
            predicate="best <= lo + eps or best >= hi - eps",
            data={"best_m": best, "bracket_m": [lo, hi]},
        ))
    elif rms > HIGH_RESIDUAL_RMS_LOG:
        diags.append(Diagnostic(
            code="fit_high_residual",
            message=f"RMS log residual {rms:g} exceeds "
                    f"{HIGH_RESIDUAL_RMS_LOG:g}; measured slope likely "
                    f"deviates from the modeled 1/f law",
            predicate=f"residual_rms_log > {HIGH_RESIDUAL_RMS_LOG}",
            data={"residual_rms_log": rms},
        ))
    return FitResult(effective_length=best, residual_rms_log=rms,
                     points_used=len(measured), converged=not pinned,
                     bracket=(lo, hi), diagnostics=tuple(diags))


def _check_range(name: str, rng) -> tuple[float, float]:
    try:
        lo, hi = (float(rng[0]), float(rng[1]))
    except (TypeError, ValueError, IndexError):
        raise ValidationError(
            f"{name} must be a (low, high) pair, got {rng!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValidationError(f"{name} bounds must be finite")
    if lo <= 0.0:
        raise ValidationError(f"{name} bounds must be positive, got {lo!r}")
    if lo > hi:
        raise ValidationError(
            f"{name} must satisfy low <= high, got {lo!r} > {hi!r}")
    return lo, hi


@dataclass(frozen=True)
class ParameterIntervals:
    """Uncertainty intervals for the envelope, SI units.

    Degenerate intervals (low == high) are allowed and pin that parameter.
    Port spacing is excluded on purpose: it is a measured distance on the
    package, not an uncertain material property.
    """

    l1_range: tuple[float, float]
    l2_range: tuple[float, float]
    membrane_density_range: tuple[float, float]
    membrane_thickness_range: tuple[float, float]

    def __post_init__(self):
        for name in ("l1_range", "l2_range", "membrane_density_range",
                     "membrane_thickness_range"):
            object.__setattr__(self, name,
                               _check_range(name, getattr(self, name)))


@dataclass(frozen=True)
class EnvelopeResult:
    """Pointwise envelope over the interval corners, plus the nominal curve."""

    lower: FrequencyResponse
    nominal: FrequencyResponse
    upper: FrequencyResponse
    corners_evaluated: int
    diagnostics: tuple = field(default_factory=tuple)


def _corner_package(package: MicPackage, l1: float, l2: float,
                    rho_m: float, t_m: float) -> MicPackage:
    element = replace(package.element, membrane_density=rho_m,
                      membrane_thickness=t_m)
    return replace(package, element=element, l1=l1, l2=l2)


def envelope(package: MicPackage, grid: FrequencyGrid,
             intervals: ParameterIntervals,
             env: Environment | None = None,
             incidence_angle: float = 0.0,
             mode: str = "full") -> EnvelopeResult:
    """Sensitivity envelope from interval corners of (l1, l2, rho_m, t_m).

    The referred sensitivity is monotone in each interval parameter, so
    the pointwise min and max over the 16 corners are the exact interval
    bounds. The nominal curve uses the package as given; the envelope
    always contains it when the nominal parameters lie inside the
    intervals. Diagnostics come from the nominal prediction (validity
    flags are geometry-driven and identical across corners).
    """
    env = env or Environment()
    if not isinstance(grid, FrequencyGrid):
        grid = FrequencyGrid(grid)
    nominal = predict_sweep(package, grid, env, incidence_angle, mode)
    lower = np.array(nominal.response.values)
    upper = np.array(nominal.response.values)
    corners = 0
    for l1 in intervals.l1_range:
        for l2 in intervals.l2_range:
            for rho_m in intervals.membrane_density_range:
                for t_m in intervals.membrane_thickness_range:
                    corner = _corner_package(package, l1, l2, rho_m, t_m)
                    pred = predict_sweep(corner, grid, env, incidence_angle,
                                         mode)
                    np.minimum(lower, pred.response.values, out=lower)
                    np.maximum(upper, pred.response.values, out=upper)
                    corners += 1
    unit = nominal.response.unit
    return EnvelopeResult(
        lower=FrequencyResponse(grid.frequencies, lower, unit),
        nominal=nominal.response,
        upper=FrequencyResponse(grid.frequencies, upper, unit),
        corners_evaluated=corners,
        diagnostics=nominal.diagnostics,
    )


def envelope_ratios(result: EnvelopeResult) -> dict:
    """Median upper/nominal and lower/nominal ratios of an envelope.

    For the two-port family the ratios are frequency independent (every
    corner scales the same 1/f law), so the medians describe the whole
    band; the spread fields record how far any point strays from the
    median, which should be at rounding level for pure scaling.
    """
    if np.any(result.nominal.values <= 0.0):
        raise ValidationError("nominal curve must be strictly positive")
    up = result.upper.values / result.nominal.values
    lo = result.lower.values / result.nominal.values
    return {
        "upper_over_nominal_median": float(np.median(up)),
        "lower_over_nominal_median": float(np.median(lo)),
        "upper_over_nominal_spread": float(np.ptp(up)),
        "lower_over_nominal_spread": float(np.ptp(lo)),
    }
