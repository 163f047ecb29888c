"""Measured-sweep ingestion, conversion, and normalization.

Sweep CSV format
----------------
UTF-8 text, LF or CRLF line endings. Lines beginning with ``#`` are
comments and may appear anywhere; a comment of the form ``# key: value``
with a recognized key (unit, label, axis, mount, drive_amplitude_v)
declares metadata. The first non-comment line must be exactly the header

    frequency_hz,value

followed by data rows ``<frequency>,<value>`` with strictly increasing
positive frequencies and strictly positive values (measured magnitudes;
zeros and negatives are rejected at ingestion). At least two rows are
required.

A sidecar file ``<stem>.meta.json`` next to ``<stem>.csv`` may declare the
same metadata keys. Precedence for the unit tag: explicit function
argument, then sidecar, then inline comments; sources that disagree are an
error. For the remaining keys a sidecar value overrides an inline one.
"""

from __future__ import annotations

import json
import math
import os
import re
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (Diagnostic, GridError, SweepFormatError, UnitError,
                     ValidationError)
from .response import FrequencyGrid, FrequencyResponse, check_unit

SWEEP_HEADER = "frequency_hz,value"

#: Metadata keys recognized in sidecars and ``# key: value`` comments.
METADATA_KEYS = ("unit", "label", "axis", "mount", "drive_amplitude_v")

AXIS_TAGS = ("on_axis", "off_axis")
MOUNT_TAGS = ("on_shaker", "off_shaker")

#: Median on/off-shaker ratios below this suggest acoustic leakage is
#: competing with the vibration path (vibration-dominated rigs sit well
#: above it, leakage-dominated ones near 1).
LEAKAGE_RATIO_CEILING = 2.0

_META_COMMENT = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+?)\s*$")


@dataclass(frozen=True)
class SweepMetadata:
    """Optional descriptive fields carried alongside a sweep."""

    label: str | None = None
    axis: str | None = None
    mount: str | None = None
    drive_amplitude_v: float | None = None

    def __post_init__(self):
        if self.axis is not None and self.axis not in AXIS_TAGS:
            raise ValidationError(
                f"axis must be one of {AXIS_TAGS}, got {self.axis!r}")
        if self.mount is not None and self.mount not in MOUNT_TAGS:
            raise ValidationError(
                f"mount must be one of {MOUNT_TAGS}, got {self.mount!r}")
        if self.drive_amplitude_v is not None:
            v = float(self.drive_amplitude_v)
            if not math.isfinite(v) or v < 0.0:
                raise ValidationError(
                    f"drive_amplitude_v must be non-negative, got {v!r}")
            object.__setattr__(self, "drive_amplitude_v", v)

    def as_dict(self) -> dict:
        out = {}
        for key in ("label", "axis", "mount", "drive_amplitude_v"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        return out


@dataclass(frozen=True)
class SweepFile:
    """A loaded sweep: where it came from, the response, and its metadata."""

    source: str
    response: FrequencyResponse
    metadata: SweepMetadata


def db_to_linear(db):
    """Convert decibels (20 log10 convention) to a linear magnitude ratio."""
    return np.power(10.0, np.asarray(db, dtype=float) / 20.0) if \
        np.ndim(db) else 10.0 ** (float(db) / 20.0)


def linear_to_db(value):
    """Convert a positive linear magnitude ratio to decibels (20 log10)."""
    v = np.asarray(value, dtype=float)
    if np.any(v <= 0.0):
        raise ValidationError("linear_to_db requires strictly positive values")
    out = 20.0 * np.log10(v)
    return out if out.ndim else float(out)


def _sidecar_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def _parse_rows(lines, source: str):
    """Yield (line_number, frequency, value) from data rows; collect comments."""
    inline_meta: dict[str, str] = {}
    frequencies: list[float] = []
    values: list[float] = []
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            m = _META_COMMENT.match(stripped)
            if m and m.group(1) in METADATA_KEYS:
                inline_meta[m.group(1)] = m.group(2)
            continue
        if not header_seen:
            if line != SWEEP_HEADER:
                raise SweepFormatError(
                    f"expected header {SWEEP_HEADER!r}, got {line!r}",
                    source, lineno)
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise SweepFormatError(
                f"malformed row (need 2 comma-separated fields): {line!r}",
                source, lineno)
        try:
            f = float(parts[0])
            v = float(parts[1])
        except ValueError:
            raise SweepFormatError(
                f"malformed row (non-numeric field): {line!r}",
                source, lineno) from None
        if not (math.isfinite(f) and math.isfinite(v)):
            raise SweepFormatError(
                f"non-finite entry in row: {line!r}", source, lineno)
        if frequencies and f <= frequencies[-1]:
            raise SweepFormatError(
                f"frequencies must be strictly increasing; {f!r} Hz does not "
                f"exceed the previous row's {frequencies[-1]!r} Hz",
                source, lineno)
        if f <= 0.0:
            raise SweepFormatError(
                f"frequency must be positive, got {f!r}", source, lineno)
        if v <= 0.0:
            raise SweepFormatError(
                f"measured values must be strictly positive, got {v!r}",
                source, lineno)
        frequencies.append(f)
        values.append(v)
    if not header_seen:
        raise SweepFormatError("no header line found", source)
    if len(frequencies) < 2:
        raise SweepFormatError(
            f"need at least 2 data rows, got {len(frequencies)}", source)
    return frequencies, values, inline_meta


def load_sweep(source, unit: str | None = None) -> SweepFile:
    """Read a sweep CSV (and optional sidecar) into a SweepFile.

    Args:
        source: path to the CSV file.
        unit: explicit unit tag; supplies the unit when the file declares
            none and must agree with any declared one.

    Raises:
        SweepFormatError: structural problems, with the offending line.
        UnitError / ValidationError: unit or metadata problems.
    """
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read sweep file {path}: {exc}") from exc
    frequencies, values, inline = _parse_rows(text.splitlines(True), str(path))

    sidecar: dict = {}
    sc_path = _sidecar_path(path)
    if sc_path.exists():
        try:
            sidecar = json.loads(sc_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(
                f"cannot read sidecar {sc_path}: {exc}") from exc
        if not isinstance(sidecar, dict):
            raise ValidationError(f"sidecar {sc_path} must hold a JSON object")
        unknown = sorted(set(sidecar) - set(METADATA_KEYS))
        if unknown:
            raise ValidationError(
                f"sidecar {sc_path} has unknown keys: {', '.join(unknown)}")

    declared = {}
    if inline.get("unit") is not None:
        declared["inline comment"] = inline["unit"]
    if sidecar.get("unit") is not None:
        declared["sidecar"] = str(sidecar["unit"])
    if unit is not None:
        declared["argument"] = unit
    if not declared:
        raise UnitError(
            f"{path}: no unit declared; add a '# unit: ...' comment, a "
            f"sidecar, or pass unit=")
    if len(set(declared.values())) > 1:
        detail = ", ".join(f"{k}={v!r}" for k, v in declared.items())
        raise UnitError(f"{path}: conflicting unit declarations ({detail})")
    resolved_unit = check_unit(next(iter(declared.values())))

    merged = dict(inline)
    merged.update({k: v for k, v in sidecar.items() if v is not None})
    drive = merged.get("drive_amplitude_v")
    metadata = SweepMetadata(
        label=merged.get("label"),
        axis=merged.get("axis"),
        mount=merged.get("mount"),
        drive_amplitude_v=float(drive) if drive is not None else None,
    )
    response = FrequencyResponse(np.array(frequencies), np.array(values),
                                 resolved_unit)
    return SweepFile(source=str(path), response=response, metadata=metadata)


def write_sweep(path, response: FrequencyResponse,
                metadata: SweepMetadata | None = None,
                comments: tuple[str, ...] = ()) -> None:
    """Write a sweep CSV that ``load_sweep`` reads back identically.

    The unit tag goes out as a ``# unit:`` comment; metadata fields follow
    as further comments. float(repr(x)) round-trips, so values survive a
    write/read cycle bit for bit. The write is atomic (temp file plus
    rename in the destination directory).
    """
    path = Path(path)
    lines = []
    for text in comments:
        lines.append(f"# {text}")
    lines.append(f"# unit: {response.unit}")
    if metadata is not None:
        for key, value in metadata.as_dict().items():
            lines.append(f"# {key}: {value}")
    lines.append(SWEEP_HEADER)
    for f, v in zip(response.frequencies.tolist(), response.values.tolist()):
        lines.append(f"{f!r},{v!r}")
    payload = "\n".join(lines) + "\n"
    _atomic_write_text(path, payload)


def _atomic_write_text(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".",
                                    suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise


def resample(response: FrequencyResponse, target) -> FrequencyResponse:
    """Resample onto a new grid by linear interpolation in log-log space.

    Exact on power laws a * f^b (straight lines in log-log), idempotent on
    the same grid, and refuses to extrapolate: every target frequency must
    lie inside the source band. Requires strictly positive values (the
    interpolation works on logarithms).
    """
    if not isinstance(target, FrequencyGrid):
        target = FrequencyGrid(np.asarray(target, dtype=float))
    if np.array_equal(response.frequencies, target.frequencies):
        return FrequencyResponse(response.frequencies, response.values,
                                 response.unit)
    if len(response) < 2:
        raise GridError("resampling needs a source sweep with >= 2 points")
    if target.fmin < response.frequencies[0] \
            or target.fmax > response.frequencies[-1]:
        raise GridError(
            f"target grid [{target.fmin:g}, {target.fmax:g}] Hz extends "
            f"outside the source band [{response.frequencies[0]:g}, "
            f"{response.frequencies[-1]:g}] Hz; no extrapolation")
    if np.any(response.values <= 0.0):
        bad = int(np.flatnonzero(response.values <= 0.0)[0])
        raise ValidationError(
            f"log-log resampling requires positive values; got "
            f"{response.values[bad]!r} at {response.frequencies[bad]!r} Hz")
    log_values = np.interp(np.log(target.frequencies),
                           np.log(response.frequencies),
                           np.log(response.values))
    return FrequencyResponse(target.frequencies, np.exp(log_values),
                             response.unit)


def band_intersection(*responses: FrequencyResponse) -> tuple[float, float]:
    """Common frequency band of several sweeps; error if it is empty."""
    if not responses:
        raise ValidationError("band_intersection needs at least one sweep")
    lo = max(float(r.frequencies[0]) for r in responses)
    hi = min(float(r.frequencies[-1]) for r in responses)
    if not lo < hi:
        raise GridError(
            f"sweeps share no frequency band (intersection would be "
            f"[{lo:g}, {hi:g}] Hz)")
    return lo, hi


def acoustically_refer(raw: FrequencyResponse,
                       acoustic: FrequencyResponse) -> FrequencyResponse:
    """Refer a vibration response to pascals: (V/g) / (V/Pa) = Pa/g.

    Displacement pairs (m/g over m/Pa) work the same way. Both sweeps must
    share a grid (resample first) and be strictly positive.
    """
    pairs = {("V_per_g", "V_per_Pa"), ("m_per_g", "m_per_Pa")}
    if (raw.unit, acoustic.unit) not in pairs:
        raise UnitError(
            f"acoustically_refer expects (V_per_g, V_per_Pa) or "
            f"(m_per_g, m_per_Pa), got ({raw.unit!r}, {acoustic.unit!r})")
    for name, sweep in (("raw", raw), ("acoustic", acoustic)):
        if np.any(sweep.values <= 0.0):
            bad = int(np.flatnonzero(sweep.values <= 0.0)[0])
            raise ValidationError(
                f"{name} sweep must be strictly positive; got "
                f"{sweep.values[bad]!r} at {sweep.frequencies[bad]!r} Hz")
    return raw / acoustic


def flat_acoustic_sensitivity(db_value: float,
                              grid: FrequencyGrid
                              ) -> tuple[FrequencyResponse, Diagnostic]:
    """Expand a single dB re 1 V/Pa figure into a flat V/Pa sweep.

    Datasheets quote one number (usually at 1 kHz); treating it as flat
    across the analysis band is an approximation, so the expansion comes
    with a diagnostic recording it.
    """
    level = db_to_linear(float(db_value))
    values = np.full(len(grid), level)
    diag = Diagnostic(
        code="flat_acoustic_sensitivity",
        message=f"single-point acoustic sensitivity {db_value:g} dB re 1 V/Pa "
                f"expanded as flat across {grid.fmin:g}-{grid.fmax:g} Hz",
        predicate="acoustic_sensitivity(f) == db_to_linear(db_value) for all "
                  "f in band",
        data={"db_re_1v_per_pa": float(db_value), "linear_v_per_pa": level,
              "band_hz": [grid.fmin, grid.fmax]},
    )
    return FrequencyResponse(grid.frequencies, values, "V_per_Pa"), diag


@dataclass(frozen=True)
class OnOffRatio:
    """On-shaker over off-shaker comparison result."""

    ratio: FrequencyResponse
    median: float
    leakage_suspected: bool
    diagnostics: tuple = ()


def on_off_ratio(on: FrequencyResponse,
                 off: FrequencyResponse) -> OnOffRatio:
    """Point-by-point on-shaker / off-shaker ratio with a leakage verdict.

    Both sweeps must share a grid and a unit; the off-shaker sweep must be
    strictly positive. A median ratio below LEAKAGE_RATIO_CEILING flags the
    run as leakage-suspected (the off-shaker response is then a large
    fraction of the on-shaker one, so airborne sound rather than vibration
    may dominate).
    """
    if on.unit != off.unit:
        raise UnitError(
            f"on/off sweeps must share a unit, got {on.unit!r} and "
            f"{off.unit!r}")
    if np.any(off.values <= 0.0):
        bad = int(np.flatnonzero(off.values <= 0.0)[0])
        raise ValidationError(
            f"off-shaker sweep must be strictly positive; got "
            f"{off.values[bad]!r} at {off.frequencies[bad]!r} Hz")
    ratio = on / off
    median = float(np.median(ratio.values))
    suspected = bool(median < LEAKAGE_RATIO_CEILING)
    diags = []
    if suspected:
        diags.append(Diagnostic(
            code="acoustic_leakage_suspected",
            message=f"median on/off ratio {median:g} is below "
                    f"{LEAKAGE_RATIO_CEILING:g}; airborne leakage may "
                    f"dominate the on-shaker response",
            predicate=f"median(on/off) < {LEAKAGE_RATIO_CEILING}",
            data={"median_ratio": median,
                  "ceiling": LEAKAGE_RATIO_CEILING},
        ))
    return OnOffRatio(ratio=ratio, median=median, leakage_suspected=suspected,
                      diagnostics=tuple(diags))


def with_metadata(sweep: SweepFile, **fields) -> SweepFile:
    """Copy of a SweepFile with metadata fields replaced."""
    return replace(sweep, metadata=replace(sweep.metadata, **fields))
