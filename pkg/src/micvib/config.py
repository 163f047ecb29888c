"""JSON configuration documents, schema validation, and bundled presets.

Documents carry explicit units in their key names (l1_mm, fn_hz,
radius_m, ...) and are converted to SI objects at this boundary; the rest
of the package never sees document units. Validation is strict: unknown
keys are rejected, and schema violations report the JSON path of the
offending element.

Preset files for several commercial microphones, a default shaker rig, and
default parameter intervals ship inside the package; MICVIB_PRESET_DIR
relocates the preset directory without reinstalling.
"""

from __future__ import annotations

import json
import os
from functools import lru_cache
from importlib import resources
from pathlib import Path

from jsonschema import Draft202012Validator
from jsonschema.exceptions import best_match

from .errors import SchemaError, ValidationError
from .fitting import ParameterIntervals
from .model import (Environment, MicArrayPackage, MicPackage, OnePortPackage,
                    SensingElement, TwoPortPackage, _TwoPortGeometry)
from .rig import PlateSpec, ShakerSpec

MIC_SCHEMA = "mic-config-v1.schema.json"
RIG_SCHEMA = "rig-config-v1.schema.json"
INTERVALS_SCHEMA = "intervals-v1.schema.json"
REPORT_SCHEMA = "report-v1.schema.json"

MIC_TYPES = ("one_port", "two_port", "array_of_one_ports")

PRESET_DIR_ENV = "MICVIB_PRESET_DIR"

# Document-unit scale factors relative to SI.
_MM = 1e3
_UM = 1e6
_MM2 = 1e6

DEFAULT_MEMBRANE = {
    "density_kg_m3": 2300.0,
    "thickness_um": 1.0,
    "area_mm2": 1.0,
}
DEFAULT_Q = 0.707


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    """Return a bundled schema document by file name."""
    text = resources.files("micvib").joinpath("schemas", name) \
        .read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name: str) -> Draft202012Validator:
    schema = load_schema(name)
    Draft202012Validator.check_schema(schema)
    return Draft202012Validator(schema)


def _json_path(error) -> str:
    path = "$"
    for part in error.absolute_path:
        path += f"[{part}]" if isinstance(part, int) else f".{part}"
    return path


def validate_document(document, schema_name: str) -> dict:
    """Validate a parsed JSON document; raise SchemaError with a JSON path."""
    if not isinstance(document, dict):
        raise SchemaError("document must be a JSON object", "$")
    error = best_match(_validator(schema_name).iter_errors(document))
    if error is not None:
        raise SchemaError(error.message, _json_path(error))
    return document


def read_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc


def preset_dir() -> Path:
    """Directory holding preset files (MICVIB_PRESET_DIR overrides bundled)."""
    override = os.environ.get(PRESET_DIR_ENV)
    if override:
        path = Path(override)
        if not path.is_dir():
            raise ValidationError(
                f"{PRESET_DIR_ENV}={override!r} is not a directory")
        return path
    return Path(str(resources.files("micvib").joinpath("presets")))


def resolve_config_source(source) -> Path:
    """Turn a path or preset name into an existing file path.

    Accepts a real file path, a bare preset name (``soundskrit``), or a
    preset-style path whose basename matches a preset
    (``presets/soundskrit.json`` works from any directory).
    """
    path = Path(source)
    if path.is_file():
        return path
    directory = preset_dir()
    for name in dict.fromkeys((path.name, path.name + ".json")):
        candidate = directory / name
        if candidate.is_file():
            return candidate
    raise ValidationError(
        f"no such config: {source!r} (not a file, and no preset named "
        f"{path.name!r} under {directory})")


def mic_from_document(document: dict) -> tuple[MicPackage, Environment]:
    """Validate and convert a mic config document to SI objects."""
    validate_document(document, MIC_SCHEMA)
    membrane = {**DEFAULT_MEMBRANE, **document.get("membrane", {})}
    dynamics = document["dynamics"]
    element = SensingElement(
        membrane_density=membrane["density_kg_m3"],
        membrane_thickness=membrane["thickness_um"] / _UM,
        area=membrane["area_mm2"] / _MM2,
        natural_frequency=dynamics["fn_hz"],
        quality_factor=dynamics.get("q", DEFAULT_Q),
    )
    env_doc = document.get("environment", {})
    env_kwargs = {}
    if "air_density_kg_m3" in env_doc:
        env_kwargs["air_density"] = env_doc["air_density_kg_m3"]
    if "speed_of_sound_m_s" in env_doc:
        env_kwargs["speed_of_sound"] = env_doc["speed_of_sound_m_s"]
    env = Environment(**env_kwargs)

    common = dict(element=element, l1=document["l1_mm"] / _MM,
                  l2=document["l2_mm"] / _MM, label=document["label"])
    kind = document["type"]
    if kind == "one_port":
        return OnePortPackage(**common), env
    cls = TwoPortPackage if kind == "two_port" else MicArrayPackage
    override = document.get("effective_length_mm")
    package = cls(**common, port_spacing=document["dp_mm"] / _MM,
                  effective_length=None if override is None
                  else override / _MM)
    return package, env


def mic_type_name(package: MicPackage) -> str:
    if isinstance(package, OnePortPackage):
        return "one_port"
    if isinstance(package, TwoPortPackage):
        return "two_port"
    if isinstance(package, MicArrayPackage):
        return "array_of_one_ports"
    raise ValidationError(f"unsupported package {type(package).__name__}")


def mic_to_document(package: MicPackage,
                    env: Environment | None = None) -> dict:
    """Serialize a package back to a valid config document.

    Defaults are materialized (membrane and dynamics are always explicit);
    the environment block is included only when it differs from the
    default environment. load -> serialize -> load is the identity at the
    package level.
    """
    element = package.element
    document = {
        "label": package.label or "unlabeled",
        "type": mic_type_name(package),
        "l1_mm": package.l1 * _MM,
        "l2_mm": package.l2 * _MM,
    }
    if isinstance(package, _TwoPortGeometry):
        document["dp_mm"] = package.port_spacing * _MM
        if package.effective_length is not None:
            document["effective_length_mm"] = package.effective_length * _MM
    document["membrane"] = {
        "density_kg_m3": element.membrane_density,
        "thickness_um": element.membrane_thickness * _UM,
        "area_mm2": element.area * _MM2,
    }
    document["dynamics"] = {
        "fn_hz": element.natural_frequency,
        "q": element.quality_factor,
    }
    if env is not None and env != Environment():
        document["environment"] = {
            "air_density_kg_m3": env.air_density,
            "speed_of_sound_m_s": env.speed_of_sound,
        }
    return validate_document(document, MIC_SCHEMA)


def load_mic_config(source) -> tuple[MicPackage, Environment]:
    """Load a mic config from a path or preset name."""
    return mic_from_document(read_json(resolve_config_source(source)))


def rig_from_document(document: dict) -> ShakerSpec:
    validate_document(document, RIG_SCHEMA)
    plate_doc = document["plate"]
    plate = PlateSpec(
        radius=plate_doc["radius_m"],
        thickness=plate_doc["thickness_m"],
        youngs_modulus=plate_doc["youngs_modulus_pa"],
        poisson_ratio=plate_doc["poisson_ratio"],
        density=plate_doc["density_kg_m3"],
        resonance_q=plate_doc.get("resonance_q", 20.0),
    )
    return ShakerSpec(
        plate=plate,
        rolloff_corner=document.get("rolloff_corner_hz", 40.0),
        rolloff_order=document.get("rolloff_order", 2),
        accel_per_volt=document.get("accel_per_volt_g_per_v", 1.0),
        noise_fraction=document.get("noise_fraction", 0.0),
        seed=document.get("seed", 0),
        label=document.get("label", ""),
    )


def load_rig_config(source) -> ShakerSpec:
    return rig_from_document(read_json(resolve_config_source(source)))


def intervals_from_document(document: dict) -> ParameterIntervals:
    validate_document(document, INTERVALS_SCHEMA)
    return ParameterIntervals(
        l1_range=tuple(document["l1_range_m"]),
        l2_range=tuple(document["l2_range_m"]),
        membrane_density_range=tuple(
            document["membrane_density_range_kg_m3"]),
        membrane_thickness_range=tuple(
            document["membrane_thickness_range_m"]),
    )


def load_intervals(source) -> tuple[ParameterIntervals, dict]:
    """Load intervals plus the raw document (which may carry a
    reference_estimate block for report comparisons)."""
    document = read_json(resolve_config_source(source))
    return intervals_from_document(document), document


def load_acoustic_sensitivities() -> dict:
    """The bundled 1 kHz acoustic-sensitivity table (dB re 1 V/Pa)."""
    return read_json(preset_dir() / "acoustic_sensitivities.json")


def _preset_kind(document: dict) -> str:
    if isinstance(document, dict):
        if document.get("type") in MIC_TYPES:
            return "mic"
        if "plate" in document:
            return "rig"
        if "l1_range_m" in document:
            return "intervals"
    return "data"


def list_presets() -> list[dict]:
    """Catalog of bundled (or relocated) preset files.

    Each entry has name, kind (mic / rig / intervals / data), and a short
    summary; mic entries also carry the package type and key dimensions.
    """
    entries = []
    for path in sorted(preset_dir().glob("*.json")):
        try:
            document = read_json(path)
        except ValidationError:
            entries.append({"name": path.stem, "kind": "unreadable",
                            "summary": "invalid JSON"})
            continue
        kind = _preset_kind(document)
        entry = {"name": path.stem, "kind": kind, "path": str(path)}
        if kind == "mic":
            dims = f"l1={document['l1_mm']} mm, l2={document['l2_mm']} mm"
            if "dp_mm" in document:
                dims += f", dp={document['dp_mm']} mm"
            entry["summary"] = f"{document['type']}; {dims}; " \
                               f"fn={document['dynamics']['fn_hz']} Hz"
        elif kind == "rig":
            entry["summary"] = document.get("label", "shaker rig")
        elif kind == "intervals":
            entry["summary"] = document.get("label", "parameter intervals")
        else:
            entry["summary"] = document.get("kind",
                                            document.get("label", "data"))
        entries.append(entry)
    return entries
