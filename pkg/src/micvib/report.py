"""Run reports: deterministic JSON documents with full provenance.

A report records the tool version, the exact command, the parameters, a
sha256 digest of every input file, the environment constants in force,
unit tags for every emitted quantity, structured warnings, and the result
payload. With timestamps suppressed, identical inputs and flags produce
byte-identical report files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import REPORT_SCHEMA, validate_document
from .errors import Diagnostic
from .model import Environment

TOOL_NAME = "micvib"


def file_digest(path) -> str:
    """Hex sha256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def environment_document(env: Environment) -> dict:
    return {
        "air_density_kg_m3": env.air_density,
        "speed_of_sound_m_s": env.speed_of_sound,
        "standard_gravity_m_s2": env.standard_gravity,
    }


def describe_inputs(paths: dict) -> dict:
    """Digest a {role_name: path} mapping into the report inputs block."""
    out = {}
    for name, path in paths.items():
        out[name] = {"path": str(path), "sha256": file_digest(path)}
    return out


def build_report(command: str, parameters: dict, inputs: dict,
                 env: Environment, units: dict, warnings,
                 payload: dict, timestamp: bool = True) -> dict:
    """Assemble and schema-validate a report document.

    warnings may be Diagnostic objects or plain dicts; inputs is a
    {role: path} mapping (digested here) or an already-digested block.
    """
    if inputs and all(isinstance(v, (str, Path)) for v in inputs.values()):
        inputs = describe_inputs(inputs)
    document = {
        "tool": TOOL_NAME,
        "version": __version__,
        "command": command,
        "parameters": parameters,
        "inputs": inputs,
        "environment": environment_document(env),
        "units": units,
        "warnings": [w.as_dict() if isinstance(w, Diagnostic) else dict(w)
                     for w in warnings],
        "payload": payload,
    }
    if timestamp:
        document["generated_at"] = datetime.now(timezone.utc) \
            .isoformat(timespec="seconds")
    return validate_document(document, REPORT_SCHEMA)


def write_json(path, document: dict) -> None:
    """Atomically write a JSON document (sorted keys, trailing newline)."""
    path = Path(path)
    payload = json.dumps(document, indent=2, sort_keys=True,
                         ensure_ascii=False) + "\n"
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
