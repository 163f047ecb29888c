"""Command-line front end.

One job per invocation, composable through files:

    predict      model a Pa-per-g sweep from a mic config or preset
    analyze      refer a measured V-per-g sweep to pascals (per-tone)
    simulate     synthesize shaker-rig accelerometer and mic sweeps
    fit-leff     fit an effective air-column length to measured data
    envelope     parameter-interval uncertainty bounds around a model
    ratio        on-shaker / off-shaker leakage diagnostic
    presets      list bundled preset files

Exit status: 0 success, 1 validation problem (bad flags, files, configs,
units, grids), 2 numerical problem (poles, directivity nulls, fits pinned
to a bracket edge). Angles are degrees on the command line and radians in
the library. Reports (--report) record inputs by sha256 digest and are
byte-stable when --no-timestamp is given.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import (list_presets, load_intervals, load_mic_config,
                     load_rig_config, mic_to_document, preset_dir,
                     resolve_config_source)
from .errors import NumericalError, ValidationError
from .fitting import envelope, envelope_ratios, fit_effective_length
from .model import MicPackage, OnePortPackage, predict_sweep
from .pipeline import (acoustically_refer, band_intersection,
                       flat_acoustic_sensitivity, load_sweep, on_off_ratio,
                       resample, write_sweep)
from .report import build_report, write_json
from .response import FrequencyGrid, FrequencyResponse
from .rig import shaker_acceleration, synthesize_mic_sweep


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1.

    (The argparse default of 2 is reserved here for numerical failures.)
    """

    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_grid_flags(parser, fmax_default=2000.0):
    parser.add_argument("--fmin", type=float, default=20.0,
                        help="grid start, Hz (default 20)")
    parser.add_argument("--fmax", type=float, default=fmax_default,
                        help=f"grid end, Hz (default {fmax_default:g})")
    parser.add_argument("--points", type=int, default=200,
                        help="log-spaced grid points (default 200)")


def _add_report_flags(parser):
    parser.add_argument("--report", metavar="PATH",
                        help="write a JSON run report here")
    parser.add_argument("--no-timestamp", action="store_true",
                        help="omit the generated_at field for byte-stable "
                             "reports")


def _add_model_flags(parser):
    parser.add_argument("--angle", type=float, default=0.0,
                        help="incidence angle in degrees between port axis "
                             "and excitation (default 0)")
    parser.add_argument("--model", choices=("full", "air-only"),
                        default="full",
                        help="include the membrane term (full) or air "
                             "column only")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="micvib",
                     description="Vibration-sensitivity modeling and "
                                 "measurement analysis for MEMS microphone "
                                 "packages.")
    parser.add_argument("--version", action="version",
                        version=f"micvib {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser, required=True)

    p = sub.add_parser("predict", help="model a Pa-per-g sensitivity sweep")
    p.add_argument("--mic", required=True,
                   help="mic config path or preset name")
    _add_grid_flags(p)
    _add_model_flags(p)
    p.add_argument("--fit", metavar="FIT_REPORT",
                   help="apply the effective length from a fit-leff report "
                        "(full model only)")
    p.add_argument("--out", required=True, help="output CSV path")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("analyze",
                       help="refer a measured V-per-g sweep to Pa per g")
    p.add_argument("--raw", required=True, help="measured V_per_g sweep CSV")
    p.add_argument("--raw-unit", help="unit tag override for --raw")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--acoustic", help="measured V_per_Pa sweep CSV")
    group.add_argument("--acoustic-db", type=float,
                       help="flat acoustic sensitivity, dB re 1 V/Pa")
    p.add_argument("--acoustic-unit", help="unit tag override for --acoustic")
    p.add_argument("--out", required=True, help="output Pa_per_g CSV path")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate",
                       help="synthesize shaker accelerometer and mic sweeps")
    p.add_argument("--mic", required=True,
                   help="mic config path or preset name")
    p.add_argument("--rig", default="shaker_rig",
                   help="rig config path or preset name (default "
                        "shaker_rig)")
    p.add_argument("--drive", type=float, default=0.4,
                   help="shaker drive voltage (default 0.4)")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--acoustic", help="measured V_per_Pa sweep CSV")
    group.add_argument("--acoustic-db", type=float,
                       help="flat acoustic sensitivity, dB re 1 V/Pa")
    _add_grid_flags(p)
    _add_model_flags(p)
    p.add_argument("--noise", type=float, default=None,
                   help="multiplicative noise fraction (default: rig "
                        "config value)")
    p.add_argument("--seed", type=int, default=None,
                   help="noise seed (default: rig config value)")
    p.add_argument("--leakage-pa", type=float, default=0.0,
                   help="flat airborne leakage pressure at the mic, Pa")
    p.add_argument("--out-accel", help="accelerometer sweep CSV (g)")
    p.add_argument("--out-raw", help="raw mic voltage sweep CSV (V)")
    p.add_argument("--out-vg", required=True,
                   help="per-g mic sweep CSV (V per g)")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit-leff",
                       help="fit an effective air-column length to a "
                            "measured Pa-per-g sweep")
    p.add_argument("--measured", required=True,
                   help="measured Pa_per_g sweep CSV")
    p.add_argument("--mic", required=True,
                   help="mic config path or preset name (two-port family)")
    p.add_argument("--angle", type=float, default=0.0,
                   help="incidence angle in degrees (default 0)")
    p.add_argument("--model", choices=("full", "air-only"), default="full",
                   help="must remain 'full'; the fitted length belongs to "
                        "the full model")
    p.add_argument("--out-mic", metavar="PATH",
                   help="write a mic config with the fitted length applied")
    p.add_argument("--report", required=True, metavar="PATH",
                   help="write the fit result report here")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the generated_at field")
    p.set_defaults(func=_cmd_fit_leff)

    p = sub.add_parser("envelope",
                       help="parameter-interval uncertainty envelope")
    p.add_argument("--mic", required=True,
                   help="mic config path or preset name")
    p.add_argument("--intervals", default="parameter_intervals",
                   help="intervals config path or preset name (default "
                        "parameter_intervals)")
    _add_grid_flags(p)
    _add_model_flags(p)
    p.add_argument("--out-prefix", required=True,
                   help="writes <prefix>.lower.csv, .nominal.csv, "
                        ".upper.csv")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_envelope)

    p = sub.add_parser("ratio",
                       help="on-shaker / off-shaker leakage diagnostic")
    p.add_argument("--on", required=True, dest="on_sweep",
                   help="on-shaker sweep CSV")
    p.add_argument("--off", required=True, dest="off_sweep",
                   help="off-shaker sweep CSV")
    p.add_argument("--unit", help="unit tag override for both sweeps")
    p.add_argument("--out", required=True,
                   help="output dimensionless ratio CSV")
    _add_report_flags(p)
    p.set_defaults(func=_cmd_ratio)

    p = sub.add_parser("presets", help="inspect bundled preset files")
    p.add_argument("action", choices=("list",))
    p.set_defaults(func=_cmd_presets)

    return parser


def _mode(args) -> str:
    return args.model.replace("-", "_")


def _grid(args) -> FrequencyGrid:
    return FrequencyGrid.logspace(args.fmin, args.fmax, args.points)


def _angle_rad(args) -> float:
    return math.radians(args.angle)


def _print_warnings(diagnostics):
    if diagnostics:
        print(f"micvib: {len(diagnostics)} warning(s); first: "
              f"{diagnostics[0].message}", file=sys.stderr)


def _emit_report(args, command: str, parameters: dict, inputs: dict,
                 env, units: dict, warnings, payload: dict):
    if not getattr(args, "report", None):
        return
    document = build_report(command, parameters, inputs, env, units,
                            warnings, payload,
                            timestamp=not args.no_timestamp)
    write_json(args.report, document)
    print(f"wrote {args.report}")


def _output_record(path, response: FrequencyResponse) -> dict:
    return {"path": str(path), "points": len(response),
            "unit": response.unit,
            "fmin_hz": float(response.frequencies[0]),
            "fmax_hz": float(response.frequencies[-1])}


def _apply_fit_report(package: MicPackage, fit_report_path) -> MicPackage:
    from .config import read_json
    document = read_json(fit_report_path)
    try:
        length = float(document["payload"]["effective_length_m"])
        converged = bool(document["payload"]["converged"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError(
            f"{fit_report_path}: not a fit-leff report (missing "
            f"payload.effective_length_m)") from None
    if not converged:
        raise ValidationError(
            f"{fit_report_path}: fit did not converge; refusing to apply "
            f"its effective length")
    if isinstance(package, OnePortPackage):
        raise ValidationError(
            "--fit applies to two-port-family packages only")
    return replace(package, effective_length=length)


def _cmd_predict(args) -> int:
    if args.fit and args.model == "air-only":
        raise ValidationError(
            "conflicting flags: --fit carries a full-model effective "
            "length; it cannot be combined with --model air-only")
    mic_path = resolve_config_source(args.mic)
    package, env = load_mic_config(mic_path)
    if args.fit:
        package = _apply_fit_report(package, args.fit)
    prediction = predict_sweep(package, _grid(args), env, _angle_rad(args),
                               _mode(args))
    write_sweep(args.out, prediction.response)
    print(f"wrote {args.out} ({len(prediction.response)} points, "
          f"{prediction.response.unit})")
    _print_warnings(prediction.diagnostics)
    inputs = {"mic_config": mic_path}
    if args.fit:
        inputs["fit_report"] = args.fit
    _emit_report(
        args, "predict",
        {"mic": args.mic, "fmin_hz": args.fmin, "fmax_hz": args.fmax,
         "points": args.points, "angle_deg": args.angle, "model": args.model,
         "out": args.out},
        inputs, env, {"out": prediction.response.unit},
        prediction.diagnostics,
        {"label": package.label,
         "outputs": {"out": _output_record(args.out, prediction.response)}})
    return 0


def _analysis_pair(raw: FrequencyResponse, acoustic: FrequencyResponse):
    """Restrict to the common band and align grids per-tone.

    The raw sweep's own tones inside the band intersection are kept as-is;
    the acoustic sweep is interpolated onto them (log-log). No
    extrapolation can occur because the band is the intersection.
    """
    lo, hi = band_intersection(raw, acoustic)
    keep = (raw.frequencies >= lo) & (raw.frequencies <= hi)
    if int(np.count_nonzero(keep)) < 2:
        raise ValidationError(
            f"fewer than 2 raw tones inside the common band "
            f"[{lo:g}, {hi:g}] Hz")
    raw_band = FrequencyResponse(raw.frequencies[keep], raw.values[keep],
                                 raw.unit)
    acoustic_band = resample(acoustic, raw_band.grid)
    return raw_band, acoustic_band


def _cmd_analyze(args) -> int:
    raw_file = load_sweep(args.raw, unit=args.raw_unit)
    raw = raw_file.response
    warnings = []
    inputs = {"raw": args.raw}
    env = _default_env()
    comments = []
    if args.acoustic is not None:
        acoustic_file = load_sweep(args.acoustic, unit=args.acoustic_unit)
        raw_band, acoustic_band = _analysis_pair(raw, acoustic_file.response)
        inputs["acoustic"] = args.acoustic
        acoustic_desc = {"source": "sweep", "path": args.acoustic}
    else:
        raw_band = raw
        acoustic_band, diag = flat_acoustic_sensitivity(args.acoustic_db,
                                                        raw.grid)
        warnings.append(diag)
        comments.append(f"acoustic sensitivity expanded flat from "
                        f"{args.acoustic_db:g} dB re 1 V/Pa")
        acoustic_desc = {"source": "flat_db",
                         "db_re_1v_per_pa": args.acoustic_db}
    referred = acoustically_refer(raw_band, acoustic_band)
    write_sweep(args.out, referred, comments=tuple(comments))
    print(f"wrote {args.out} ({len(referred)} points, {referred.unit})")
    _print_warnings(warnings)
    _emit_report(
        args, "analyze",
        {"raw": args.raw, "acoustic": acoustic_desc, "out": args.out},
        inputs, env, {"out": referred.unit}, warnings,
        {"band_hz": [float(referred.frequencies[0]),
                     float(referred.frequencies[-1])],
         "outputs": {"out": _output_record(args.out, referred)}})
    return 0


def _default_env():
    from .model import Environment
    return Environment()


def _cmd_simulate(args) -> int:
    mic_path = resolve_config_source(args.mic)
    rig_path = resolve_config_source(args.rig)
    package, env = load_mic_config(mic_path)
    rig = load_rig_config(rig_path)
    if args.noise is not None:
        rig = replace(rig, noise_fraction=args.noise)
    if args.seed is not None:
        rig = replace(rig, seed=args.seed)
    grid = _grid(args)
    prediction = predict_sweep(package, grid, env, _angle_rad(args),
                               _mode(args))
    accel = shaker_acceleration(rig, args.drive, grid)
    inputs = {"mic_config": mic_path, "rig_config": rig_path}
    warnings = list(prediction.diagnostics)
    if args.acoustic is not None:
        acoustic_file = load_sweep(args.acoustic)
        acoustic = resample(acoustic_file.response, grid)
        inputs["acoustic"] = args.acoustic
        acoustic_desc = {"source": "sweep", "path": args.acoustic}
    else:
        acoustic, diag = flat_acoustic_sensitivity(args.acoustic_db, grid)
        warnings.append(diag)
        acoustic_desc = {"source": "flat_db",
                         "db_re_1v_per_pa": args.acoustic_db}
    synthetic = synthesize_mic_sweep(prediction.response, acoustic, accel,
                                     noise_fraction=rig.noise_fraction,
                                     seed=rig.seed,
                                     leakage_pressure_pa=args.leakage_pa)
    warnings.extend(synthetic.diagnostics)

    outputs = {}
    write_sweep(args.out_vg, synthetic.per_g)
    outputs["vg"] = _output_record(args.out_vg, synthetic.per_g)
    print(f"wrote {args.out_vg} ({len(synthetic.per_g)} points, V_per_g)")
    if args.out_accel:
        write_sweep(args.out_accel, accel)
        outputs["accel"] = _output_record(args.out_accel, accel)
        print(f"wrote {args.out_accel} ({len(accel)} points, g_accel)")
    if args.out_raw:
        write_sweep(args.out_raw, synthetic.raw)
        outputs["raw"] = _output_record(args.out_raw, synthetic.raw)
        print(f"wrote {args.out_raw} ({len(synthetic.raw)} points, volt)")
    _print_warnings(warnings)
    _emit_report(
        args, "simulate",
        {"mic": args.mic, "rig": args.rig, "drive_v": args.drive,
         "acoustic": acoustic_desc, "fmin_hz": args.fmin,
         "fmax_hz": args.fmax, "points": args.points,
         "angle_deg": args.angle, "model": args.model,
         "noise_fraction": rig.noise_fraction, "seed": rig.seed,
         "leakage_pa": args.leakage_pa},
        inputs, env,
        {"vg": "V_per_g", "accel": "g_accel", "raw": "volt"},
        warnings, {"outputs": outputs})
    return 0


def _cmd_fit_leff(args) -> int:
    if args.model == "air-only":
        raise ValidationError(
            "conflicting flags: fit-leff fits the full model's effective "
            "length; --model air-only is not allowed")
    mic_path = resolve_config_source(args.mic)
    package, env = load_mic_config(mic_path)
    measured_file = load_sweep(args.measured)
    result = fit_effective_length(measured_file.response, package, env,
                                  _angle_rad(args))
    if not result.converged:
        raise NumericalError(
            f"effective-length fit did not converge: optimum pinned at the "
            f"bracket [{result.bracket[0]:g}, {result.bracket[1]:g}] m "
            f"(best {result.effective_length:g} m); the two-port law does "
            f"not explain this data")
    print(f"effective length: {result.effective_length:.6g} m "
          f"(residual RMS log {result.residual_rms_log:.3g}, "
          f"{result.points_used} points)")
    _print_warnings(result.diagnostics)
    outputs = {}
    if args.out_mic:
        fitted = replace(package, effective_length=result.effective_length)
        write_json(args.out_mic, mic_to_document(fitted, env))
        outputs["fitted_mic_config"] = {"path": args.out_mic}
        print(f"wrote {args.out_mic}")
    _emit_report(
        args, "fit-leff",
        {"measured": args.measured, "mic": args.mic,
         "angle_deg": args.angle, "model": args.model},
        {"measured": args.measured, "mic_config": mic_path}, env,
        {"effective_length": "m"}, result.diagnostics,
        {"effective_length_m": result.effective_length,
         "residual_rms_log": result.residual_rms_log,
         "points_used": result.points_used,
         "converged": result.converged,
         "bracket_m": list(result.bracket),
         "port_spacing_ratio": package.port_spacing
         / result.effective_length,
         "outputs": outputs})
    return 0


def _cmd_envelope(args) -> int:
    mic_path = resolve_config_source(args.mic)
    intervals_path = resolve_config_source(args.intervals)
    package, env = load_mic_config(mic_path)
    intervals, intervals_doc = load_intervals(intervals_path)
    result = envelope(package, _grid(args), intervals, env,
                      _angle_rad(args), _mode(args))
    prefix = Path(args.out_prefix)
    outputs = {}
    for name, curve in (("lower", result.lower), ("nominal", result.nominal),
                        ("upper", result.upper)):
        path = prefix.with_name(prefix.name + f".{name}.csv")
        write_sweep(path, curve)
        outputs[name] = _output_record(path, curve)
        print(f"wrote {path} ({len(curve)} points, {curve.unit})")
    _print_warnings(result.diagnostics)

    ratios = envelope_ratios(result)
    payload = {
        "corners_evaluated": result.corners_evaluated,
        "ratios": ratios,
        "outputs": outputs,
    }
    reference = intervals_doc.get("reference_estimate")
    if reference is not None:
        corner_up = (ratios["upper_over_nominal_median"] - 1.0) * 100.0
        corner_down = (1.0 - ratios["lower_over_nominal_median"]) * 100.0
        payload["uncertainty_comparison"] = {
            "corner_envelope": {
                "upper_increase_percent": corner_up,
                "lower_decrease_percent": corner_down,
            },
            "reference_estimate": {
                "upper_increase_percent":
                    reference["upper_increase_percent"],
                "lower_decrease_percent":
                    reference["lower_decrease_percent"],
            },
            "note": reference.get(
                "note",
                "interval corners do not reproduce the reference estimate; "
                "the parameter variation behind the reference figures is "
                "not recorded, so both are reported rather than forced to "
                "match"),
        }
    _emit_report(
        args, "envelope",
        {"mic": args.mic, "intervals": args.intervals,
         "fmin_hz": args.fmin, "fmax_hz": args.fmax, "points": args.points,
         "angle_deg": args.angle, "model": args.model,
         "out_prefix": args.out_prefix},
        {"mic_config": mic_path, "intervals_config": intervals_path}, env,
        {"lower": result.lower.unit, "nominal": result.nominal.unit,
         "upper": result.upper.unit},
        result.diagnostics, payload)
    return 0


def _cmd_ratio(args) -> int:
    on_file = load_sweep(args.on_sweep, unit=args.unit)
    off_file = load_sweep(args.off_sweep, unit=args.unit)
    on, off = on_file.response, off_file.response
    if not on.same_grid(off):
        lo, hi = band_intersection(on, off)
        keep = (on.frequencies >= lo) & (on.frequencies <= hi)
        if int(np.count_nonzero(keep)) < 2:
            raise ValidationError(
                f"fewer than 2 on-shaker tones inside the common band "
                f"[{lo:g}, {hi:g}] Hz")
        on = FrequencyResponse(on.frequencies[keep], on.values[keep],
                               on.unit)
        off = resample(off, on.grid)
    result = on_off_ratio(on, off)
    write_sweep(args.out, result.ratio)
    print(f"wrote {args.out} ({len(result.ratio)} points, dimensionless)")
    verdict = ("acoustic leakage suspected" if result.leakage_suspected
               else "vibration-dominated")
    print(f"median on/off ratio: {result.median:.4g} ({verdict})")
    _print_warnings(result.diagnostics)
    _emit_report(
        args, "ratio",
        {"on": args.on_sweep, "off": args.off_sweep, "out": args.out},
        {"on": args.on_sweep, "off": args.off_sweep}, _default_env(),
        {"out": "dimensionless"}, result.diagnostics,
        {"median_ratio": result.median,
         "leakage_suspected": result.leakage_suspected,
         "outputs": {"out": _output_record(args.out, result.ratio)}})
    return 0


def _cmd_presets(args) -> int:
    entries = list_presets()
    print(f"preset directory: {preset_dir()}")
    width = max((len(e["name"]) for e in entries), default=4)
    for entry in entries:
        print(f"{entry['name']:<{width}}  {entry['kind']:<9} "
              f"{entry['summary']}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"micvib: validation error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"micvib: numerical error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
