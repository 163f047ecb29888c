"""micvib: vibration sensitivity of MEMS microphone packages.

Models the acoustically referred vibration sensitivity (Pa per g) of
one-port and two-port microphone packages from lumped parameters,
normalizes measured frequency sweeps against acoustic calibrations,
synthesizes shaker-rig datasets for closed-loop validation, fits effective
air-column lengths, and propagates parameter-interval uncertainty into
model envelopes. A thin command-line front end (``micvib``) exposes the
same operations for file-based workflows.
"""

__version__ = "0.1.0"

from .errors import (Diagnostic, FitConvergenceError, GridError, MicvibError,
                     NumericalError, OffAxisNullError, PoleError, SchemaError,
                     SweepFormatError, UnitError, ValidationError,
                     VariantError)
from .response import (UNITS, FrequencyGrid, FrequencyResponse, check_unit,
                       divide_units, multiply_units)
from .model import (Environment, MicArrayPackage, MicPackage, OnePortPackage,
                    Prediction, PressureDifferenceRatio, SensingElement,
                    TwoPortPackage, axis_projection, displacement_per_g,
                    displacement_per_pascal, lumped_mass,
                    mechanical_compliance, modeled_air_length, predict_sweep,
                    pressure_difference_ratio, sensitivity_one_port,
                    sensitivity_two_port, STANDARD_GRAVITY)
from .pipeline import (OnOffRatio, SweepFile, SweepMetadata,
                       acoustically_refer, band_intersection, db_to_linear,
                       flat_acoustic_sensitivity, linear_to_db, load_sweep,
                       on_off_ratio, resample, write_sweep)
from .rig import (PlateSpec, ShakerSpec, SyntheticMicSweep,
                  highpass_magnitude, noise_multipliers,
                  plate_natural_frequency, plate_stiffness,
                  resonance_magnitude, shaker_acceleration,
                  synthesize_mic_sweep)
from .fitting import (EnvelopeResult, FitResult, ParameterIntervals,
                      envelope, envelope_ratios, fit_effective_length,
                      golden_section_minimize)
from .config import (list_presets, load_acoustic_sensitivities,
                     load_intervals, load_mic_config, load_rig_config,
                     mic_from_document, mic_to_document, preset_dir,
                     resolve_config_source)
from .report import build_report, file_digest, write_json

__all__ = [name for name in dir() if not name.startswith("_")]
