"""Pseudospectral solver and diagnostics for the Schrödinger-Debye system

    i u_t + (1/2) Δu = u v,    mu v_t + v = lam |u|^2

on periodic boxes in one to three dimensions.
"""
from .errors import (
    AliasingError,
    ConfigError,
    FieldError,
    GridError,
    IntegrationDiverged,
    InvariantViolation,
    MultiplierError,
    NoContraction,
    RegionError,
    SDError,
    SnapshotError,
)
from .spectral import (
    ComplexField,
    Grid,
    RealField,
    apply_multiplier,
    forward_transform,
    gradient_l2,
    inverse_transform,
    lp_norm,
    make_grid,
    resample,
    sobolev_norm,
    spectral_l2,
)
from .dynamics import (
    SDParams,
    SDState,
    StepControl,
    evolve,
    nls_evolve,
    nls_step,
    picard_duhamel_solve,
    scaling_transform,
    strang_step,
)
from .diagnostics import (
    DiagnosticsRecord,
    IteratedEnvelope,
    calibrate_beta,
    diagnostics_record,
    energy,
    energy_rate_residual,
    gn_ratio,
    gronwall_constants,
    gronwall_envelope,
    mass,
)
from .bourgain import (
    BourgainParams,
    SpaceTimeTrace,
    bilinear_ratio_uv,
    bilinear_ratio_uw,
    bourgain_norm_u,
    check_region_w,
    in_region_w,
    restriction_norm_v,
)
from .config import ScenarioConfig, load_config
from .scenarios import (
    besse_bidegaray_probe,
    nls_limit_study,
    run_scenario,
    scaling_symmetry_check,
)
from .snapshot import read_snapshot, write_snapshot

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "ConfigError",
    "FieldError",
    "GridError",
    "IntegrationDiverged",
    "InvariantViolation",
    "MultiplierError",
    "NoContraction",
    "RegionError",
    "SDError",
    "SnapshotError",
    "ComplexField",
    "Grid",
    "RealField",
    "apply_multiplier",
    "forward_transform",
    "gradient_l2",
    "inverse_transform",
    "lp_norm",
    "make_grid",
    "resample",
    "sobolev_norm",
    "spectral_l2",
    "SDParams",
    "SDState",
    "StepControl",
    "evolve",
    "nls_evolve",
    "nls_step",
    "picard_duhamel_solve",
    "scaling_transform",
    "strang_step",
    "DiagnosticsRecord",
    "IteratedEnvelope",
    "calibrate_beta",
    "diagnostics_record",
    "energy",
    "energy_rate_residual",
    "gn_ratio",
    "gronwall_constants",
    "gronwall_envelope",
    "mass",
    "BourgainParams",
    "SpaceTimeTrace",
    "bilinear_ratio_uv",
    "bilinear_ratio_uw",
    "bourgain_norm_u",
    "check_region_w",
    "in_region_w",
    "restriction_norm_v",
    "besse_bidegaray_probe",
    "nls_limit_study",
    "run_scenario",
    "scaling_symmetry_check",
    "ScenarioConfig",
    "load_config",
    "read_snapshot",
    "write_snapshot",
]
