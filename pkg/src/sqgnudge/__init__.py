"""Pseudospectral twin experiments for nudging-based data assimilation of the
subcritical surface quasi-geostrophic equation, with observations blurred by a
delayed moving time average, plus a verification suite for the underlying
operator axioms and inequalities."""

__version__ = "0.1.0"

from .assimilation import (
    GExactTheta,
    GRandomBall,
    GZero,
    IncompleteWindowError,
    NudgeParams,
    ObservationBuffer,
    TwinState,
    check_parameter_window,
    initialize_twin,
    nudged_rhs,
    prepare_reference,
    run_experiment,
    time_averaged_observe,
    twin_step,
)
from .config import ConfigError, ExperimentConfig, echo_config, parse_config
from .diagnostics import (
    ErrorSeries,
    GronwallInstance,
    InsufficientDecayWindowError,
    SuiteReport,
    fit_decay_rate,
    gronwall_check,
    inequality_suite,
)
from .dynamics import (
    BlowUpError,
    SqgParams,
    StepperState,
    advection_term,
    imex_step,
    make_forcing,
    spin_up,
    sqg_rhs,
)
from .observers import (
    GridAlignmentError,
    HypothesisViolationError,
    InterpolantOperator,
    PartitionOfUnity,
    ShiftedVolumeElements,
    SpectralProjection,
    VolumeElements,
    approx_identity_error,
    build_partition,
)
from .spectral import (
    FourierField,
    GridMismatchError,
    PhysicalField,
    WaveGrid,
    field_from_function,
    fractional_laplacian,
    lp_norm,
    random_band_limited,
    read_snapshot,
    riesz_perp,
    sobolev_norm,
    to_physical,
    to_spectral,
    wave_grid,
    write_snapshot,
    zero_field,
)
