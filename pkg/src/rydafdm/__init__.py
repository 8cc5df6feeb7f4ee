"""Dual-chirp AFDM delay-Doppler sensing with a Rydberg atomic receiver."""

from .errors import (
    ConfigLoadError,
    ConfigurationError,
    DegenerateNoiseError,
    DimensionError,
    DomainError,
    FrameFailureError,
    NumericalError,
    RydAfdmError,
    SingularSystemError,
    SolverError,
)
from .estimator import (
    DelayDopplerEstimate,
    EstimatorOptions,
    estimate_delay_doppler,
    estimate_frame_frequency,
    ls_recover,
)
from .harness import (
    ExperimentConfig,
    NrmseReport,
    export_spectrum,
    load_config,
    parse_config,
    run_monte_carlo,
    run_sweep,
    run_trial,
    validate,
)
from .measurement import MeasurementTrace, Scenario, calibrate_power, synthesize_traces
from .readout import AtomSystem, bias_pi, gain_upsilon, liouvillian_steady_state, rho12_closed
from .waveform import ChirpGrid, DualChirpFrame, daft_demodulate, idaft_modulate

__version__ = "0.1.0"
