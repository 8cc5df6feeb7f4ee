"""Synthesis of the probe-voltage traces observed by the Rydberg receiver.

The waveform module works in cycles and Hz; the readout module in rad/s. This
module is the single place where the 2*pi conversion happens.

Noise convention: the intrinsic and extrinsic terms are one-sided power
spectral densities (V^2/Hz). A trace sampled at ``f_s`` carries white noise
with per-sample variance ``psd * f_s / 2``, which is what
:attr:`MeasurementTrace.noise_sigma` stores.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.constants import Boltzmann, c as C_LIGHT, epsilon_0, hbar
from scipy.optimize import brentq

from .errors import ConfigurationError, DimensionError, DomainError
from .readout import TWO_PI, AtomSystem, bias_pi, gain_upsilon
from .waveform import (
    ChirpGrid,
    DualChirpFrame,
    ground_truth_fluctuation,
    instantaneous_frequency,
    phase_difference,
)

TAGS = ("A", "B")


def _default_ref_field():
    # LOS field giving a 2*pi x 1 MHz reference Rabi frequency on the default atom
    return hbar * TWO_PI * 1.0e6 / AtomSystem().mu34


@dataclass(frozen=True)
class Scenario:
    """Radar geometry and environment.

    Parameters
    ----------
    target_range : float
        Transmitter-to-target distance L (m).
    ref_range : float
        Transmitter-to-receiver distance L' (m).
    velocity : float
        Radial velocity v_r (m/s); negative for a receding target.
    omega_rf : float
        Carrier angular frequency (rad/s).
    temperature : float
        Ambient temperature T_E (K).
    p_s : float
        Received signal power term of the measurement model (its square root
        enters as a field amplitude, V/m).
    h_gain : float
        LOS channel gain.
    ref_field : float
        LOS field envelope |s| at the receiver (V/m).
    """

    target_range: float = 1000.0
    ref_range: float = 1.0
    velocity: float = 50.0
    omega_rf: float = TWO_PI * 62.76e9
    temperature: float = 300.0
    p_s: float = 1.0
    h_gain: float = 1.0
    ref_field: float = field(default_factory=_default_ref_field)
    k_b: float = Boltzmann
    c_light: float = C_LIGHT

    def __post_init__(self):
        for name in ("target_range", "ref_range", "temperature", "omega_rf", "c_light", "k_b"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not np.isfinite(self.velocity):
            raise DomainError("velocity must be finite")
        if not (np.isfinite(self.p_s) and self.p_s >= 0):
            raise DomainError(f"p_s must be >= 0, got {self.p_s}")
        if not (np.isfinite(self.h_gain) and self.h_gain >= 0):
            raise DomainError(f"h_gain must be >= 0, got {self.h_gain}")
        if not (np.isfinite(self.ref_field) and self.ref_field >= 0):
            raise DomainError(f"ref_field must be >= 0, got {self.ref_field}")
        if not self.tau > self.tau_ref:
            raise DomainError("target path delay must exceed the LOS delay")

    @property
    def tau_ref(self):
        """LOS delay L'/c (s)."""
        return self.ref_range / self.c_light

    @property
    def tau(self):
        """Echo delay 2L/c (s), collinear geometry."""
        return 2.0 * self.target_range / self.c_light

    @property
    def nu_r(self):
        """Doppler shift 2 v_r f_RF / c (Hz)."""
        return 2.0 * self.velocity * self.omega_rf / (TWO_PI * self.c_light)

    def with_power(self, p_s):
        return replace(self, p_s=p_s)


@dataclass(frozen=True)
class MeasurementTrace:
    """Sampled receiver output for one frame and subcarrier."""

    frame_tag: str
    subcarrier: int
    times: np.ndarray
    values: np.ndarray
    bias_values: np.ndarray
    noise_sigma: np.ndarray
    rng_seed: int | None
    grid: ChirpGrid
    t_start: float
    f_s: float

    def __post_init__(self):
        n = len(self.times)
        if not (len(self.values) == len(self.bias_values) == len(self.noise_sigma) == n):
            raise DimensionError("times, values, bias_values and noise_sigma must match")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("times must be strictly increasing")

    @property
    def local_times(self):
        return self.times - self.t_start

    def to_csv(self, path):
        data = np.column_stack([self.times, self.values, self.bias_values, self.noise_sigma])
        np.savetxt(path, data, delimiter=",", header="t,value,bias,sigma", comments="",
                   fmt="%.17g")


def reference_rabi(scenario, atom):
    """Rabi frequency of the static LOS reference (rad/s)."""
    return atom.mu34 / atom.hbar * abs(scenario.h_gain * scenario.ref_field)


def detuning_trajectory(t, m, grid, tau_ref, carrier_detuning=0.0):
    """Instantaneous RF detuning of subcarrier ``m`` seen through the LOS path (rad/s).

    ``t`` is local frame time; the chirp is evaluated at ``t - tau_ref`` on the
    wrap branch that keeps its frequency in ``[0, 1/dt)``.
    """
    t = np.asarray(t, dtype=float)
    slack = 1e-12 * grid.duration
    if np.any(t < -slack) or np.any(t > grid.duration + slack):
        raise DomainError(f"t must lie in [0, {grid.duration}] s")
    if int(m) != m or not 0 <= m < grid.N:
        raise DomainError(f"subcarrier index must be in [0, {grid.N})")
    f = instantaneous_frequency(t - tau_ref, int(m), grid, check=False)
    d = TWO_PI * f + carrier_detuning
    return d.item() if d.ndim == 0 else d


def bose_einstein(omega_rf, temperature, k_b=Boltzmann):
    """Thermal photon occupancy at angular frequency ``omega_rf``."""
    if temperature <= 0:
        return 0.0
    x = hbar * omega_rf / (k_b * temperature)
    # exp(x) overflows past ~709; the occupancy is zero to double precision long before
    return 0.0 if x > 700.0 else 1.0 / np.expm1(x)


def blackbody_field_psd(scenario):
    """Blackbody field spectral density <E_I^2> in (V/m)^2/Hz."""
    n_th = bose_einstein(scenario.omega_rf, scenario.temperature, scenario.k_b)
    return (
        hbar * scenario.omega_rf**3 / (np.pi * epsilon_0 * scenario.c_light**3)
        * (2.0 * n_th + 1.0)
    )


def _noise_psd(omega_l, detuning, scenario, atom):
    pi = bias_pi(omega_l, detuning, atom)
    ups = gain_upsilon(omega_l, detuning, atom)
    s_int = atom.q_e * atom.r_load * pi
    s_ext = (atom.mu34 / atom.hbar) ** 2 * ups**2 * blackbody_field_psd(scenario)
    return s_int, s_ext, pi, ups


def noise_variances(t, m, omega_l, grid, scenario, atom):
    """Intrinsic, extrinsic and total noise PSDs (V^2/Hz) at local time ``t``."""
    if omega_l < 0:
        raise DomainError("omega_l must be >= 0")
    d = detuning_trajectory(t, m, grid, scenario.tau_ref)
    s_int, s_ext, _, _ = _noise_psd(omega_l, d, scenario, atom)
    return s_int, s_ext, s_int + s_ext


def sample_times(grid, f_s):
    """Local sample instants ``k / f_s`` covering ``[0, duration)``."""
    count = int(round(grid.duration * f_s))
    if count < 2:
        raise ConfigurationError(f"f_s={f_s} Hz gives fewer than 2 samples per frame")
    return np.arange(count) / f_s


def required_sample_rate(frame, scenario):
    w = ground_truth_fluctuation(frame, scenario.tau, scenario.tau_ref, scenario.nu_r)
    return 4.0 * max(abs(w[0]), abs(w[1]))


@dataclass(frozen=True)
class SubcarrierProfile:
    """Deterministic quantities of one (frame, subcarrier) pair on the sample grid."""

    tag: str
    m: int
    grid: ChirpGrid
    t_start: float
    t_local: np.ndarray
    detuning: np.ndarray
    bias: np.ndarray
    upsilon: np.ndarray
    psd_int: np.ndarray
    psd_ext: np.ndarray

    @property
    def psd(self):
        return self.psd_int + self.psd_ext


def subcarrier_profiles(frame, scenario, atom, f_s):
    """Bias, gain and noise PSD for every frame/subcarrier (independent of P_s)."""
    omega_l = reference_rabi(scenario, atom)
    out = []
    for tag, grid, t0 in frame.frames():
        t = sample_times(grid, f_s)
        for m in range(grid.N):
            d = detuning_trajectory(t, m, grid, scenario.tau_ref)
            s_int, s_ext, pi, ups = _noise_psd(omega_l, d, scenario, atom)
            out.append(SubcarrierProfile(tag, m, grid, t0, t, d, pi, ups, s_int, s_ext))
    return out


def trace_seed(seed, tag, m):
    """Independent per-trace RNG stream derived from (seed, frame, subcarrier)."""
    return np.random.SeedSequence([int(seed), TAGS.index(tag), int(m)])


def synthesize_traces(frame, scenario, atom, f_s, seed=0, noise=True, branch="unwrapped",
                      profiles=None):
    """Sampled receiver outputs for both frames and all subcarriers (2N traces).

    Parameters
    ----------
    frame : DualChirpFrame
    scenario : Scenario
    atom : AtomSystem
    f_s : float
        Sample rate (Hz); must be at least four times the largest fluctuation
        frequency.
    seed : int
        Master seed; every trace draws from its own substream.
    noise : bool
        Disable to obtain the deterministic part only.
    branch : str
        Chirp branch for the beat phase, see
        :func:`rydafdm.waveform.phase_difference`.
    profiles : list of SubcarrierProfile, optional
        Precomputed output of :func:`subcarrier_profiles` for the same inputs.

    Raises
    ------
    ConfigurationError
        If ``f_s`` is too low to resolve the fluctuation frequency.
    """
    need = required_sample_rate(frame, scenario)
    if f_s < need:
        raise ConfigurationError(
            f"sample rate {f_s:.6g} Hz is below the required minimum {need:.6g} Hz"
        )
    if profiles is None:
        profiles = subcarrier_profiles(frame, scenario, atom, f_s)
    tau, tau_ref, nu_r = scenario.tau, scenario.tau_ref, scenario.nu_r
    n = frame.frame_a.N
    field_gain = atom.mu34 / atom.hbar * np.sqrt(scenario.p_s) / n
    traces = []
    for p in profiles:
        beat = phase_difference(p.t_local, tau, tau_ref, nu_r, p.m, p.grid, branch)
        beat = beat + nu_r * p.t_start
        clean = p.bias + field_gain * p.upsilon * np.cos(TWO_PI * beat)
        sigma = np.sqrt(p.psd * f_s / 2.0)
        if noise:
            rng = np.random.default_rng(trace_seed(seed, p.tag, p.m))
            values = clean + sigma * rng.standard_normal(clean.size)
        else:
            values = clean
        traces.append(MeasurementTrace(
            frame_tag=p.tag, subcarrier=p.m, times=p.t_start + p.t_local, values=values,
            bias_values=p.bias, noise_sigma=sigma, rng_seed=int(seed) if noise else None,
            grid=p.grid, t_start=p.t_start, f_s=f_s,
        ))
    return traces


def amplitude_density(upsilon, p_s, n, psd, mu34, hbar_=hbar):
    """Normalized amplitude with the noise PSD in the denominator (1/sqrt(s))."""
    return mu34 * np.abs(upsilon) * np.sqrt(p_s) / (hbar_ * np.sqrt(n * psd))


def effective_gain(n):
    """LOS gain implied by the measurement model: the normalized trace equals
    ``rho * h * cos(...)`` with ``h = 1/sqrt(N)``."""
    return 1.0 / np.sqrt(n)


def snr_from_profiles(profiles, p_s, atom):
    """Average received SNR (linear).

    Per frame, ``h^2 T_f (1/N) sum_m <rho_m^2>_t`` over the frame's own
    integration window ``T_f``; the two frames are then averaged.
    """
    n = profiles[0].grid.N
    h2 = effective_gain(n) ** 2
    per_frame = {}
    for p in profiles:
        rho2 = amplitude_density(p.upsilon, p_s, n, p.psd, atom.mu34, atom.hbar) ** 2
        per_frame.setdefault(p.tag, []).append(h2 * p.grid.duration * rho2.mean())
    return float(np.mean([np.mean(v) for v in per_frame.values()]))


def average_snr(traces, scenario, atom, floor_db=-300.0):
    """Average SNR of a trace set in dB (``floor_db`` when it is zero)."""
    if not traces:
        raise DimensionError("no traces")
    omega_l = reference_rabi(scenario, atom)
    profiles = []
    for tr in traces:
        d = detuning_trajectory(tr.local_times, tr.subcarrier, tr.grid, scenario.tau_ref)
        s_int, s_ext, pi, ups = _noise_psd(omega_l, d, scenario, atom)
        profiles.append(SubcarrierProfile(tr.frame_tag, tr.subcarrier, tr.grid, tr.t_start,
                                          tr.local_times, d, pi, ups, s_int, s_ext))
    return to_db(snr_from_profiles(profiles, scenario.p_s, atom), floor_db)


def instantaneous_snr(grid, t, scenario, atom):
    """Linear SNR of one frame at a single local instant."""
    omega_l = reference_rabi(scenario, atom)
    acc = 0.0
    for m in range(grid.N):
        d = detuning_trajectory(t, m, grid, scenario.tau_ref)
        s_int, s_ext, _, ups = _noise_psd(omega_l, d, scenario, atom)
        acc += amplitude_density(ups, scenario.p_s, grid.N, s_int + s_ext, atom.mu34, atom.hbar) ** 2
    return float(effective_gain(grid.N) ** 2 * grid.duration * acc / grid.N)


def to_db(lin, floor_db=-300.0):
    return float(10.0 * np.log10(lin)) if lin > 0 else floor_db


def calibrate_power(frame, scenario, atom, f_s, target_db, tol_db=1e-3, profiles=None):
    """Received power term giving ``target_db`` average SNR, found by bracketing root search."""
    if profiles is None:
        profiles = subcarrier_profiles(frame, scenario, atom, f_s)

    def miss(log_p):
        lin = snr_from_profiles(profiles, 10.0**log_p, atom)
        if lin <= 0:
            raise ConfigurationError("SNR is identically zero; cannot calibrate P_s")
        return 10.0 * np.log10(lin) - target_db

    lo, hi = -60.0, 60.0
    while miss(lo) > 0:
        lo -= 60.0
    while miss(hi) < 0:
        hi += 60.0
    # SNR is linear in P_s, so a tolerance in log10(P_s) is a tolerance in dB / 10
    log_p = brentq(miss, lo, hi, xtol=tol_db / 10.0, rtol=1e-15)
    return 10.0**log_p
