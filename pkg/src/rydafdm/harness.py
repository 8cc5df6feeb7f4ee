"""Experiment orchestration: configuration, single trials, Monte Carlo sweeps,
spectrum export and the physics validation suite.

Configuration files are sectioned ``key = value`` text read with
:mod:`configparser`. Every key, its unit and its default is listed in
:data:`SCHEMA`; omitted keys take their defaults and unknown keys are
rejected.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigLoadError, FrameFailureError, RydAfdmError, SingularSystemError
from .estimator import (
    EstimatorOptions,
    estimate_delay_doppler,
    ls_recover,
    normalize,
    weighted_spectrum,
)
from .measurement import (
    Scenario,
    calibrate_power,
    subcarrier_profiles,
    synthesize_traces,
    _default_ref_field,
)
from .readout import (
    A0,
    TWO_PI,
    AtomSystem,
    bias_pi,
    gain_upsilon,
    liouvillian_steady_state,
    rho12_closed,
)
from .waveform import DualChirpFrame, ground_truth_fluctuation

log = logging.getLogger(__name__)


def _float_list(text):
    return tuple(float(v) for v in text.replace(",", " ").split())


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    return None if text.strip().lower() in ("", "none") else float(text)


def _band(text):
    if text.strip().lower() in ("", "none"):
        return None
    lo, hi = _float_list(text)
    return (lo, hi)


# section -> key -> (parser, default, unit / description)
SCHEMA = {
    "waveform": {
        "N": (int, 6, "number of chirp subcarriers"),
        "bandwidth": (float, 1.0e6, "Hz; sample interval is 1/bandwidth"),
        "c1_a": (float, 0.25, "post-chirp of frame A (dimensionless)"),
        "c1_b": (float, 0.5, "post-chirp of frame B (dimensionless)"),
        "c2": (float, math.sqrt(2.0), "pre-chirp (dimensionless)"),
        "split_fraction": (float, 0.5, "frame A share of the total duration, in (0, 1)"),
    },
    "atom": {
        "probe_rabi": (float, 5.8e6, "Hz (cyclic)"),
        "coupling_rabi": (float, 1.0e6, "Hz (cyclic)"),
        "gamma2": (float, 5.2e6, "Hz (cyclic)"),
        "gamma3": (float, 1.0e4, "Hz (cyclic)"),
        "gamma4": (float, 1.0e4, "Hz (cyclic)"),
        "mu12": (float, 2.586, "units of q*a0"),
        "mu34": (float, 229.0, "units of q*a0"),
        "density": (float, 4.89e16, "atoms per m^3"),
        "cell_length": (float, 0.02, "m"),
        "lambda_p": (float, 852e-9, "m"),
        "lambda_c": (float, 509e-9, "m"),
        "p_in": (float, 100e-6, "W, probe power on the photodetector"),
        "eta": (float, 0.8, "photodetector quantum efficiency"),
        "r_load": (float, 1.0e3, "ohm"),
        "c0_prefactor": (float, 2.0, "numeric prefactor of the optical depth"),
    },
    "scenario": {
        "target_range": (float, 1000.0, "m"),
        "ref_range": (float, 1.0, "m"),
        "velocity": (float, 50.0, "m/s, negative for a receding target"),
        "carrier": (float, 62.76e9, "Hz (cyclic)"),
        "temperature": (float, 300.0, "K"),
        "h_gain": (float, 1.0, "LOS channel gain"),
        "ref_field": (float, None, "V/m, LOS field at the receiver"),
        "p_s": (_opt_float, None, "received power term; exclusive with target_snr_db"),
        "target_snr_db": (_opt_float, None, "dB; exclusive with p_s (default 30)"),
    },
    "run": {
        "fs_multiplier": (float, 64.0, "sample rate in units of the bandwidth"),
        "seed": (int, 0, "master seed"),
        "trials": (int, 200, "Monte Carlo trials per SNR point"),
        "snr_db": (_float_list, (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0), "dB list"),
        "delta_c1": (_float_list, (0.25, 0.1, 0.001), "post-chirp differences to sweep"),
        "baseline_delta_c1": (float, 0.001, "post-chirp difference of the spectrum baseline"),
        "output_dir": (str, "results", "directory for sweep and spectrum outputs"),
        "noise": (_bool, True, "inject receiver noise"),
        "zero_pad": (int, 8, "FFT zero-padding factor"),
        "max_iter": (int, 50, "Newton iteration cap"),
        "newton_tol": (float, 1e-10, "relative objective gain that stops Newton"),
        "confidence_ratio": (float, 3.0, "peak / median threshold for exclusion"),
        "band": (_band, None, "Hz pair 'lo, hi' for the coarse search, default (0, f_s/2)"),
    },
}

DEFAULT_TARGET_SNR_DB = 30.0


@dataclass(frozen=True)
class WaveformConfig:
    N: int = 6
    bandwidth: float = 1.0e6
    c1_a: float = 0.25
    c1_b: float = 0.5
    c2: float = math.sqrt(2.0)
    split_fraction: float = 0.5

    @property
    def delta_t(self):
        return 1.0 / self.bandwidth

    def frame(self, c1_b=None):
        """Dual-chirp frame; ``c1_b`` overrides frame B's post-chirp."""
        return DualChirpFrame.build(
            self.N, self.delta_t, self.c1_a, self.c1_b if c1_b is None else c1_b, self.c2,
            split_fraction=self.split_fraction,
        )


@dataclass(frozen=True)
class RunConfig:
    fs_multiplier: float = 64.0
    seed: int = 0
    trials: int = 200
    snr_db: tuple = (10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0)
    delta_c1: tuple = (0.25, 0.1, 0.001)
    baseline_delta_c1: float = 0.001
    output_dir: str = "results"
    noise: bool = True
    zero_pad: int = 8
    max_iter: int = 50
    newton_tol: float = 1e-10
    confidence_ratio: float = 3.0
    band: tuple | None = None

    def estimator_options(self):
        return EstimatorOptions(
            zero_pad=self.zero_pad, max_iter=self.max_iter, tol=self.newton_tol,
            confidence_ratio=self.confidence_ratio, band=self.band,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    waveform: WaveformConfig = field(default_factory=WaveformConfig)
    atom: AtomSystem = field(default_factory=AtomSystem)
    scenario: Scenario = field(default_factory=Scenario)
    run: RunConfig = field(default_factory=RunConfig)
    target_snr_db: float | None = DEFAULT_TARGET_SNR_DB
    raw: tuple = ()

    @property
    def sample_rate(self):
        return self.run.fs_multiplier * self.waveform.bandwidth

    @property
    def config_hash(self):
        text = "\n".join(f"{s}.{k}={v!r}" for s, k, v in self.raw)
        return hashlib.sha256(text.encode()).hexdigest()[:16]


def _check(key, ok, message):
    if not ok:
        raise ConfigLoadError(key, message)


def _validate(values):
    w, a, s, r = (values[k] for k in ("waveform", "atom", "scenario", "run"))
    _check("waveform.N", w["N"] >= 1, "N must be >= 1")
    _check("waveform.bandwidth", w["bandwidth"] > 0, "bandwidth must be > 0")
    _check("waveform.split_fraction", 0 < w["split_fraction"] < 1,
           "split_fraction must lie in (0, 1)")
    for key, value in a.items():
        if key == "eta":
            _check("atom.eta", 0 < value <= 1, "eta must lie in (0, 1]")
        else:
            _check(f"atom.{key}", math.isfinite(value) and value > 0, f"{key} must be > 0")
    for key in ("target_range", "ref_range", "carrier", "temperature"):
        _check(f"scenario.{key}", s[key] > 0, f"{key} must be > 0")
    _check("scenario.velocity", math.isfinite(s["velocity"]), "velocity must be finite")
    _check("scenario.h_gain", s["h_gain"] >= 0, "h_gain must be >= 0")
    if s["ref_field"] is not None:
        _check("scenario.ref_field", s["ref_field"] >= 0, "ref_field must be >= 0")
    _check("scenario.target_range", 2.0 * s["target_range"] > s["ref_range"],
           "echo path 2*target_range must exceed ref_range")
    _check("scenario.p_s", s["p_s"] is None or s["target_snr_db"] is None,
           "give exactly one of p_s and target_snr_db")
    if s["p_s"] is not None:
        _check("scenario.p_s", s["p_s"] >= 0, "p_s must be >= 0")
    _check("run.fs_multiplier", r["fs_multiplier"] > 0, "fs_multiplier must be > 0")
    _check("run.trials", r["trials"] >= 1, "trials must be >= 1")
    _check("run.snr_db", len(r["snr_db"]) >= 1, "snr_db needs at least one value")
    _check("run.delta_c1", all(d != 0 for d in r["delta_c1"]), "delta_c1 values must be nonzero")
    _check("run.baseline_delta_c1", r["baseline_delta_c1"] != 0, "must be nonzero")
    _check("run.zero_pad", r["zero_pad"] >= 4, "zero_pad must be >= 4")
    _check("run.max_iter", r["max_iter"] >= 1, "max_iter must be >= 1")
    _check("waveform.c1_b", w["c1_a"] != w["c1_b"], "c1_a and c1_b must differ")


def _build(values, raw):
    w, a, s, r = (values[k] for k in ("waveform", "atom", "scenario", "run"))
    atom = AtomSystem(
        omega_p_rabi=TWO_PI * a["probe_rabi"], omega_c_rabi=TWO_PI * a["coupling_rabi"],
        gamma2=TWO_PI * a["gamma2"], gamma3=TWO_PI * a["gamma3"], gamma4=TWO_PI * a["gamma4"],
        mu12=a["mu12"] * AtomSystem.q_e * A0, mu34=a["mu34"] * AtomSystem.q_e * A0,
        n0_density=a["density"], cell_length=a["cell_length"], lambda_p=a["lambda_p"],
        lambda_c=a["lambda_c"], p_in=a["p_in"], eta=a["eta"], r_load=a["r_load"],
        c0_prefactor=a["c0_prefactor"],
    )
    ref_field = s["ref_field"]
    if ref_field is None:
        ref_field = _default_ref_field()
    target = s["target_snr_db"]
    if s["p_s"] is None and target is None:
        target = DEFAULT_TARGET_SNR_DB
    scenario = Scenario(
        target_range=s["target_range"], ref_range=s["ref_range"], velocity=s["velocity"],
        omega_rf=TWO_PI * s["carrier"], temperature=s["temperature"],
        p_s=1.0 if s["p_s"] is None else s["p_s"], h_gain=s["h_gain"], ref_field=ref_field,
    )
    return ExperimentConfig(
        waveform=WaveformConfig(**w), atom=atom, scenario=scenario, run=RunConfig(**r),
        target_snr_db=target, raw=raw,
    )


def parse_config(text):
    """Build an :class:`ExperimentConfig` from configuration text."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigLoadError("<file>", f"cannot parse: {exc}") from exc
    values = {sec: {k: d for k, (_, d, _) in keys.items()} for sec, keys in SCHEMA.items()}
    raw = []
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigLoadError(sec, "unknown section")
        for key, text_value in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigLoadError(f"{sec}.{key}", "unknown key")
            conv = SCHEMA[sec][key][0]
            try:
                values[sec][key] = conv(text_value)
            except ValueError as exc:
                raise ConfigLoadError(f"{sec}.{key}", f"bad value {text_value!r}: {exc}") from exc
            raw.append((sec, key, values[sec][key]))
    _validate(values)
    try:
        return _build(values, tuple(sorted(raw)))
    except RydAfdmError as exc:
        raise ConfigLoadError("<config>", str(exc)) from exc


def load_config(path):
    """Read and validate a configuration file; omitted keys keep their defaults."""
    path = Path(path)
    if not path.is_file():
        raise ConfigLoadError(str(path), "configuration file not found")
    return parse_config(path.read_text())


def default_config_text():
    """Commented configuration file listing every key with its default."""
    lines = []
    for sec, keys in SCHEMA.items():
        lines.append(f"[{sec}]")
        for key, (_, default, doc) in keys.items():
            if isinstance(default, tuple):
                default = ", ".join(repr(v) for v in default)
            lines.append(f"# {doc}")
            lines.append(f"# {key} = {'' if default is None else default}")
        lines.append("")
    return "\n".join(lines)


# -- trials ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrialOutcome:
    """Result of one simulated measurement and estimation."""

    snr_db: float | None
    p_s: float
    seed: int
    estimate: object = None
    failure: str | None = None

    @property
    def ok(self):
        return self.estimate is not None

    def errors(self, scenario):
        """Relative range and velocity errors ``|z_hat - z| / |z|``."""
        if not self.ok:
            return None
        return (
            abs(self.estimate.range_hat - scenario.target_range) / abs(scenario.target_range),
            abs(self.estimate.velocity_hat - scenario.velocity) / abs(scenario.velocity),
        )

    def as_dict(self):
        out = {"snr_db": self.snr_db, "p_s": self.p_s, "seed": self.seed,
               "failure": self.failure}
        if self.ok:
            out.update(self.estimate.as_dict())
        return out


class _Variant:
    """Frame and P_s-independent profiles for one post-chirp choice."""

    def __init__(self, config, c1_b=None):
        self.config = config
        self.frame = config.waveform.frame(c1_b)
        self.f_s = config.sample_rate
        self.profiles = subcarrier_profiles(self.frame, config.scenario, config.atom, self.f_s)
        self._power = {}

    def power(self, snr_db):
        if snr_db is None:
            if self.config.target_snr_db is None:
                return self.config.scenario.p_s
            snr_db = self.config.target_snr_db
        if snr_db not in self._power:
            self._power[snr_db] = calibrate_power(
                self.frame, self.config.scenario, self.config.atom, self.f_s, snr_db,
                profiles=self.profiles,
            )
        return self._power[snr_db]

    def traces(self, snr_db, seed, noise):
        scenario = self.config.scenario.with_power(self.power(snr_db))
        traces = synthesize_traces(self.frame, scenario, self.config.atom, self.f_s, seed=seed,
                                   noise=noise, profiles=self.profiles)
        return scenario, traces

    def trial(self, snr_db, seed, noise):
        scenario, traces = self.traces(snr_db, seed, noise)
        try:
            est, _ = estimate_delay_doppler(traces, self.frame, self.config.atom, scenario,
                                            self.config.run.estimator_options())
        except FrameFailureError as exc:
            return TrialOutcome(snr_db, scenario.p_s, seed, failure=str(exc))
        return TrialOutcome(snr_db, scenario.p_s, seed, estimate=est)


def run_trial(config, snr_db=None, seed=None, delta_c1=None, noise=None):
    """Calibrate, synthesize both frames and estimate range and velocity once.

    Parameters
    ----------
    snr_db : float, optional
        Target average SNR. Defaults to the configured ``target_snr_db``, or
        the fixed ``p_s`` when that is given instead.
    seed : int, optional
        Noise seed; defaults to the master seed.
    delta_c1 : float, optional
        Frame B post-chirp as ``c1_a + delta_c1`` instead of the configured ``c1_b``.
    noise : bool, optional
        Overrides ``run.noise``.
    """
    c1_b = None if delta_c1 is None else config.waveform.c1_a + delta_c1
    variant = _Variant(config, c1_b)
    seed = config.run.seed if seed is None else int(seed)
    return variant.trial(snr_db, seed, config.run.noise if noise is None else noise)


def trial_seed(master, snr_index, trial_index):
    """Per-trial seed shared by every waveform variant at the same grid point."""
    ss = np.random.SeedSequence([int(master), int(snr_index), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class NrmsePoint:
    snr_db: float
    range_nrmse: float | None
    velocity_nrmse: float | None
    trials: int
    failures: int

    @property
    def successes(self):
        return self.trials - self.failures


@dataclass(frozen=True)
class NrmseReport:
    delta_c1: float
    points: tuple
    seed: int
    config_hash: str

    def range_curve(self):
        return np.array([np.nan if p.range_nrmse is None else p.range_nrmse for p in self.points])

    def velocity_curve(self):
        return np.array(
            [np.nan if p.velocity_nrmse is None else p.velocity_nrmse for p in self.points]
        )


def run_monte_carlo(config, delta_c1=None, noise=None, trials=None):
    """Mean relative range and velocity errors at every configured SNR point.

    Trials whose estimator reports a frame failure are counted in
    ``failures`` and left out of the mean. A point where every trial fails
    has ``None`` NRMSE.
    """
    trials = config.run.trials if trials is None else int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    noise = config.run.noise if noise is None else noise
    c1_b = None if delta_c1 is None else config.waveform.c1_a + delta_c1
    variant = _Variant(config, c1_b)
    points = []
    for i, snr in enumerate(config.run.snr_db):
        err_r, err_v, failures = [], [], 0
        for k in range(trials):
            outcome = variant.trial(snr, trial_seed(config.run.seed, i, k), noise)
            if not outcome.ok:
                failures += 1
                continue
            r, v = outcome.errors(config.scenario)
            err_r.append(r)
            err_v.append(v)
        ok = trials - failures
        points.append(NrmsePoint(
            snr_db=float(snr),
            range_nrmse=math.fsum(err_r) / ok if ok else None,
            velocity_nrmse=math.fsum(err_v) / ok if ok else None,
            trials=trials,
            failures=failures,
        ))
    if delta_c1 is None:
        delta_c1 = config.waveform.c1_b - config.waveform.c1_a
    return NrmseReport(delta_c1=float(delta_c1), points=tuple(points), seed=config.run.seed,
                       config_hash=config.config_hash)


def _fmt(x):
    return "" if x is None else repr(float(x))


def write_nrmse_csv(reports, path):
    """One row per (delta_c1, SNR) pair; floats are written with full precision."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["delta_c1", "snr_db", "range_nrmse", "velocity_nrmse", "trials",
                         "failures", "seed", "config_hash"])
        for rep in reports:
            for p in rep.points:
                writer.writerow([_fmt(rep.delta_c1), _fmt(p.snr_db), _fmt(p.range_nrmse),
                                 _fmt(p.velocity_nrmse), p.trials, p.failures, rep.seed,
                                 rep.config_hash])
    return path


def run_sweep(config, path=None):
    """Monte Carlo over every configured ``delta_c1``; optionally writes the CSV."""
    reports = [run_monte_carlo(config, delta_c1=d) for d in config.run.delta_c1]
    if path is not None:
        write_nrmse_csv(reports, path)
    return reports


# -- spectra --------------------------------------------------------------------------


@dataclass(frozen=True)
class FrameSpectrum:
    variant: str
    frame: str
    freqs: np.ndarray
    power: np.ndarray

    def peak(self):
        """Frequency of the largest non-DC bin."""
        k = 1 + int(np.argmax(self.power[1:]))
        return float(self.freqs[k])

    def peak_to_median(self):
        body = self.power[1:]
        return float(np.max(body) / np.median(body))

    @property
    def bin_width(self):
        return float(self.freqs[1] - self.freqs[0])


def frame_spectra(variant_name, variant, snr_db, seed, noise):
    """Per-frame spectra: mean over subcarriers of the NLS periodogram."""
    scenario, traces = variant.traces(snr_db, seed, noise)
    zero_pad = variant.config.run.zero_pad
    out = []
    for tag in ("A", "B"):
        acc = None
        count = 0
        for tr in traces:
            if tr.frame_tag != tag:
                continue
            freqs, spec = weighted_spectrum(normalize(tr, variant.config.atom, scenario), zero_pad)
            power = np.abs(spec) ** 2
            acc = power if acc is None else acc + power
            count += 1
        out.append(FrameSpectrum(variant_name, tag, freqs, acc / count))
    return out


def export_spectrum(config, snr_db, seed, path, noise=None):
    """Write dual-chirp and baseline frame spectra to CSV and return them.

    Columns: ``variant, frame, frequency_hz, power``; ``power`` is the
    squared magnitude of the amplitude-weighted FFT, i.e. the objective the
    coarse search maximizes.
    """
    noise = config.run.noise if noise is None else noise
    dual = _Variant(config)
    base = _Variant(config, config.waveform.c1_a + config.run.baseline_delta_c1)
    spectra = (frame_spectra("dual", dual, snr_db, seed, noise)
               + frame_spectra("baseline", base, snr_db, seed, noise))
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variant", "frame", "frequency_hz", "power"])
        for sp in spectra:
            for f, p in zip(sp.freqs, sp.power):
                writer.writerow([sp.variant, sp.frame, repr(float(f)), repr(float(p))])
    return spectra


def read_spectrum_csv(path):
    """Inverse of :func:`export_spectrum`'s file format."""
    groups = {}
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["variant"], row["frame"])
            groups.setdefault(key, ([], []))
            groups[key][0].append(float(row["frequency_hz"]))
            groups[key][1].append(float(row["power"]))
    return [FrameSpectrum(v, f, np.array(fr), np.array(pw)) for (v, f), (fr, pw) in groups.items()]


def expected_peaks(config, delta_c1=None):
    """True fluctuation frequencies (Hz) of both frames."""
    c1_b = None if delta_c1 is None else config.waveform.c1_a + delta_c1
    frame = config.waveform.frame(c1_b)
    s = config.scenario
    return ground_truth_fluctuation(frame, s.tau, s.tau_ref, s.nu_r)


# -- validation -----------------------------------------------------------------------


def _grid(atom, size):
    omega = np.linspace(0.0, TWO_PI * 5e6, size)
    delta = np.linspace(-TWO_PI * 10e6, TWO_PI * 10e6, size)
    return omega, delta


def check_gain_derivative(atom, size=20, rel_step=1e-6):
    """Worst relative gap between the analytic gain and central differences of the bias.

    The step is ``rel_step * max(Omega, Omega_p)``; the Omega = 0 column, where
    the gain vanishes identically, is skipped.
    """
    omega, delta = _grid(atom, size)
    omega = omega[omega > 0]
    worst = 0.0
    for d in delta:
        for w in omega:
            h = rel_step * max(w, atom.omega_p_rabi)
            fd = (bias_pi(w + h, d, atom) - bias_pi(w - h, d, atom)) / (2 * h)
            ana = gain_upsilon(w, d, atom)
            worst = max(worst, abs(fd - ana) / abs(ana))
    return worst


def check_liouvillian(atom, size=5):
    """Largest residual-to-bound ratio, trace and Hermiticity errors on a grid."""
    omega, delta = _grid(atom, size)
    ratio = trace_err = herm = 0.0
    for d in delta:
        for w in omega:
            dm = liouvillian_steady_state(w, d, atom)
            ratio = max(ratio, dm.residual / dm.residual_bound)
            trace_err = max(trace_err, abs(dm.trace - 1.0))
            herm = max(herm, dm.hermiticity_error)
    return ratio, trace_err, herm


def closed_form_discrepancy(atom, size=20):
    """Worst relative gap of the closed-form Im(rho12) to the numeric steady state.

    Returns ``(worst, omega, delta)`` at the worst grid point.
    """
    omega, delta = _grid(atom, size)
    worst = (0.0, 0.0, 0.0)
    for d in delta:
        for w in omega:
            num = liouvillian_steady_state(w, d, atom).rho12.imag
            closed = float(np.imag(rho12_closed(w, d, atom)))
            gap = abs(closed - num) / max(abs(num), 1e-300)
            if gap > worst[0]:
                worst = (gap, w, d)
    return worst


def random_delay_doppler(rng, count):
    """Log-uniform delay offsets in [1e-7, 1e-5] s and Doppler magnitudes in
    [1e3, 1e5] Hz with random sign (ranges ~15 m to 1.5 km, speeds ~2 to 240 m/s)."""
    dtau = 10.0 ** rng.uniform(-7.0, -5.0, count)
    nu = 10.0 ** rng.uniform(3.0, 5.0, count) * rng.choice([-1.0, 1.0], count)
    return dtau, nu


def check_ls_exactness(frame, tau_ref, count=1000, seed=0, omega_rf=TWO_PI * 62.76e9):
    """Worst componentwise relative error of the LS inversion on noise-free pairs."""
    dtau, nu = random_delay_doppler(np.random.default_rng(seed), count)
    c = frame.frame_a.c1_tilde, frame.frame_b.c1_tilde
    worst = 0.0
    for d, n in zip(dtau, nu):
        est = ls_recover((2 * c[0] * d - n, 2 * c[1] * d - n), frame, tau_ref, omega_rf)
        worst = max(worst, abs(est.vartheta[0] - d) / d, abs(est.vartheta[1] - n) / abs(n))
    return worst


def validate(config):
    """Physics oracle suite; returns a JSON-serializable report.

    ``passed`` covers the steady-state residuals, the gain derivative and the
    LS exactness. The closed-form comparison is reported for reference.
    """
    atom = config.atom
    frame = config.waveform.frame()
    ratio, trace_err, herm = check_liouvillian(atom)
    grad = check_gain_derivative(atom)
    ls = check_ls_exactness(frame, config.scenario.tau_ref, omega_rf=config.scenario.omega_rf)
    try:
        equal = DualChirpFrame.build(frame.frame_a.N, frame.frame_a.delta_t, frame.frame_a.c1,
                                     frame.frame_a.c1, allow_equal=True)
        ls_recover((1.0, 1.0), equal, 0.0)
        singular_detected = False
    except SingularSystemError:
        singular_detected = True
    gap, w, d = closed_form_discrepancy(atom, size=10)
    checks = {
        "liouvillian_residual_over_bound": ratio,
        "liouvillian_trace_error": trace_err,
        "liouvillian_hermiticity_error": herm,
        "gain_fd_relative_error": grad,
        "ls_relative_error": ls,
        "ls_singular_detected": singular_detected,
    }
    passed = (ratio <= 1.0 and trace_err <= 1e-10 and herm <= 1e-10 and grad <= 1e-6
              and ls <= 1e-10 and singular_detected)
    return {
        "passed": bool(passed),
        "checks": checks,
        "closed_form_worst_relative_gap": {"value": gap, "omega_rad_s": w, "delta_rad_s": d},
    }
