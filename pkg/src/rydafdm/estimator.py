"""Delay-Doppler recovery from receiver traces.

Per subcarrier: normalize by the known bias and noise level, locate the
fluctuation frequency with a zero-padded FFT of the amplitude-weighted trace,
then polish ``(frequency, phase)`` with Newton iterations on the concentrated
least-squares objective. Frame averages from the two chirp rates feed a 2x2
least-squares inversion for delay and Doppler.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as C_LIGHT

from .errors import (
    ConfigurationError,
    DegenerateNoiseError,
    FrameFailureError,
    NumericalError,
    SingularSystemError,
)
from .measurement import detuning_trajectory, reference_rabi
from .readout import TWO_PI, gain_upsilon

log = logging.getLogger(__name__)

DEFAULT_OMEGA_RF = TWO_PI * 62.76e9


@dataclass(frozen=True)
class EstimatorOptions:
    zero_pad: int = 8
    max_iter: int = 50
    tol: float = 1e-10
    confidence_ratio: float = 3.0
    band: tuple | None = None
    cond_warn: float = 1e14


@dataclass(frozen=True)
class NormalizedTrace:
    times: np.ndarray       # local time from the first sample (s)
    values: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        if not len(self.times) == len(self.values) == len(self.amplitudes):
            raise ValueError("times, values and amplitudes must have equal length")
        if np.any(self.amplitudes < 0):
            raise ValueError("amplitudes must be non-negative")

    @property
    def duration(self):
        return float(len(self.times) * (self.times[1] - self.times[0]))

    @property
    def weights(self):
        return trapezoid_weights(self.times)


@dataclass(frozen=True)
class CoarseEstimate:
    frequency: float
    phase: float
    peak_ratio: float
    low_confidence: bool
    freqs: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class NewtonResult:
    frequency: float
    phase: float
    iterations: int
    objective: float
    refined: bool
    last_step: float


@dataclass(frozen=True)
class FrequencyEstimate:
    omega: np.ndarray          # per-subcarrier frequency (Hz)
    phi: np.ndarray            # per-subcarrier phase (rad)
    frame_mean: float
    iterations: np.ndarray
    objective_final: np.ndarray
    excluded: np.ndarray


@dataclass(frozen=True)
class DelayDopplerEstimate:
    omega_hat: tuple
    vartheta: tuple
    tau_hat: float
    nu_hat: float
    range_hat: float
    velocity_hat: float
    condition_number: float
    warning: str | None = None

    def as_dict(self):
        return {
            "omega_hat_hz": list(map(float, self.omega_hat)),
            "delay_offset_s": float(self.vartheta[0]),
            "tau_hat_s": float(self.tau_hat),
            "nu_hat_hz": float(self.nu_hat),
            "range_hat_m": float(self.range_hat),
            "velocity_hat_mps": float(self.velocity_hat),
            "condition_number": float(self.condition_number),
            "warning": self.warning,
        }


def trapezoid_weights(t):
    dt = np.diff(t)
    w = np.zeros(len(t))
    w[:-1] += dt / 2.0
    w[1:] += dt / 2.0
    return w


def normalize(trace, atom, scenario):
    """Remove the bias and whiten by the per-sample noise level.

    The amplitude uses the gain at the trace's detuning trajectory; only its
    shape matters downstream, the estimators are invariant to its scale.
    """
    sigma = np.asarray(trace.noise_sigma, dtype=float)
    if np.any(~(sigma > 0)):
        raise DegenerateNoiseError("noise_sigma must be > 0 at every sample")
    t_local = trace.local_times
    n = trace.grid.N
    d = detuning_trajectory(t_local, trace.subcarrier, trace.grid, scenario.tau_ref)
    ups = gain_upsilon(reference_rabi(scenario, atom), d, atom)
    amp = atom.mu34 * np.abs(ups) * math.sqrt(scenario.p_s) / (atom.hbar * math.sqrt(n) * sigma)
    values = (np.asarray(trace.values) - np.asarray(trace.bias_values)) / sigma
    return NormalizedTrace(times=t_local - t_local[0], values=values, amplitudes=amp)


def weighted_spectrum(norm, zero_pad=8):
    """``|sum w y rho exp(j 2 pi f t)|^2`` on the padded FFT grid (non-negative freqs)."""
    t = norm.times
    f_s = 1.0 / (t[1] - t[0])
    z = norm.values * norm.amplitudes * norm.weights
    size = int(zero_pad) * len(z)
    spec = np.fft.ifft(z, size) * size
    half = size // 2 + 1
    freqs = np.arange(half) * f_s / size
    return freqs, spec[:half]


def coarse_frequency(norm, band=None, zero_pad=8, confidence_ratio=3.0):
    """Grid maximizer of the NLS periodogram within ``band`` (Hz).

    The phase of the peak bin initializes the Newton refinement. The estimate
    is flagged low-confidence when the peak magnitude does not exceed
    ``confidence_ratio`` times the median magnitude in the band.
    """
    if zero_pad < 4:
        raise ConfigurationError("zero_pad must be >= 4 for quarter-bin resolution")
    freqs, spec = weighted_spectrum(norm, zero_pad)
    f_nyq = freqs[-1]
    lo, hi = (0.0, f_nyq) if band is None else band
    if not (lo < hi) or hi <= 0 or lo >= f_nyq:
        raise ConfigurationError(f"empty search band ({lo}, {hi}) Hz")
    sel = np.flatnonzero((freqs > lo) & (freqs < hi))
    if sel.size == 0:
        raise ConfigurationError(f"search band ({lo}, {hi}) Hz contains no FFT bins")
    mag = np.abs(spec[sel])
    k = sel[int(np.argmax(mag))]
    peak = float(np.abs(spec[k]))
    median = float(np.median(mag))
    ratio = peak / median if median > 0 else (np.inf if peak > 0 else 0.0)
    low = not peak > confidence_ratio * median
    return CoarseEstimate(
        frequency=float(freqs[k]),
        phase=float(-np.angle(spec[k])),
        peak_ratio=float(ratio),
        low_confidence=bool(low),
        freqs=freqs,
        power=np.abs(spec) ** 2,
    )


class _Objective:
    """``Q = (sum w y rho cos)^2 / sum w rho^2 cos^2`` with ``cos(2 pi u s + phi)``.

    ``s = t / T`` so the frequency variable ``u`` is in cycles per frame, which
    keeps the 2x2 Newton system well scaled.
    """

    def __init__(self, norm):
        self.span = norm.duration
        self.s = norm.times / self.span
        w = norm.weights
        self.wy = w * norm.values * norm.amplitudes
        self.wr = w * norm.amplitudes**2

    def value(self, u, phi):
        c = np.cos(TWO_PI * u * self.s + phi)
        b = self.wr @ (c * c)
        return (self.wy @ c) ** 2 / b if b > 0 else 0.0

    def derivatives(self, u, phi):
        th = TWO_PI * u * self.s + phi
        c, s = np.cos(th), np.sin(th)
        k = TWO_PI * self.s
        c2, s2 = np.cos(2 * th), np.sin(2 * th)
        wy, wr = self.wy, self.wr

        a = wy @ c
        a_u, a_p = -(wy * k) @ s, -wy @ s
        a_uu, a_up, a_pp = -(wy * k * k) @ c, -(wy * k) @ c, -a

        b = wr @ (c * c)
        b_u, b_p = -(wr * k) @ s2, -wr @ s2
        b_uu, b_up, b_pp = -2 * (wr * k * k) @ c2, -2 * (wr * k) @ c2, -2 * wr @ c2

        u2 = a * a
        g = np.array([2 * a * a_u, 2 * a * a_p])
        gb = np.array([b_u, b_p])
        h_a = 2 * np.array([[a_u * a_u + a * a_uu, a_u * a_p + a * a_up],
                            [a_u * a_p + a * a_up, a_p * a_p + a * a_pp]])
        h_b = np.array([[b_uu, b_up], [b_up, b_pp]])
        grad = g / b - u2 * gb / b**2
        hess = (h_a / b - (np.outer(g, gb) + np.outer(gb, g)) / b**2
                - u2 * h_b / b**2 + 2 * u2 * np.outer(gb, gb) / b**3)
        return u2 / b, grad, hess


def objective(norm, omega, phi):
    """NLS objective at frequency ``omega`` (Hz) and phase ``phi`` (rad)."""
    obj = _Objective(norm)
    return float(obj.value(omega * obj.span, phi))


def objective_derivatives(norm, omega, phi):
    """``(Q, grad, hess)`` with respect to ``(omega [Hz], phi [rad])``."""
    obj = _Objective(norm)
    q, g, h = obj.derivatives(omega * obj.span, phi)
    scale = np.array([obj.span, 1.0])
    return float(q), g * scale, h * np.outer(scale, scale)


def newton_refine(norm, omega0, phi0, max_iter=50, tol=1e-10):
    """Newton ascent on ``Q(omega, phi)`` from the coarse estimate.

    Stops on the first non-improving step, when the relative gain in ``Q``
    drops to ``tol``, or after ``max_iter`` updates, and returns the best
    iterate seen. A singular Hessian at the start returns the coarse values
    with ``refined=False``.
    """
    obj = _Objective(norm)
    u, phi = omega0 * obj.span, phi0
    q_best = obj.value(u, phi)
    best = (u, phi)
    iterations = 0
    refined = True
    last_step = 0.0
    for _ in range(max_iter):
        q, g, h = obj.derivatives(*best)
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(h))):
            raise NumericalError("non-finite derivative in Newton refinement")
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        hnorm = np.max(np.abs(h))
        if hnorm == 0 or abs(det) <= 1e-14 * hnorm**2:
            if iterations == 0:
                refined = False
            break
        step = np.linalg.solve(h, g)
        cand = (best[0] - step[0], best[1] - step[1])
        q_new = obj.value(*cand)
        if not np.isfinite(q_new):
            raise NumericalError("non-finite objective in Newton refinement")
        if q_new < q_best:
            break
        iterations += 1
        last_step = float(np.hypot(*step))
        gain = q_new - q_best
        prev = q_best
        best, q_best = cand, q_new
        if gain <= tol * prev:
            break
    phase = float(np.angle(np.exp(1j * best[1])))
    return NewtonResult(
        frequency=float(best[0] / obj.span), phase=phase, iterations=iterations,
        objective=float(q_best), refined=refined, last_step=last_step,
    )


def estimate_frame_frequency(traces, atom, scenario, options=None):
    """Per-subcarrier NLS estimates of one frame and their average."""
    opts = options or EstimatorOptions()
    if not traces:
        raise FrameFailureError("no traces supplied")
    tags = {tr.frame_tag for tr in traces}
    if len(tags) != 1:
        raise ValueError(f"traces span several frames: {sorted(tags)}")
    omega, phi, iters, qs, excluded = [], [], [], [], []
    for tr in traces:
        norm = normalize(tr, atom, scenario)
        coarse = coarse_frequency(norm, opts.band, opts.zero_pad, opts.confidence_ratio)
        if coarse.low_confidence:
            omega.append(coarse.frequency)
            phi.append(coarse.phase)
            iters.append(0)
            qs.append(objective(norm, coarse.frequency, coarse.phase))
            excluded.append(True)
            continue
        res = newton_refine(norm, coarse.frequency, coarse.phase, opts.max_iter, opts.tol)
        omega.append(res.frequency)
        phi.append(res.phase)
        iters.append(res.iterations)
        qs.append(res.objective)
        excluded.append(False)
    omega = np.array(omega)
    excluded = np.array(excluded)
    kept = omega[~excluded]
    if kept.size == 0:
        raise FrameFailureError(f"all subcarriers of frame {tags.pop()} are low-confidence")
    return FrequencyEstimate(
        omega=omega, phi=np.array(phi), frame_mean=math.fsum(kept) / kept.size,
        iterations=np.array(iters), objective_final=np.array(qs), excluded=excluded,
    )


def post_chirp_matrix(frame):
    a, b = frame.frame_a.c1_tilde, frame.frame_b.c1_tilde
    return np.array([[2.0 * a, -1.0], [2.0 * b, -1.0]])


def ls_recover(omega_pair, frame, tau_ref, omega_rf=DEFAULT_OMEGA_RF, c_light=C_LIGHT,
               cond_warn=1e14):
    """Least-squares delay-Doppler inversion of the two frame frequencies.

    Columns of the post-chirp matrix differ in scale by ~1e12, so the system
    is solved after column equilibration; the solution is the same.

    Raises
    ------
    SingularSystemError
        If both frames use the same post-chirp rate.
    """
    c1 = post_chirp_matrix(frame)
    if c1[0, 0] == c1[1, 0]:
        raise SingularSystemError(
            "post-chirp matrix is rank one: both frames share the same chirp rate"
        )
    w = np.asarray(omega_pair, dtype=float)
    col = np.max(np.abs(c1), axis=0)
    y, *_ = np.linalg.lstsq(c1 / col, w, rcond=None)
    vartheta = y / col
    cond = float(np.linalg.cond(c1))
    warning = None
    if cond > cond_warn:
        warning = f"post-chirp matrix is ill-conditioned (cond={cond:.3g})"
        log.debug(warning)
    tau_hat = vartheta[0] + tau_ref
    nu_hat = vartheta[1]
    return DelayDopplerEstimate(
        omega_hat=(float(w[0]), float(w[1])),
        vartheta=(float(vartheta[0]), float(vartheta[1])),
        tau_hat=float(tau_hat),
        nu_hat=float(nu_hat),
        range_hat=float(c_light * tau_hat / 2.0),
        velocity_hat=float(nu_hat * TWO_PI * c_light / (2.0 * omega_rf)),
        condition_number=cond,
        warning=warning,
    )


def estimate_delay_doppler(traces, frame, atom, scenario, options=None):
    """Full chain: both frame frequencies, then the LS inversion."""
    opts = options or EstimatorOptions()
    by_tag = {"A": [], "B": []}
    for tr in traces:
        by_tag[tr.frame_tag].append(tr)
    est_a = estimate_frame_frequency(by_tag["A"], atom, scenario, opts)
    est_b = estimate_frame_frequency(by_tag["B"], atom, scenario, opts)
    result = ls_recover((est_a.frame_mean, est_b.frame_mean), frame, scenario.tau_ref,
                        scenario.omega_rf, scenario.c_light, opts.cond_warn)
    return result, (est_a, est_b)
