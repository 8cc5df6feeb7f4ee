from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from rydafdm.errors import (
    ConfigurationError,
    DegenerateNoiseError,
    FrameFailureError,
    SingularSystemError,
)
from rydafdm.estimator import (
    EstimatorOptions,
    NormalizedTrace,
    coarse_frequency,
    estimate_delay_doppler,
    estimate_frame_frequency,
    ls_recover,
    newton_refine,
    normalize,
    objective,
    objective_derivatives,
    post_chirp_matrix,
)
from rydafdm.measurement import Scenario, calibrate_power, synthesize_traces
from rydafdm.readout import TWO_PI
from rydafdm.waveform import DualChirpFrame, ground_truth_fluctuation

from conftest import FS


def cosine_trace(freq, phase, n=192, f_s=FS, amp=None):
    t = np.arange(n) / f_s
    a = np.ones(n) if amp is None else amp(t)
    return NormalizedTrace(t, a * np.cos(TWO_PI * freq * t + phase), a)


@pytest.fixture(scope="module")
def calibrated(scenario, atom, frame):
    return scenario.with_power(calibrate_power(frame, scenario, atom, FS, 30.0))


def test_normalize_bias_only(scenario, atom, frame):
    s = scenario.with_power(0.0)
    for tr in synthesize_traces(frame, s, atom, FS, noise=False):
        np.testing.assert_array_equal(normalize(tr, atom, s).values, 0.0)


def test_normalize_noiseless_is_scaled_cosine(calibrated, atom, frame):
    s = calibrated
    truth = dict(zip("AB", ground_truth_fluctuation(frame, s.tau, s.tau_ref, s.nu_r)))
    for tr in synthesize_traces(frame, s, atom, FS, noise=False):
        norm = normalize(tr, atom, s)
        w = truth[tr.frame_tag]
        h = 1 / np.sqrt(frame.frame_a.N)
        # fit only the phase; the frequency is known
        basis = np.column_stack([np.cos(TWO_PI * w * norm.times), np.sin(TWO_PI * w * norm.times)])
        coef, *_ = np.linalg.lstsq(basis * (norm.amplitudes * h)[:, None], norm.values, rcond=None)
        resid = norm.values - (basis @ coef) * norm.amplitudes * h
        assert np.hypot(*coef) == pytest.approx(1.0, rel=1e-9)
        assert np.max(np.abs(resid)) <= 1e-9 * np.max(np.abs(norm.values))


def test_normalized_noise_is_unit(calibrated, atom, frame):
    clean = synthesize_traces(frame, calibrated, atom, FS, noise=False)
    parts = []
    for seed in range(44):  # 44 * 12 traces * 192 samples > 1e5
        noisy = synthesize_traces(frame, calibrated, atom, FS, seed=seed)
        for n, c in zip(noisy, clean):
            parts.append(normalize(n, atom, calibrated).values - normalize(c, atom, calibrated).values)
    z = np.concatenate(parts)
    assert z.size >= 100_000
    assert np.std(z) == pytest.approx(1.0, abs=0.03)


def test_normalize_rejects_zero_sigma(scenario, atom, frame):
    tr = synthesize_traces(frame, scenario, atom, FS, noise=False)[0]
    with pytest.raises(DegenerateNoiseError):
        normalize(replace(tr, noise_sigma=np.zeros_like(tr.noise_sigma)), atom, scenario)


def test_coarse_peak_within_bin():
    f0 = 3.21e6
    norm = cosine_trace(f0, 0.4)
    est = coarse_frequency(norm, zero_pad=8)
    assert abs(est.frequency - f0) <= FS / (8 * 192)
    assert not est.low_confidence


def test_coarse_zero_trace_is_low_confidence():
    norm = NormalizedTrace(np.arange(192) / FS, np.zeros(192), np.ones(192))
    assert coarse_frequency(norm).low_confidence


def test_coarse_empty_band():
    norm = cosine_trace(1e6, 0.0)
    with pytest.raises(ConfigurationError):
        coarse_frequency(norm, band=(5e6, 5e6))
    with pytest.raises(ConfigurationError):
        coarse_frequency(norm, band=(40e6, 50e6))


def test_coarse_respects_band():
    t = np.arange(192) / FS
    y = np.cos(TWO_PI * 2e6 * t) + 0.5 * np.cos(TWO_PI * 9e6 * t)
    est = coarse_frequency(NormalizedTrace(t, y, np.ones(192)), band=(5e6, 12e6))
    assert abs(est.frequency - 9e6) <= FS / (8 * 192)


@settings(max_examples=30, deadline=None)
@given(k=st.floats(1e-3, 1e3), seed=st.integers(0, 1000))
def test_coarse_argmax_scale_invariant(k, seed):
    rng = np.random.default_rng(seed)
    norm = cosine_trace(2.7e6, 1.0)
    noisy = NormalizedTrace(norm.times, norm.values + rng.normal(size=192), norm.amplitudes)
    scaled = NormalizedTrace(norm.times, k * noisy.values, norm.amplitudes)
    assert coarse_frequency(noisy).frequency == coarse_frequency(scaled).frequency


def test_newton_from_truth():
    f0, p0 = 3.3e6, 0.7
    norm = cosine_trace(f0, p0, amp=lambda t: 1 + 0.3 * np.sin(TWO_PI * 4e5 * t))
    res = newton_refine(norm, f0, p0)
    assert res.iterations <= 2
    assert res.last_step <= 1e-9
    assert res.frequency == pytest.approx(f0, rel=1e-12)


def test_newton_from_half_bin():
    f0, p0 = 3.3e6, -1.2
    norm = cosine_trace(f0, p0)
    span = norm.duration
    half_bin = 0.5 / (8 * span)
    res = newton_refine(norm, f0 + half_bin, p0)
    assert abs(res.frequency - f0) <= 1e-3 / span
    # reference optimum from a derivative-free search on the same objective
    ref = minimize(lambda x: -objective(norm, f0 + x[0] * half_bin, x[1]), [1.0, p0],
                   method="Nelder-Mead", options=dict(xatol=1e-10, fatol=1e-16, maxiter=5000))
    assert abs(res.frequency - (f0 + ref.x[0] * half_bin)) <= 1e-6 / span


def test_newton_from_coarse_start():
    f0 = 4.44e6
    norm = cosine_trace(f0, 2.0)
    c = coarse_frequency(norm)
    res = newton_refine(norm, c.frequency, c.phase)
    assert abs(res.frequency - f0) < abs(c.frequency - f0)
    assert abs(res.frequency - f0) <= 1e-6 * f0


@pytest.mark.parametrize("seed", range(5))
def test_hessian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    norm = cosine_trace(3e6, 0.3)
    norm = NormalizedTrace(norm.times, norm.values + 0.3 * rng.normal(size=192), norm.amplitudes)
    w = 3e6 + rng.uniform(-1e5, 1e5)
    p = rng.uniform(-np.pi, np.pi)
    q, g, h = objective_derivatives(norm, w, p)
    steps = np.array([1.0, 1e-6])
    fd_h = np.zeros((2, 2))
    for j in range(2):
        e = np.zeros(2)
        e[j] = steps[j]
        _, gp, _ = objective_derivatives(norm, w + e[0], p + e[1])
        _, gm, _ = objective_derivatives(norm, w - e[0], p - e[1])
        fd_h[:, j] = (gp - gm) / (2 * steps[j])
    np.testing.assert_allclose(h, fd_h, rtol=1e-5, atol=1e-5 * np.max(np.abs(h)))
    fd_g = [(objective(norm, w + 1.0, p) - objective(norm, w - 1.0, p)) / 2.0,
            (objective(norm, w, p + 1e-6) - objective(norm, w, p - 1e-6)) / 2e-6]
    np.testing.assert_allclose(g, fd_g, rtol=1e-5, atol=1e-5 * np.max(np.abs(g)))


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), snr=st.floats(0.05, 3.0))
def test_newton_never_worse_than_start(seed, snr):
    rng = np.random.default_rng(seed)
    norm = cosine_trace(2.5e6, 0.0)
    noisy = NormalizedTrace(norm.times, snr * norm.values + rng.normal(size=192), norm.amplitudes)
    c = coarse_frequency(noisy)
    res = newton_refine(noisy, c.frequency, c.phase)
    assert res.objective >= objective(noisy, c.frequency, c.phase)
    assert 0 <= res.iterations <= 50


def test_frame_estimates_agree(calibrated, atom, frame):
    traces = synthesize_traces(frame, calibrated, atom, FS, noise=False)
    est = estimate_frame_frequency([t for t in traces if t.frame_tag == "A"], atom, calibrated)
    w = ground_truth_fluctuation(frame, calibrated.tau, calibrated.tau_ref, calibrated.nu_r)[0]
    np.testing.assert_allclose(est.omega, w, rtol=1e-6)
    assert est.frame_mean == pytest.approx(np.mean(est.omega), rel=1e-15)
    assert not np.any(est.excluded)


def test_single_subcarrier_frame(calibrated, atom, frame):
    tr = [t for t in synthesize_traces(frame, calibrated, atom, FS, seed=2) if t.frame_tag == "B"]
    est = estimate_frame_frequency(tr[:1], atom, calibrated)
    assert est.frame_mean == est.omega[0]


def test_frame_mean_permutation_invariant(calibrated, atom, frame):
    tr = [t for t in synthesize_traces(frame, calibrated, atom, FS, seed=4) if t.frame_tag == "A"]
    a = estimate_frame_frequency(tr, atom, calibrated).frame_mean
    b = estimate_frame_frequency(tr[::-1], atom, calibrated).frame_mean
    c = estimate_frame_frequency(tr[2:] + tr[:2], atom, calibrated).frame_mean
    assert a == b == c


def test_frame_failure(scenario, atom, frame):
    s = scenario.with_power(0.0)
    traces = [t for t in synthesize_traces(frame, s, atom, FS, seed=1) if t.frame_tag == "A"]
    with pytest.raises(FrameFailureError):
        estimate_frame_frequency(traces, atom, s, EstimatorOptions(confidence_ratio=1e9))


def test_mixed_frames_rejected(calibrated, atom, frame):
    traces = synthesize_traces(frame, calibrated, atom, FS, noise=False)
    with pytest.raises(ValueError):
        estimate_frame_frequency(traces, atom, calibrated)


def test_ls_forward_inverse():
    frame = DualChirpFrame.build(6, 1e-6, 0.25, 0.5, total_duration=6e-6)
    assert frame.frame_a.c1_tilde == pytest.approx(0.25e12)
    est = ls_recover((4.8e5, 9.8e5), frame, tau_ref=0.0)
    assert est.vartheta[0] == pytest.approx(1e-6, rel=1e-12)
    assert est.vartheta[1] == pytest.approx(2e4, rel=1e-12)


def test_ls_zero():
    frame = DualChirpFrame.build(6, 1e-6, 0.25, 0.5)
    est = ls_recover((0.0, 0.0), frame, tau_ref=0.0)
    assert est.tau_hat == 0.0 and est.nu_hat == 0.0


def test_ls_matches_normal_equations():
    frame = DualChirpFrame.build(6, 1e-6, 0.25, 0.5)
    c1 = post_chirp_matrix(frame)
    w = np.array([3.1e6, 6.25e6])
    est = ls_recover(w, frame, tau_ref=1e-8)
    ref = np.linalg.solve(c1, w)
    np.testing.assert_allclose(est.vartheta, ref, rtol=1e-10)
    assert est.tau_hat == pytest.approx(ref[0] + 1e-8, rel=1e-12)


def test_ls_singular():
    frame = DualChirpFrame.build(6, 1e-6, 0.25, 0.25, allow_equal=True)
    with pytest.raises(SingularSystemError):
        ls_recover((1e6, 1e6), frame, 0.0)


def test_ls_warns_when_ill_conditioned():
    frame = DualChirpFrame.build(6, 1e-6, 0.25, 0.251)
    est = ls_recover((3.3e6, 3.31e6), frame, 0.0)
    assert est.warning is not None
    assert ls_recover((3.3e6, 6.6e6), DualChirpFrame.build(6, 1e-6, 0.25, 0.5), 0.0).warning is None


def test_condition_ratio():
    base = post_chirp_matrix(DualChirpFrame.build(6, 1e-6, 0.25, 0.251))
    dual = post_chirp_matrix(DualChirpFrame.build(6, 1e-6, 0.25, 0.5))
    assert np.linalg.cond(base) / np.linalg.cond(dual) >= 1e2


def test_condition_decreasing_in_chirp_gap():
    mean = 0.375
    gaps = np.linspace(1e-4, 0.5, 40)
    conds = [np.linalg.cond(post_chirp_matrix(
        DualChirpFrame.build(6, 1e-6, mean - g / 2, mean + g / 2))) for g in gaps]
    assert np.all(np.diff(conds) < 0)


@pytest.mark.parametrize("target_range,velocity", [(1000.0, 50.0), (300.0, -20.0), (1400.0, 120.0)])
def test_noiseless_end_to_end(atom, frame, target_range, velocity):
    s = Scenario(target_range=target_range, velocity=velocity)
    s = s.with_power(calibrate_power(frame, s, atom, FS, 30.0))
    est, _ = estimate_delay_doppler(synthesize_traces(frame, s, atom, FS, noise=False),
                                    frame, atom, s)
    assert est.tau_hat - s.tau_ref == pytest.approx(s.tau - s.tau_ref, rel=1e-3)
    assert est.nu_hat == pytest.approx(s.nu_r, rel=1e-3)
    assert est.range_hat == pytest.approx(target_range, rel=1e-3)
    assert est.velocity_hat == pytest.approx(velocity, rel=1e-3)
