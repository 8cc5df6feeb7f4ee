"""AFDM and dual-chirp AFDM signal structure.

Phases are expressed in cycles and frequencies in Hz (cyclic) throughout this
module, so ``exp(j*2*pi*phase)`` is the complex chirp.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError

# Slack for floating point comparisons against the frame edges.
_EDGE_RTOL = 1e-12


@dataclass(frozen=True)
class ChirpGrid:
    """Time-frequency parameters of one AFDM block.

    Parameters
    ----------
    N : int
        Number of chirp subcarriers.
    delta_t : float
        Sample interval in seconds (inverse of the bandwidth).
    duration : float
        Block duration in seconds. ``N * delta_t`` for a plain AFDM symbol.
    c1, c2 : float
        Post-chirp and pre-chirp parameters (dimensionless).
    """

    N: int
    delta_t: float
    duration: float
    c1: float
    c2: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be an integer >= 1, got {self.N}")
        if not self.delta_t > 0:
            raise DomainError(f"delta_t must be positive, got {self.delta_t}")
        if not self.duration > 0:
            raise DomainError(f"duration must be positive, got {self.duration}")

    @classmethod
    def afdm(cls, N, bandwidth, c1, c2=0.0):
        """Plain AFDM block with ``delta_t = 1/bandwidth`` and ``T = N*delta_t``."""
        dt = 1.0 / bandwidth
        return cls(N=N, delta_t=dt, duration=N * dt, c1=c1, c2=c2)

    @property
    def c1_tilde(self):
        """Post-chirp rate in Hz^2."""
        return self.c1 / self.delta_t**2

    @property
    def subcarrier_spacing(self):
        return 1.0 / self.duration


@dataclass(frozen=True)
class DualChirpFrame:
    """Two consecutive AFDM blocks with distinct post-chirp parameters."""

    frame_a: ChirpGrid
    frame_b: ChirpGrid
    t_split: float
    total_duration: float
    allow_equal: bool = False

    def __post_init__(self):
        if not 0 < self.t_split < self.total_duration:
            raise DomainError("t_split must lie strictly inside (0, total_duration)")
        a, b = self.frame_a, self.frame_b
        if a.N != b.N or a.delta_t != b.delta_t:
            raise DomainError("both frames must share N and delta_t")
        if not np.isclose(a.duration, self.t_split, rtol=1e-12, atol=0):
            raise DomainError("frame_a.duration must equal t_split")
        if not np.isclose(b.duration, self.total_duration - self.t_split, rtol=1e-12, atol=0):
            raise DomainError("frame_b.duration must equal total_duration - t_split")
        if a.c1 == b.c1 and not self.allow_equal:
            raise DomainError(
                "dual-chirp frames need distinct post-chirps; pass allow_equal=True "
                "to build the single-chirp baseline"
            )

    @classmethod
    def build(cls, N, delta_t, c1_a, c1_b, c2=0.0, total_duration=None,
              split_fraction=0.5, allow_equal=False):
        total = N * delta_t if total_duration is None else total_duration
        t_split = split_fraction * total
        return cls(
            frame_a=ChirpGrid(N, delta_t, t_split, c1_a, c2),
            frame_b=ChirpGrid(N, delta_t, total - t_split, c1_b, c2),
            t_split=t_split,
            total_duration=total,
            allow_equal=allow_equal,
        )

    def frames(self):
        """``[("A", grid_a, 0.0), ("B", grid_b, t_split)]`` as (tag, grid, start time)."""
        return [("A", self.frame_a, 0.0), ("B", self.frame_b, self.t_split)]

    def swapped(self):
        return DualChirpFrame.build(
            self.frame_a.N, self.frame_a.delta_t, self.frame_b.c1, self.frame_a.c1,
            self.frame_a.c2, self.total_duration,
            split_fraction=self.t_split / self.total_duration,
            allow_equal=self.allow_equal,
        )


def idaft_modulate(x, grid):
    """Map DAFT-domain symbols onto time samples (inverse DAFT).

    ``s[n] = N^-1/2 sum_m x[m] exp(j 2 pi (c2 m^2 + m n / N + c1 n^2))``
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim != 1 or x.size != grid.N:
        raise DimensionError(f"expected {grid.N} symbols, got shape {x.shape}")
    k = np.arange(grid.N)
    pre = np.exp(2j * np.pi * grid.c2 * k**2)
    post = np.exp(2j * np.pi * grid.c1 * k**2)
    return post * np.fft.ifft(x * pre) * np.sqrt(grid.N)


def daft_demodulate(s, grid):
    """Forward DAFT, the inverse of :func:`idaft_modulate`."""
    s = np.asarray(s, dtype=complex)
    if s.ndim != 1 or s.size != grid.N:
        raise DimensionError(f"expected {grid.N} samples, got shape {s.shape}")
    k = np.arange(grid.N)
    pre = np.exp(-2j * np.pi * grid.c2 * k**2)
    post = np.exp(-2j * np.pi * grid.c1 * k**2)
    return pre * np.fft.fft(s * post) / np.sqrt(grid.N)


def _check_in_frame(t, grid):
    t = np.asarray(t, dtype=float)
    slack = _EDGE_RTOL * grid.duration
    if np.any(t < -slack) or np.any(t > grid.duration + slack) or np.any(~np.isfinite(t)):
        raise DomainError(f"t must lie in [0, {grid.duration}] s")
    return t


def _check_subcarrier(m, grid):
    if int(m) != m or not 0 <= m < grid.N:
        raise DomainError(f"subcarrier index must be in [0, {grid.N}), got {m}")
    return int(m)


def wrap_index(t, m, grid):
    """Wrap index q placing ``2 c1~ t + m/T - q/dt`` in ``[0, 1/dt)``.

    No domain check; ``t`` may be any real time (used for delayed copies).
    """
    f = 2.0 * grid.c1_tilde * np.asarray(t, dtype=float) + m / grid.duration
    return np.floor(f * grid.delta_t).astype(np.int64)


def _phase(t, m, grid, q):
    return grid.c1_tilde * t**2 + (m / grid.duration) * t - (q / grid.delta_t) * t


def phase_phi(t, m, grid):
    """Piecewise instantaneous phase of chirp subcarrier ``m``.

    Returns
    -------
    phi : ndarray or float
        Phase in cycles.
    q : ndarray or int
        Wrap index used at each ``t``.
    """
    t = _check_in_frame(t, grid)
    m = _check_subcarrier(m, grid)
    q = wrap_index(t, m, grid)
    phi = _phase(t, m, grid, q)
    if phi.ndim == 0:
        return float(phi), int(q)
    return phi, q


def instantaneous_frequency(t, m, grid, check=True):
    """Wrapped instantaneous frequency in Hz, always in ``[0, 1/dt)``."""
    if check:
        t = _check_in_frame(t, grid)
        m = _check_subcarrier(m, grid)
    t = np.asarray(t, dtype=float)
    f = 2.0 * grid.c1_tilde * t + m / grid.duration
    q = np.floor(f * grid.delta_t)
    f = f - q / grid.delta_t
    # floor() can leave f a hair below 0 or at 1/dt after cancellation
    top = np.nextafter(1.0 / grid.delta_t, 0.0)
    return np.clip(f, 0.0, top)


def phase_difference(t, tau, tau_ref, nu_r, m, grid, branch="unwrapped"):
    """Beat phase between the target echo and the line-of-sight reference.

    ``phi_m(t - tau) - phi_m(t - tau_ref) + nu_r t`` in cycles.

    Parameters
    ----------
    branch : {"unwrapped", "shared"}
        ``"unwrapped"`` evaluates both delayed copies on the continuous
        quadratic chirp (q = 0), giving a phase that is affine in ``t`` over
        the whole block. ``"shared"`` uses the wrap index of the undelayed
        time for both copies; the phase is then affine only between wrap
        points and jumps by ``(tau - tau_ref)/dt`` cycles at each of them.
    """
    t = _check_in_frame(t, grid)
    m = _check_subcarrier(m, grid)
    if branch == "shared":
        q = wrap_index(t, m, grid)
    elif branch == "unwrapped":
        q = 0
    else:
        raise ValueError(f"unknown branch {branch!r}")
    d = _phase(t - tau, m, grid, q) - _phase(t - tau_ref, m, grid, q) + nu_r * t
    return float(d) if np.ndim(d) == 0 else d


def phase_difference_slope(tau, tau_ref, nu_r, grid):
    """d(phase_difference)/dt in Hz: ``2 c1~ (tau_ref - tau) + nu_r``."""
    return 2.0 * grid.c1_tilde * (tau_ref - tau) + nu_r


def fluctuation_frequency(grid, tau, tau_ref, nu_r):
    """Observed beat frequency ``2 c1~ (tau - tau_ref) - nu_r`` in Hz."""
    return 2.0 * grid.c1_tilde * (tau - tau_ref) - nu_r


def ground_truth_fluctuation(frame, tau, tau_ref, nu_r):
    """Fluctuation frequencies ``(omega_A, omega_B)`` of the two frames in Hz."""
    return (
        fluctuation_frequency(frame.frame_a, tau, tau_ref, nu_r),
        fluctuation_frequency(frame.frame_b, tau, tau_ref, nu_r),
    )
