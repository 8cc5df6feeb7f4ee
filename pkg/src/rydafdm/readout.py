"""Four-level Rydberg receiver: steady-state coherence, probe transmission and gain.

All Rabi frequencies, detunings and decay rates are angular (rad/s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import c as C_LIGHT
from scipy.constants import e as Q_E
from scipy.constants import epsilon_0, hbar, physical_constants

from .errors import DomainError, SolverError

A0 = physical_constants["Bohr radius"][0]
TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class AtomSystem:
    """Atomic, optical and photodetector constants (SI units).

    Defaults are the Cs ladder 6S1/2 - 6P3/2 - 60D5/2 - 63P3/2 used for the
    62.76 GHz carrier. ``gamma3``/``gamma4``, ``p_in`` and ``r_load`` are not
    tabulated and carry representative values.
    """

    omega_p_rabi: float = TWO_PI * 5.8e6
    omega_c_rabi: float = TWO_PI * 1.0e6
    gamma2: float = TWO_PI * 5.2e6
    gamma3: float = TWO_PI * 1.0e4
    gamma4: float = TWO_PI * 1.0e4
    mu12: float = 2.586 * Q_E * A0
    mu34: float = 229.0 * Q_E * A0
    n0_density: float = 4.89e16
    cell_length: float = 0.02
    lambda_p: float = 852e-9
    lambda_c: float = 509e-9
    p_in: float = 100e-6
    eta: float = 0.8
    q_e: float = Q_E
    r_load: float = 1.0e3
    omega_p_optical: float | None = None
    hbar: float = hbar
    epsilon0: float = epsilon_0
    c0_prefactor: float = 2.0

    def __post_init__(self):
        if self.omega_p_optical is None:
            object.__setattr__(self, "omega_p_optical", TWO_PI * C_LIGHT / self.lambda_p)
        positive = (
            "omega_p_rabi", "omega_c_rabi", "gamma2", "gamma3", "gamma4", "mu12", "mu34",
            "n0_density", "cell_length", "lambda_p", "lambda_c", "p_in", "q_e", "r_load",
            "omega_p_optical", "hbar", "epsilon0", "c0_prefactor",
        )
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        if not 0 < self.eta <= 1:
            raise DomainError(f"eta must lie in (0, 1], got {self.eta}")

    @property
    def k_p(self):
        return TWO_PI / self.lambda_p

    @property
    def v_in(self):
        """Photodetector voltage for the unattenuated probe (V)."""
        return self.r_load * self.q_e * self.eta * self.p_in / (self.hbar * self.omega_p_optical)

    @property
    def c0(self):
        """Optical depth scale multiplying Im(rho12) in the transmission exponent."""
        return (
            self.c0_prefactor * self.n0_density * self.mu12**2 * self.k_p * self.cell_length
            / (self.epsilon0 * self.hbar * self.omega_p_rabi)
        )

    @property
    def coefficients(self):
        return SteadyStateCoefficients.from_atom(self)


@dataclass(frozen=True)
class SteadyStateCoefficients:
    a1: float
    b1: float
    c1_coef: float
    c2_coef: float
    c3_coef: float

    @classmethod
    def from_atom(cls, atom):
        op2 = atom.omega_p_rabi**2
        oc2 = atom.omega_c_rabi**2
        return cls(
            a1=2.0 * atom.omega_p_rabi * oc2,
            b1=atom.gamma2 * atom.omega_p_rabi,
            c1_coef=2.0 * op2 + atom.gamma2**2,
            c2_coef=2.0 * op2 * (oc2 + op2),
            c3_coef=4.0 * (oc2 + op2) ** 2,
        )

    def denominator(self, omega, delta):
        return self.c1_coef * omega**4 + self.c2_coef * omega**2 + self.c3_coef * delta**2


def _check_rabi(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or np.any(~np.isfinite(omega)):
        raise DomainError("RF Rabi frequency must be finite and >= 0")
    return omega


def _scalar(x):
    return x.item() if np.ndim(x) == 0 else x


def _exponent_ratio(omega, delta, co):
    """``Omega^4 / D`` with the removable singularity at Omega = Delta = 0 set to 0."""
    den = co.denominator(omega, delta)
    safe = np.where(den > 0, den, 1.0)
    return np.where(den > 0, omega**4 / safe, 0.0), den, safe


def rho12_closed(omega_rf, delta_rf, atom):
    """Closed-form steady-state probe coherence rho12 (dimensionless, complex)."""
    omega = _check_rabi(omega_rf)
    delta = np.asarray(delta_rf, dtype=float)
    co = atom.coefficients
    den = co.denominator(omega, delta)
    safe = np.where(den > 0, den, 1.0)
    num = co.a1 * omega**2 * delta**2 + 1j * co.b1 * omega**4
    return _scalar(np.where(den > 0, num / safe, 0.0 + 0.0j))


def transduce_voltage(im_rho12, atom):
    """Photodetector output ``V_in exp(-C0 Im rho12)``."""
    im = np.asarray(im_rho12, dtype=float)
    if np.any(im < 0):
        raise DomainError("Im(rho12) must be >= 0")
    return _scalar(atom.v_in * np.exp(-atom.c0 * im))


def bias_pi(omega, delta, atom):
    """Probe output voltage as a function of RF Rabi frequency and detuning (V)."""
    omega = _check_rabi(omega)
    co = atom.coefficients
    ratio, _, _ = _exponent_ratio(omega, np.asarray(delta, dtype=float), co)
    return _scalar(atom.v_in * np.exp(-co.b1 * atom.c0 * ratio))


def gain_upsilon(omega, delta, atom):
    """Analytic dPi/dOmega in V per rad/s.

    With ``D = C1 W^4 + C2 W^2 + C3 D^2`` the exponent derivative is
    ``W^3 (2 C2 W^2 + 4 C3 Delta^2) / D^2``.
    """
    omega = _check_rabi(omega)
    delta = np.asarray(delta, dtype=float)
    co = atom.coefficients
    ratio, den, safe = _exponent_ratio(omega, delta, co)
    pi = atom.v_in * np.exp(-co.b1 * atom.c0 * ratio)
    dratio = np.where(
        den > 0,
        omega**3 * (2.0 * co.c2_coef * omega**2 + 4.0 * co.c3_coef * delta**2) / safe**2,
        0.0,
    )
    return _scalar(-pi * co.b1 * atom.c0 * dratio)


# -- numeric Lindblad steady state ----------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    rho: np.ndarray
    residual: float
    residual_bound: float

    @property
    def rho12(self):
        return complex(self.rho[0, 1])

    @property
    def trace(self):
        return complex(np.trace(self.rho))

    @property
    def hermiticity_error(self):
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))


def hamiltonian_over_hbar(omega_rf, delta_rf, atom, probe=None, coupling=None):
    """H/hbar for on-resonant probe and coupling beams (rad/s).

    ``probe``/``coupling`` override the atom's optical Rabi frequencies.
    """
    op = atom.omega_p_rabi if probe is None else probe
    oc = atom.omega_c_rabi if coupling is None else coupling
    return 0.5 * np.array(
        [
            [0.0, op, 0.0, 0.0],
            [op, 0.0, oc, 0.0],
            [0.0, oc, 0.0, omega_rf],
            [0.0, 0.0, omega_rf, -2.0 * delta_rf],
        ],
        dtype=complex,
    )


def lindblad_rhs(rho, omega_rf, delta_rf, atom, probe=None, coupling=None):
    """``d rho/dt`` evaluated by direct matrix products."""
    h = hamiltonian_over_hbar(omega_rf, delta_rf, atom, probe, coupling)
    gamma = np.diag([0.0, atom.gamma2, atom.gamma3, atom.gamma4])
    repop = np.diag([
        atom.gamma2 * rho[1, 1] + atom.gamma4 * rho[3, 3],
        atom.gamma3 * rho[2, 2],
        0.0,
        0.0,
    ])
    return -1j * (h @ rho - rho @ h) - 0.5 * (gamma @ rho + rho @ gamma) + repop


def liouvillian(omega_rf, delta_rf, atom, scale=1.0, probe=None, coupling=None):
    """16x16 superoperator acting on row-major ``vec(rho)``, rates divided by ``scale``."""
    h = hamiltonian_over_hbar(omega_rf, delta_rf, atom, probe, coupling) / scale
    gamma = np.diag([0.0, atom.gamma2, atom.gamma3, atom.gamma4]) / scale
    eye = np.eye(4)
    # row-major: vec(A X B) = kron(A, B.T) vec(X)
    sup = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    sup -= 0.5 * (np.kron(gamma, eye) + np.kron(eye, gamma.T))
    sup[0, 5] += atom.gamma2 / scale   # rho11 <- gamma2 rho22
    sup[0, 15] += atom.gamma4 / scale  # rho11 <- gamma4 rho44
    sup[5, 10] += atom.gamma3 / scale  # rho22 <- gamma3 rho33
    return sup


def liouvillian_steady_state(omega_rf, delta_rf, atom, probe=None, coupling=None):
    """Solve ``d rho/dt = 0`` with unit trace by direct linear algebra.

    One population equation is replaced by the trace constraint. The system is
    assembled in units of the largest rate to keep it well scaled.

    Raises
    ------
    SolverError
        If the constrained system is singular (e.g. no decay channels).
    """
    omega_rf = float(_check_rabi(omega_rf))
    h = hamiltonian_over_hbar(omega_rf, delta_rf, atom, probe, coupling)
    scale = max(
        atom.gamma2, atom.gamma3, atom.gamma4, float(np.max(np.abs(h))), abs(delta_rf), 1.0,
    )
    sup = liouvillian(omega_rf, delta_rf, atom, scale, probe, coupling)
    a = sup.copy()
    a[0, :] = 0.0
    a[0, [0, 5, 10, 15]] = 1.0
    b = np.zeros(16, dtype=complex)
    b[0] = 1.0
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > 1e14:
        raise SolverError(
            f"steady-state system is singular (cond={cond:.3g}); "
            f"rates gamma=({atom.gamma2:.3g}, {atom.gamma3:.3g}, {atom.gamma4:.3g}) rad/s"
        )
    rho = np.linalg.solve(a, b).reshape(4, 4)
    residual = float(np.linalg.norm(lindblad_rhs(rho, omega_rf, delta_rf, atom, probe, coupling)))
    bound = 1e-10 * max(1.0, float(np.linalg.norm(h, 2)))
    return DensityMatrix(rho=rho, residual=residual, residual_bound=bound)
