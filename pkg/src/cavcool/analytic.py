"""Closed-form results of the cooling theory.

Covers the uncoupled atomic (Bloch) dynamics, the effective cooling law
``dm/dt = -gamma_c m + c`` in its full, weak-drive and strong-drive forms,
and the triplets of cooling/heating detunings.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ParameterError, ResonancePoleError, SingularSystemError
from .params import SystemParams, gamma_n, xi_pm


class Status(str, enum.Enum):
    COOLING = "cooling"
    HEATING = "heating"
    NO_DRIVE = "no_drive"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class BlochState:
    """Atomic expectation values with the phonon and cavity decoupled.

    ``z1`` is the excited population, ``z2 = <sigma^- + sigma^+>`` and
    ``z3 = <i(sigma^- - sigma^+)>``.
    """

    z1: float
    z2: float
    z3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.z1, self.z2, self.z3])


@dataclass(frozen=True)
class CoolingLaw:
    """Effective cooling rate, source constant and stationary phonon number.

    ``m_ss`` is NaN unless ``status`` is ``Status.COOLING``.
    """

    gamma_c: float
    c_source: float
    m_ss: float
    status: Status

    @classmethod
    def from_rates(cls, gamma_c: float, c_source: float) -> "CoolingLaw":
        if gamma_c > 0:
            return cls(gamma_c, c_source, c_source / gamma_c, Status.COOLING)
        return cls(gamma_c, c_source, math.nan, Status.HEATING)

    @classmethod
    def no_drive(cls) -> "CoolingLaw":
        return cls(0.0, 0.0, math.nan, Status.NO_DRIVE)


@dataclass(frozen=True)
class ResonanceCatalogue:
    """Cooling detunings (d0, d-, d+) and heating detunings (mu0, mu-, mu+)."""

    cooling: tuple[float, float, float]
    heating: tuple[float, float, float]

    @property
    def delta0(self) -> float:
        return self.cooling[0]

    @property
    def delta_minus(self) -> float:
        return self.cooling[1]

    @property
    def delta_plus(self) -> float:
        return self.cooling[2]


def bloch_steady(omega: float, gamma_atom: float) -> BlochState:
    denom = gamma_atom**2 + 2.0 * omega**2
    if denom == 0:
        raise ParameterError("undefined stationary state: omega and gamma_atom both zero")
    return BlochState(omega**2 / denom, 0.0, 2.0 * gamma_atom * omega / denom)


def bloch_trajectory(omega: float, gamma_atom: float, z0: BlochState, t: float) -> BlochState:
    """Propagate the uncoupled Bloch equations exactly for a time ``t``.

    z1 and z3 form an affine 2x2 system solved with an augmented matrix
    exponential; z2 only decays, at half the atomic rate.
    """
    if t < 0:
        raise ParameterError(f"t must be >= 0, got {t}")
    gen = np.array(
        [
            [-gamma_atom, 0.5 * omega, 0.0],
            [-2.0 * omega, -0.5 * gamma_atom, omega],
            [0.0, 0.0, 0.0],
        ]
    )
    z13 = expm(gen * t) @ np.array([z0.z1, z0.z3, 1.0])
    return BlochState(float(z13[0]), z0.z2 * math.exp(-0.5 * gamma_atom * t), float(z13[1]))


def _brace_full(xi: float, omega: float, kappa: float, gamma_atom: float) -> float:
    g_m1, g0, g1, g2, g4 = (gamma_n(n, kappa, gamma_atom) for n in (-1, 0, 1, 2, 4))
    x2 = xi * xi
    om2 = omega * omega
    num = (g0 * g1 * g2 + g_m1 * x2) * (g2**2 + x2) + 4.0 * om2 * (g0 * g2**2 + g4 * x2)
    den = (g0**2 + x2) * (
        (g1**2 + x2) * (g2**2 + x2) + 8.0 * om2 * (g1 * g2 - x2) + 16.0 * om2 * om2
    )
    return g1 / (g1**2 + x2) + num / den


def cooling_law_closed(params: SystemParams) -> CoolingLaw:
    """Evaluate the effective cooling equation in closed form.

    The bracket evaluated at xi_+ multiplies (1 + m) and the one at xi_-
    multiplies m, so ``gamma_c = P (A_- - A_+)`` and ``c = P A_+`` with
    ``P = 2 (eta g)^2 Omega^2 / (Gamma^2 + 2 Omega^2)``.

    Raises
    ------
    SingularSystemError
        If a denominator vanishes, which needs kappa = 0 together with
        delta = +-nu.
    """
    p = params
    if p.omega == 0:
        return CoolingLaw.no_drive()
    prefactor = 2.0 * p.eta_g**2 * p.omega**2 / (p.gamma_atom**2 + 2.0 * p.omega**2)
    xi_plus, xi_minus = xi_pm(p.delta, p.nu)
    try:
        a_plus = _brace_full(xi_plus, p.omega, p.kappa, p.gamma_atom)
        a_minus = _brace_full(xi_minus, p.omega, p.kappa, p.gamma_atom)
    except ZeroDivisionError as exc:
        raise SingularSystemError("cooling law denominator vanishes") from exc
    return _package(prefactor, a_plus, a_minus)


def _package(prefactor: float, a_plus: float, a_minus: float) -> CoolingLaw:
    gamma_c = prefactor * (a_minus - a_plus)
    c_source = prefactor * a_plus
    if gamma_c > 0:
        # ratio of braces keeps m_ss exactly independent of eta*g
        return CoolingLaw(gamma_c, c_source, a_plus / (a_minus - a_plus), Status.COOLING)
    return CoolingLaw(gamma_c, c_source, math.nan, Status.HEATING)


def weak_drive_mss(delta: float, nu: float, kappa: float) -> float | Status:
    """Stationary phonon number for vanishing drive and atomic decay.

    Identical in form to free-space sideband cooling with the atomic
    linewidth replaced by ``kappa``.  Returns ``Status.HEATING`` when the
    formula goes negative (delta < 0).
    """
    if delta == 0 or nu == 0:
        raise SingularSystemError("divergent sideband formula at delta * nu = 0")
    m = (kappa**2 + 4.0 * (delta - nu) ** 2) / (16.0 * delta * nu)
    return Status.HEATING if m < 0 else m


def _brace_strong(xi: float, omega: float, kappa: float, gamma_atom: float) -> float:
    g_m1, g1, g4 = (gamma_n(n, kappa, gamma_atom) for n in (-1, 1, 4))
    x2 = xi * xi
    om2 = omega * omega
    # xi^4 - 8 omega^2 xi^2 + 16 omega^4, factored to avoid cancellation near the pole
    den = (x2 - 4.0 * om2) ** 2
    if x2 == 0 or den == 0:
        raise ResonancePoleError(f"resonance pole at xi = {xi}, omega = {omega}")
    return g1 / x2 + (g_m1 * x2 + 4.0 * g4 * om2) / den


def strong_drive_cooling_law(params: SystemParams) -> CoolingLaw:
    """Cooling law in the regime omega, |xi_+-| >> kappa, gamma_atom.

    The caller is responsible for being in that regime; nothing is checked
    beyond the poles at xi^2 = 0 and xi^2 = 4 omega^2.
    """
    p = params
    xi_plus, xi_minus = xi_pm(p.delta, p.nu)
    a_plus = _brace_strong(xi_plus, p.omega, p.kappa, p.gamma_atom)
    a_minus = _brace_strong(xi_minus, p.omega, p.kappa, p.gamma_atom)
    return _package(p.eta_g**2, a_plus, a_minus)


def resonance_catalogue(nu: float, omega: float) -> ResonanceCatalogue:
    return ResonanceCatalogue(
        cooling=(nu, nu - omega, nu + omega),
        heating=(-nu, -nu - omega, -nu + omega),
    )
