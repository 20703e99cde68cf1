"""Speed of Gaussian states near the TaT saddle and the quantum speed limit ratio.

Close to the saddle the twist-and-turn Hamiltonian reduces to a quadratic
form ``H = Z^T G Z / 2`` in a quadrature pair ``Z = (q, p)`` with
``[q, p] = i``.  Covariances ``Sigma`` are normalised so that the vacuum has
``Sigma = I`` (i.e. ``<q^2> = Sigma_qq / 2``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SYMPLECTIC_FORM = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class GaussianState:
    """Zero-mean single-mode Gaussian state.

    ``r`` is the squeezing strength and ``beta`` the squeezing angle;
    ``Sigma = R(beta) diag(e^r, e^-r) R(beta)^T``.
    """

    r: float
    beta: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.r) and np.isfinite(self.beta)) or self.r < 0:
            raise DomainError("squeezing strength must be finite and non-negative")

    @property
    def covariance(self) -> np.ndarray:
        c, s = np.cos(self.beta), np.sin(self.beta)
        rot = np.array([[c, s], [-s, c]])
        return rot @ np.diag([np.exp(self.r), np.exp(-self.r)]) @ rot.T


def saddle_generator(omega: float, chi: float) -> np.ndarray:
    """Quadratic form ``G = diag(-Omega, chi - Omega)`` of the linearised TaT."""
    if not (np.isfinite(omega) and np.isfinite(chi)) or omega < 0:
        raise DomainError("omega must be finite and non-negative, chi finite")
    return np.diag([-omega, chi - omega])


def speed_squared(generator: np.ndarray, covariance: np.ndarray) -> float:
    """``V^2 = (Tr[(G Sigma)^2] + Tr[(G J)^2]) / 8``, the energy variance."""
    g = np.asarray(generator, dtype=float)
    sigma = np.asarray(covariance, dtype=float)
    gs = g @ sigma
    gj = g @ SYMPLECTIC_FORM
    return float((np.trace(gs @ gs) + np.trace(gj @ gj)) / 8.0)


def gaussian_speed(omega: float, chi: float, state: GaussianState) -> float:
    return speed_squared(saddle_generator(omega, chi), state.covariance)


def speed_max_first_order(omega: float, chi: float, r: float) -> float:
    """Largest ``V^2`` over the squeezing angle, to first order in ``r``."""
    return chi**2 / 8.0 + 0.25 * abs(chi) * abs(chi - 2.0 * omega) * r


def qsl_ratio(chi_over_omega: float, r: float) -> float:
    """Vacuum speed over the best first-order squeezed speed, ``V_0^2 / V_max^2``."""
    u = float(chi_over_omega)
    if not np.isfinite(u) or u <= 0:
        raise DomainError("chi/omega must be positive and finite")
    if not np.isfinite(r) or r < 0:
        raise DomainError("squeezing strength must be finite and non-negative")
    return u**2 / (u**2 + 2.0 * u * abs(u - 2.0) * r)


def qsl_ratio_grid(ratios, r: float) -> np.ndarray:
    return np.array([qsl_ratio(u, r) for u in np.asarray(ratios, dtype=float)])
