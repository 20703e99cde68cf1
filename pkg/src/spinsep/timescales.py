"""Closed-form preparation times from travel along separatrix branches.

All times are dimensionless, in units of ``1/chi`` (``chi * t``).  The
counter-twisting results follow a point on the edge of the initial
uncertainty patch, ``Z(0) = sqrt(1 - 1/N)``, along the x-z branch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .classical_flow import branch_speed, saddle_lyapunov, travel_time
from .errors import DomainError
from .spin_core import PTaT, TaT, TwoAxisCT

LABELS = (
    "CT_sq",
    "CT_QFI",
    "CT_BWS_lower",
    "CT_BWS_upper",
    "CT_EWSS",
    "CT_Yurke",
    "TaT_sq",
    "TaT_QFI",
    "TaT3_QFI",
    "Ehrenfest_CT",
    "Ehrenfest_TaT",
    "Ehrenfest_3TaT",
)

# Mixing angles above this are outside the regime where the Yurke estimate is
# expected to track the exact dynamics.
YURKE_SMALL_ALPHA = np.pi / 4

CRITICAL_TAT = TaT(omega=0.5, chi=1.0)
CRITICAL_3TAT = PTaT(p=3, omega=np.sqrt(3) / 4, chi=1.0)


@dataclass(frozen=True)
class TimescalePrediction:
    label: str
    n_particles: int
    chi_t: float
    flagged: bool = False

    def physical_time(self, chi: float) -> float:
        """Convert to a physical time for a given rescaled twisting strength."""
        if not chi > 0:
            raise DomainError("twisting strength must be positive")
        return self.chi_t / chi


def _check_n(n) -> int:
    if isinstance(n, bool) or int(n) != n or n < 2:
        raise DomainError(f"particle number must be an integer >= 2, got {n!r}")
    return int(n)


def _edge_sum(n: int) -> float:
    return np.sqrt(n) + np.sqrt(n - 1)


def ct_time_to_z(zf: float, n: int) -> float:
    """Travel time on the counter-twisting branch from ``sqrt(1-1/N)`` down to ``zf``."""
    n = _check_n(n)
    if not -1.0 < zf < 1.0:
        raise DomainError(f"final Z must lie in (-1, 1), got {zf!r}")
    return float(np.log((1.0 - zf) * _edge_sum(n) / np.sqrt(1.0 - zf**2)))


def time_to_state_via_variance(ratio: float, n: int) -> float:
    """Time at which ``Delta J_x / J`` of the stretched patch reaches ``ratio``."""
    if not 0.0 <= ratio <= 1.0:
        raise DomainError(f"variance ratio must lie in [0, 1], got {ratio!r}")
    return ct_time_to_z(np.sqrt(1.0 - ratio**2), n)


def ewss_ratio(n: int) -> float:
    j = n / 2.0
    return np.sqrt((1.0 + 1.0 / j) / 3.0)


def yurke_ratio(n: int, alpha: float) -> float:
    s2 = np.sin(alpha) ** 2
    return 0.5 * np.sqrt(2.0 - s2 + (4.0 - 6.0 * s2) / n)


def ct_ewss_large_n(n: int) -> float:
    return float(np.log((np.sqrt(3) - np.sqrt(2)) * _edge_sum(_check_n(n))))


def ct_yurke_large_n(n: int, alpha: float) -> float:
    s2 = np.sin(alpha) ** 2
    return float(np.log((2.0 - np.sqrt(2.0 + s2)) / np.sqrt(2.0 - s2) * _edge_sum(_check_n(n))))


def bws_interval(n: int) -> tuple[float, float]:
    s = _edge_sum(_check_n(n))
    return float(np.log((np.sqrt(8) - np.sqrt(7)) * s)), float(np.log((np.sqrt(7) - np.sqrt(6)) * s))


def tat_time_to_z(zf: float, n: int) -> float:
    """Critical-coupling TaT travel time from ``1/sqrt(2N)`` to ``zf``."""
    n = _check_n(n)
    if not 0.0 < zf <= 1.0:
        raise DomainError(f"final Z must lie in (0, 1], got {zf!r}")
    edge = np.sqrt(2 * n) + np.sqrt(2 * n - 1)
    return float(2.0 * np.log(zf * edge / (1.0 + np.sqrt(1.0 - zf**2))))


def three_tat_initial_z(n: int) -> float:
    """Edge of the coherent patch centred on the critical 3TaT saddle."""
    n = _check_n(n)
    c = np.arccos(np.sqrt(3.0 / 5.0))
    return 0.5 + 1.0 / (2.0 * np.sqrt((1.0 + 1.0 / (3.0 * c**2)) * n))


def three_tat_qfi_time(n: int, tol: float = 1e-12) -> float:
    z_upper = branch_speed(CRITICAL_3TAT).z_range[1]
    return travel_time(CRITICAL_3TAT, three_tat_initial_z(n), z_upper, tol=tol)


def ehrenfest_time(model, n: int) -> float:
    """``ln(N) / (2 Lambda)`` with ``Lambda`` the saddle exponent, in units of ``1/chi``."""
    n = _check_n(n)
    lam = saddle_lyapunov(model) / abs(model.chi)
    return float(np.log(n) / (2.0 * lam))


def predict(label: str, n: int, alpha: float | None = None) -> TimescalePrediction:
    """Closed-form preparation time for one of :data:`LABELS`."""
    n = _check_n(n)
    flagged = False
    if label == "CT_sq":
        val = float(np.log((np.sqrt(2) - 1) * _edge_sum(n)))
    elif label == "CT_QFI":
        val = float(np.log(_edge_sum(n)))
    elif label == "CT_BWS_lower":
        val = bws_interval(n)[0]
    elif label == "CT_BWS_upper":
        val = bws_interval(n)[1]
    elif label == "CT_EWSS":
        val = time_to_state_via_variance(ewss_ratio(n), n)
    elif label == "CT_Yurke":
        if alpha is None or not np.isfinite(alpha):
            raise DomainError("CT_Yurke needs a finite mixing angle alpha")
        if abs(alpha) > YURKE_SMALL_ALPHA:
            flagged = True
            warnings.warn(f"alpha={alpha} is outside the small-angle regime", stacklevel=2)
        val = time_to_state_via_variance(yurke_ratio(n, alpha), n)
    elif label == "TaT_sq":
        val = tat_time_to_z(1.0 - np.sqrt(3) / 2.0, n)
    elif label == "TaT_QFI":
        val = tat_time_to_z(1.0, n)
    elif label == "TaT3_QFI":
        val = three_tat_qfi_time(n)
    elif label == "Ehrenfest_CT":
        val = ehrenfest_time(TwoAxisCT(1.0), n)
    elif label == "Ehrenfest_TaT":
        val = ehrenfest_time(CRITICAL_TAT, n)
    elif label == "Ehrenfest_3TaT":
        val = ehrenfest_time(CRITICAL_3TAT, n)
    else:
        raise DomainError(f"unknown timescale label {label!r}")
    return TimescalePrediction(label=label, n_particles=n, chi_t=val, flagged=flagged)


def ct_z_of_t(n: int, chi_t):
    """Counter-twisting branch height ``Z(t)`` from ``Z(0) = sqrt(1 - 1/N)``."""
    n = _check_n(n)
    z0 = np.sqrt(1.0 - 1.0 / n)
    th = np.tanh(np.asarray(chi_t, dtype=float))
    if np.any(np.asarray(chi_t) < 0) or np.any(th >= z0):
        raise DomainError("time must be non-negative and before the branch crosses the equator")
    return (z0 - th) / (1.0 - z0 * th)


def ct_explicit_xi2(n: int, chi_t):
    """Semiclassical squeezing ``1 / (N Z^2 (1 - Z^2))`` along the branch."""
    z = ct_z_of_t(n, chi_t)
    return 1.0 / (n * z**2 * (1.0 - z**2))


def ct_explicit_gain(n: int, chi_t):
    """Semiclassical Fisher gain ``N / F`` with ``F = N^2 (1 - Z^2)``."""
    z = ct_z_of_t(n, chi_t)
    return 1.0 / (n * (1.0 - z**2))
