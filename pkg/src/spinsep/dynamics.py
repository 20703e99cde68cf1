"""Unitary time evolution in the Dicke basis and collective-spin moments.

Two independent propagators are provided.  The default expands the
propagator in Chebyshev polynomials of the rescaled Hamiltonian, using only
sparse matrix-vector products.  The ``"eigh"`` route diagonalises the dense
Hamiltonian once and applies exact phases; it serves as a cross-check and is
convenient when many widely spaced times are needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.linalg as la
from scipy.special import jv

from .errors import DomainError, IntegrationError
from .spin_core import CollectiveOperator, SpinEnsemble, spin_operators

MIN_TOL, MAX_TOL = 1e-12, 1e-6
NORM_DRIFT_LIMIT = 1e-9
ENERGY_DRIFT_LIMIT = 1e-8
# Largest Bessel argument handled in one Chebyshev step.
_MAX_CHEB_ARG = 150.0


@dataclass(frozen=True)
class SpinMoments:
    """First and symmetrised second moments of ``(Jx, Jy, Jz)``."""

    mean: np.ndarray
    cov: np.ndarray


@dataclass(frozen=True)
class StateTrajectory:
    times: np.ndarray
    states: np.ndarray
    norm_drift: float
    energy_drift: float

    def __len__(self) -> int:
        return len(self.times)


def spin_moments(ensemble, psi: np.ndarray) -> SpinMoments:
    """Mean spin vector and covariance ``Re<J_a J_b> - <J_a><J_b>``."""
    ops = spin_operators(ensemble)
    psi = np.asarray(psi, dtype=complex)
    vecs = np.stack([op @ psi for op in ops])
    mean = np.real(vecs @ psi.conj())
    second = np.real(vecs.conj() @ vecs.T)
    cov = second - np.outer(mean, mean)
    return SpinMoments(mean=mean, cov=0.5 * (cov + cov.T))


def batch_spin_moments(ensemble, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moments for a stack of states with shape ``(T, dim)``.

    Returns ``means`` with shape ``(T, 3)`` and ``covs`` with shape ``(T, 3, 3)``.
    """
    ops = spin_operators(ensemble)
    states = np.atleast_2d(np.asarray(states, dtype=complex))
    vecs = np.stack([(op @ states.T).T for op in ops], axis=1)  # (T, 3, dim)
    means = np.real(np.einsum("tad,td->ta", vecs, states.conj()))
    second = np.real(np.einsum("tad,tbd->tab", vecs.conj(), vecs))
    covs = second - means[:, :, None] * means[:, None, :]
    return means, 0.5 * (covs + np.swapaxes(covs, 1, 2))


def _check_inputs(hamiltonian: CollectiveOperator, psi0, times, tol):
    if not (MIN_TOL <= tol <= MAX_TOL):
        raise DomainError(f"tolerance must lie in [{MIN_TOL}, {MAX_TOL}], got {tol!r}")
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (hamiltonian.dim,):
        raise DomainError(f"state has shape {psi0.shape}, expected ({hamiltonian.dim},)")
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise DomainError("initial state must be normalised")
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise DomainError("time grid must be a non-empty 1-D array")
    if not np.all(np.isfinite(times)) or times[0] < 0 or np.any(np.diff(times) < 0):
        raise DomainError("time grid must be finite, non-negative and non-decreasing")
    return psi0, times


def _spectral_window(hamiltonian: CollectiveOperator) -> tuple[float, float]:
    """Gershgorin enclosure of the spectrum as ``(centre, half_width)``."""
    mat = hamiltonian.matrix
    diag = np.real(mat.diagonal())
    radius = np.asarray(abs(mat).sum(axis=1)).ravel() - np.abs(diag)
    lo, hi = float(np.min(diag - radius)), float(np.max(diag + radius))
    half = 0.5 * (hi - lo)
    half = half * 1.01 + 1e-12
    return 0.5 * (hi + lo), half


class ChebyshevPropagator:
    """``exp(-i H dt)`` applied through a Chebyshev expansion."""

    def __init__(self, hamiltonian: CollectiveOperator, tol: float):
        self.matrix = hamiltonian.matrix
        self.centre, self.half = _spectral_window(hamiltonian)
        self.tol = tol

    def _coefficients(self, x: float, dt: float) -> np.ndarray:
        # Truncate once the Bessel tail is far below the per-step budget.
        cutoff = max(1e-3 * self.tol * max(dt, 1e-3), 1e-17)
        kmax = int(x + 10.0 * x ** (1.0 / 3.0) + 30)
        k = np.arange(kmax + 1)
        bessel = jv(k, x)
        small = np.abs(bessel) < cutoff
        # first index beyond x where two consecutive terms are negligible
        tail = np.nonzero(small[:-1] & small[1:] & (k[:-1] > x))[0]
        n_terms = int(tail[0]) + 1 if tail.size else kmax + 1
        coef = 2.0 * (-1j) ** k[:n_terms] * bessel[:n_terms]
        coef[0] /= 2.0
        return coef

    def step(self, psi: np.ndarray, dt: float) -> np.ndarray:
        if dt == 0.0:
            return psi
        n_sub = max(1, int(np.ceil(self.half * dt / _MAX_CHEB_ARG)))
        h = dt / n_sub
        coef = self._coefficients(self.half * h, h)
        phase = np.exp(-1j * self.centre * h)
        for _ in range(n_sub):
            psi = phase * self._series(psi, coef)
        return psi

    def _series(self, psi: np.ndarray, coef: np.ndarray) -> np.ndarray:
        def scaled(v):
            return (self.matrix @ v - self.centre * v) / self.half

        t_prev = psi
        out = coef[0] * t_prev
        if len(coef) == 1:
            return out
        t_cur = scaled(psi)
        out = out + coef[1] * t_cur
        for c in coef[2:]:
            t_prev, t_cur = t_cur, 2.0 * scaled(t_cur) - t_prev
            out = out + c * t_cur
        return out


class EigenPropagator:
    """Exact propagation through a dense Hermitian eigendecomposition."""

    def __init__(self, hamiltonian: CollectiveOperator):
        self.energies, self.vectors = la.eigh(hamiltonian.dense())

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        return self.vectors.conj().T @ psi

    def at(self, coef: np.ndarray, t: float) -> np.ndarray:
        return self.vectors @ (np.exp(-1j * self.energies * t) * coef)


def propagate(
    hamiltonian: CollectiveOperator,
    psi0: np.ndarray,
    times,
    tol: float = 1e-10,
    method: str = "chebyshev",
) -> Iterator[tuple[float, np.ndarray]]:
    """Yield ``(t, psi(t))`` for each grid time; ``psi0`` is the state at ``t = 0``."""
    psi0, times = _check_inputs(hamiltonian, psi0, times, tol)
    if method == "eigh":
        prop = EigenPropagator(hamiltonian)
        coef = prop.coefficients(psi0)
        for t in times:
            yield float(t), prop.at(coef, t)
        return
    if method != "chebyshev":
        raise DomainError(f"unknown propagation method {method!r}")
    prop = ChebyshevPropagator(hamiltonian, tol)
    psi, t_now = psi0, 0.0
    for t in times:
        psi = prop.step(psi, float(t) - t_now)
        if not np.all(np.isfinite(psi)):
            raise IntegrationError("non-finite amplitudes in Chebyshev step", t_now)
        t_now = float(t)
        yield t_now, psi


def evolve(
    hamiltonian: CollectiveOperator,
    psi0: np.ndarray,
    times,
    tol: float = 1e-10,
    method: str = "chebyshev",
) -> StateTrajectory:
    """Evolve ``psi0`` under ``exp(-i H t)`` and return states on the grid.

    Raises :class:`IntegrationError` if the norm or energy drifts beyond the
    accuracy contract, carrying the last time that was reached.
    """
    times = np.asarray(times, dtype=float)
    states = np.empty((times.size, hamiltonian.dim), dtype=complex)
    e0 = hamiltonian.expectation(np.asarray(psi0, dtype=complex)).real
    scale = max(hamiltonian.norm_bound(), 1e-300)
    norm_drift = energy_drift = 0.0
    for i, (t, psi) in enumerate(propagate(hamiltonian, psi0, times, tol, method)):
        states[i] = psi
        norm_drift = max(norm_drift, abs(np.linalg.norm(psi) - 1.0))
        energy_drift = max(energy_drift, abs(hamiltonian.expectation(psi).real - e0) / scale)
        if norm_drift > NORM_DRIFT_LIMIT or energy_drift > ENERGY_DRIFT_LIMIT:
            raise IntegrationError(
                f"drift beyond contract (norm {norm_drift:.3e}, energy {energy_drift:.3e})", t
            )
    return StateTrajectory(times=times, states=states, norm_drift=norm_drift, energy_drift=energy_drift)


def ensemble_of(hamiltonian: CollectiveOperator) -> SpinEnsemble:
    return SpinEnsemble(hamiltonian.dim - 1)
