"""Squeezing, Fisher information and peak detection on time series."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence, Union

import numpy as np

from .dynamics import SpinMoments, batch_spin_moments, propagate, spin_moments
from .errors import DomainError, PeakNotFoundError, UnboundedVarianceError, UndefinedSqueezingError
from .spin_core import CollectiveOperator, SpinEnsemble, _as_ensemble, reorient, target_state

# Mean spin below this fraction of J leaves the squeezing direction undefined.
MEAN_SPIN_FLOOR = 1e-6


def _axis_vector(axis) -> np.ndarray:
    if isinstance(axis, str):
        key = axis.lower()
        if key not in ("x", "y", "z"):
            raise DomainError(f"unknown axis {axis!r}")
        vec = np.zeros(3)
        vec["xyz".index(key)] = 1.0
        return vec
    vec = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(vec)
    if vec.shape != (3,) or not np.isfinite(norm) or norm == 0:
        raise DomainError(f"axis must be a non-zero 3-vector, got {axis!r}")
    return vec / norm


def _perpendicular_basis(direction: np.ndarray) -> np.ndarray:
    """Two orthonormal vectors spanning the plane normal to ``direction``."""
    n = direction / np.linalg.norm(direction)
    seed = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = seed - n * np.dot(seed, n)
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(n, e1)])


def wineland_from_moments(moments: SpinMoments, n_particles: int) -> float:
    """``xi^2 = N * min perpendicular variance / |<J>|^2``."""
    mean = np.asarray(moments.mean, dtype=float)
    norm = np.linalg.norm(mean)
    if norm < MEAN_SPIN_FLOOR * n_particles / 2.0:
        raise UndefinedSqueezingError(f"mean spin length {norm:.3e} is too small")
    basis = _perpendicular_basis(mean)
    block = basis @ moments.cov @ basis.T
    min_var = float(np.linalg.eigvalsh(0.5 * (block + block.T))[0])
    return n_particles * min_var / norm**2


def wineland_xi2(ensemble, psi: np.ndarray) -> float:
    """Wineland squeezing parameter of a pure state."""
    ens = _as_ensemble(ensemble)
    return wineland_from_moments(spin_moments(ens, psi), ens.n_particles)


def qfi_from_moments(moments: SpinMoments, axis: Union[str, Sequence[float]] = "optimal") -> float:
    """Pure-state Fisher information ``4 Var(n.spin_length)``; ``'optimal'`` maximises over ``n``."""
    cov = np.asarray(moments.cov, dtype=float)
    if isinstance(axis, str) and axis.lower() == "optimal":
        return float(4.0 * np.linalg.eigvalsh(cov)[-1])
    n = _axis_vector(axis)
    return float(4.0 * n @ cov @ n)


def qfi_pure(ensemble, psi: np.ndarray, axis="optimal") -> float:
    return qfi_from_moments(spin_moments(ensemble, psi), axis)


def metrological_gain(fisher: float, n_particles: int) -> float:
    """``zeta^2 = N / F``; values below one beat the standard quantum limit."""
    if fisher <= 0:
        raise UnboundedVarianceError("Fisher information is zero")
    return n_particles / fisher


def cramer_rao_bound(fisher: float, repetitions: int = 1) -> float:
    """Quantum Cramer-Rao bound ``1/sqrt(nu F)`` on the phase uncertainty."""
    if repetitions < 1:
        raise DomainError("number of repetitions must be positive")
    if fisher <= 0:
        raise UnboundedVarianceError("Fisher information is zero")
    return 1.0 / np.sqrt(repetitions * fisher)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """``|<a|b>|^2`` for normalised pure states."""
    return float(abs(np.vdot(a, b)) ** 2)


# Frames in which counter-twisting from |J, J> produces each reference state:
# (new z axis, new x axis) passed to :func:`reorient`.
COUNTER_TWISTING_FRAMES = {
    "BWS": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "EWSS": ((1.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    "Yurke": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
    "TwinFock": ((0.0, 1.0, 0.0), (0.0, 0.0, 1.0)),
}


def counter_twisting_targets(ensemble, alpha: float | None = None, kinds=None) -> dict:
    """Reference states rotated into the frame reached by two-axis counter-twisting.

    ``Yurke`` is included only when ``alpha`` is given; ``Yurke`` and
    ``TwinFock`` are skipped for odd ``N``.
    """
    ens = _as_ensemble(ensemble)
    kinds = tuple(COUNTER_TWISTING_FRAMES) if kinds is None else tuple(kinds)
    out = {}
    for kind in kinds:
        if kind in ("Yurke", "TwinFock") and ens.n_particles % 2:
            continue
        if kind == "Yurke" and alpha is None:
            continue
        new_z, new_x = COUNTER_TWISTING_FRAMES[kind]
        out[kind] = reorient(ens, target_state(ens, kind, alpha), new_z, new_x)
    return out


@dataclass(frozen=True)
class MetrologyTimeSeries:
    """Figures of merit along a trajectory.

    ``xi2`` holds NaN at times where the mean spin is too short for the
    Wineland parameter to be defined.  ``fidelity`` maps target labels to
    series of overlaps.
    """

    times: np.ndarray
    xi2: np.ndarray
    qfi: dict
    fidelity: dict
    means: np.ndarray
    covs: np.ndarray


def metrology_series(
    hamiltonian: CollectiveOperator,
    psi0: np.ndarray,
    times,
    qfi_axes: Sequence = ("optimal",),
    targets: dict | None = None,
    tol: float = 1e-10,
    method: str = "chebyshev",
    chunk: int = 256,
) -> MetrologyTimeSeries:
    """Evolve ``psi0`` and record squeezing, QFI and target fidelities."""
    ens = SpinEnsemble(hamiltonian.dim - 1)
    times = np.asarray(times, dtype=float)
    targets = dict(targets or {})
    means = np.empty((times.size, 3))
    covs = np.empty((times.size, 3, 3))
    fid = {name: np.empty(times.size) for name in targets}
    buf, start = [], 0

    def flush():
        nonlocal buf, start
        if not buf:
            return
        block = np.stack(buf)
        mu, cv = batch_spin_moments(ens, block)
        means[start : start + len(buf)] = mu
        covs[start : start + len(buf)] = cv
        for name, target in targets.items():
            fid[name][start : start + len(buf)] = np.abs(block @ np.conj(target)) ** 2
        start += len(buf)
        buf = []

    for _, psi in propagate(hamiltonian, psi0, times, tol, method):
        buf.append(psi)
        if len(buf) >= chunk:
            flush()
    flush()

    xi2 = np.full(times.size, np.nan)
    for i in range(times.size):
        try:
            xi2[i] = wineland_from_moments(SpinMoments(means[i], covs[i]), ens.n_particles)
        except UndefinedSqueezingError:
            pass
    qfi = {}
    for axis in qfi_axes:
        key = axis if isinstance(axis, str) else tuple(float(a) for a in axis)
        qfi[key] = np.array([qfi_from_moments(SpinMoments(means[i], covs[i]), axis) for i in range(times.size)])
    return MetrologyTimeSeries(times=times, xi2=xi2, qfi=qfi, fidelity=fid, means=means, covs=covs)


def find_first_peak(
    times, values, kind: Literal["min", "max"] = "max"
) -> tuple[float, float]:
    """First interior local extremum, refined by a parabola through 3 samples.

    Samples that are NaN are skipped: a candidate needs finite neighbours.
    Returns ``(time, value)`` of the parabola vertex.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise DomainError("times and values must be 1-D arrays of equal length")
    if kind not in ("min", "max"):
        raise DomainError(f"kind must be 'min' or 'max', got {kind!r}")
    s = -y if kind == "min" else y
    for i in range(1, len(s) - 1):
        a, b, c = s[i - 1], s[i], s[i + 1]
        if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(c)):
            continue
        if b > a and b >= c:
            t_peak, s_peak = _parabola_vertex(t[i - 1 : i + 2], s[i - 1 : i + 2])
            return t_peak, (-s_peak if kind == "min" else s_peak)
    raise PeakNotFoundError(f"no interior {kind} in series of length {len(s)}")


def _parabola_vertex(t: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    t0, t1, t2 = t
    y0, y1, y2 = y
    d1 = (y1 - y0) / (t1 - t0)
    d2 = (y2 - y1) / (t2 - t1)
    curv = (d2 - d1) / (t2 - t0)
    if curv == 0.0:
        return float(t1), float(y1)
    # stationary point of y0 + d1 (t - t0) + curv (t - t0)(t - t1)
    tv = 0.5 * (t0 + t1) - d1 / (2.0 * curv)
    tv = min(max(tv, t0), t2)
    yv = y0 + d1 * (tv - t0) + curv * (tv - t0) * (tv - t1)
    return float(tv), float(yv)
