"""Critical couplings, branch-angle sweeps and order parameters of p-spin models.

Couplings are quoted as the ratio ``chi / Omega`` of the p-order twist to the
linear field.  The twisting term favours the poles, so the "ground state"
of the associated ``p``-spin model is the highest-energy eigenstate of the
twist-and-turn Hamiltonian with the sign convention used here.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import brentq, minimize_scalar

from .classical_flow import branch_angle, classical_energy, saddle
from .errors import DegenerateSaddleError, DomainError, FiniteTimeBlowupError, NoSaddleError
from .spin_core import PTaT, SpinEnsemble, TaT, build_hamiltonian, coherent_state, jz

CHAIN_LABELS = (
    "spino=gs<dqpt=le",
    "spino<gs=le<dqpt",
    "spino<le<gs<dqpt",
    "spino<le<dqpt<gs",
)


def _check_p(p) -> int:
    if isinstance(p, bool) or int(p) != p or p < 2:
        raise DomainError(f"order p must be an integer >= 2, got {p!r}")
    return int(p)


def gs_coupling(p: int) -> float:
    """Coupling where the two classical energy maxima are degenerate."""
    p = _check_p(p)
    if p == 2:
        return 1.0
    return (p - 1) ** (p - 1) / np.sqrt(float(p * (p - 2)) ** (p - 2))


def gs_height(p: int) -> float:
    """``|Z|`` of the bifurcated maximum at :func:`gs_coupling`."""
    p = _check_p(p)
    return 0.0 if p == 2 else np.sqrt(p * (p - 2)) / (p - 1)


def le_coupling(p: int) -> float:
    """Coupling that maximises the saddle exponent at fixed ``chi``."""
    p = _check_p(p)
    if p == 2:
        return 2.0
    return (p - 1) ** (p - 1) / ((p - 2) ** (p - 2) * np.sqrt((p - 1) ** 2 - (p - 2) ** 2))


def le_height(p: int) -> float:
    p = _check_p(p)
    return (p - 2) / (p - 1)


def saddle_exponent_profile(p: int, z, chi: float = 1.0):
    """Saddle exponent as a function of the saddle height ``Z`` at fixed ``chi``.

    Uses the fixed-point relation ``Omega = chi X Z^(p-2)`` to eliminate the
    field; real values require ``Z^2 < (p-2)/(p-1)``.
    """
    p = _check_p(p)
    z = np.asarray(z, dtype=float)
    return chi * z ** (p - 2) * np.sqrt(np.clip((p - 2) - (p - 1) * z**2, 0.0, None))


def _max_fixed_point_weight(p: int) -> float:
    """``max_{s in [0,1]} s^(p-2) (1-s)`` by sampling plus bounded refinement."""
    def w(s):
        return s ** (p - 2) * (1.0 - s)

    grid = np.linspace(0.0, 1.0, 4001)
    vals = w(grid)
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
    if hi > lo:
        res = minimize_scalar(lambda s: -w(s), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        return max(float(-res.fun), float(vals[i]))
    return float(vals[i])


def has_bifurcated_roots(p: int, ratio: float) -> bool:
    """Whether ``s^(p-1) - s^(p-2) + (Omega/chi)^2`` has a root with ``s = Z^2`` in (0, 1)."""
    p = _check_p(p)
    if ratio <= 0:
        return False
    return _max_fixed_point_weight(p) - 1.0 / ratio**2 > 0.0


def spinodal_coupling(p: int, tol: float = 1e-10) -> float:
    """Smallest ``chi/Omega`` with extra fixed points, located by bisection."""
    p = _check_p(p)
    lo, hi = 1e-3, 1.0
    while not has_bifurcated_roots(p, hi):
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if has_bifurcated_roots(p, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _model(p: int, ratio: float):
    return TaT(omega=1.0, chi=ratio) if p == 2 else PTaT(p=p, omega=1.0, chi=ratio)


def saddle_energy(p: int, ratio: float) -> float:
    model = _model(p, ratio)
    return float(classical_energy(model, saddle(model).position))


def dqpt_coupling(p: int, tol: float = 1e-13) -> float:
    """Coupling where the pole energy ``chi/p`` meets the saddle energy."""
    p = _check_p(p)
    lo = spinodal_coupling(p) * (1.0 + 1e-6)

    def f(u):
        return u / p - saddle_energy(p, u)

    hi = 2.0 * lo
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps)


@dataclass(frozen=True)
class CriticalPoints:
    p: int
    spinodal: float
    gs: float
    le: float
    dqpt: float
    z_gs: float
    z_le: float
    chain: str


def critical_points(p: int) -> CriticalPoints:
    p = _check_p(p)
    if p == 2:
        spino, gs, le, dq = 1.0, 1.0, 2.0, 2.0
    else:
        spino, gs, le, dq = spinodal_coupling(p), gs_coupling(p), le_coupling(p), dqpt_coupling(p)
    return CriticalPoints(
        p=p, spinodal=spino, gs=gs, le=le, dqpt=dq,
        z_gs=gs_height(p), z_le=le_height(p), chain=_chain(spino, gs, le, dq),
    )


def _chain(spino, gs, le, dq, rtol: float = 1e-9) -> str:
    def eq(a, b):
        return abs(a - b) <= rtol * max(abs(a), abs(b))

    if eq(spino, gs) and eq(dq, le) and gs < le:
        return CHAIN_LABELS[0]
    if eq(gs, le) and spino < gs < dq:
        return CHAIN_LABELS[1]
    if spino < le < gs < dq:
        return CHAIN_LABELS[2]
    if spino < le < dq < gs:
        return CHAIN_LABELS[3]
    raise DomainError(f"unexpected ordering spino={spino}, gs={gs}, le={le}, dqpt={dq}")


@dataclass(frozen=True)
class AngleSweep:
    p: int
    ratios: np.ndarray
    cosines: np.ndarray  # NaN where no hyperbolic saddle exists
    min_abs_cos: float
    argmin_ratio: float


def branch_angle_sweep(p: int, ratios, refine: bool = True) -> AngleSweep:
    """``cos`` of the branch angle over a coupling grid; grid points without a saddle are skipped.

    With ``refine`` the grid minimum of ``|cos|`` is polished by a bounded
    scalar search between the neighbouring grid points.
    """
    p = _check_p(p)
    ratios = np.asarray(ratios, dtype=float)

    def cos_at(u):
        try:
            return branch_angle(_model(p, u))
        except (NoSaddleError, DegenerateSaddleError):
            return np.nan

    cosines = np.array([cos_at(u) for u in ratios])
    valid = np.isfinite(cosines)
    if not np.any(valid):
        raise NoSaddleError(f"no saddle anywhere on the grid for p={p}")
    idx = int(np.nanargmin(np.abs(cosines)))
    best_u, best = float(ratios[idx]), float(abs(cosines[idx]))
    if refine and 0 < idx < ratios.size - 1 and valid[idx - 1] and valid[idx + 1]:
        res = minimize_scalar(
            lambda u: abs(cos_at(u)) if np.isfinite(cos_at(u)) else np.inf,
            bounds=(ratios[idx - 1], ratios[idx + 1]),
            method="bounded",
            options={"xatol": 1e-12},
        )
        if res.fun <= best:
            best_u, best = float(res.x), float(res.fun)
    return AngleSweep(p=p, ratios=ratios, cosines=cosines, min_abs_cos=best, argmin_ratio=best_u)


def verify_no_local_optimality(p: int, ratios=None) -> float:
    """Minimum ``|cos|`` of the branch angle over ``[1.2 * spinodal, 50]`` by default."""
    p = _check_p(p)
    if ratios is None:
        ratios = np.linspace(1.2 * critical_points(p).spinodal, 50.0, 2000)
    return branch_angle_sweep(p, ratios).min_abs_cos


def p2act_branch_solution(p: int, u0: float, chi_t: float, chi: float = 1.0) -> float:
    """Unstable-branch coordinate of the p-order counter-twist near the pole.

    Solves ``du/dt = chi u^(p-1)``; for ``p > 2`` the solution reaches
    infinity at ``chi t* = 1 / ((p - 2) u0^(p-2))``.
    """
    p = _check_p(p)
    if p % 2:
        raise DomainError("the branch solution is defined for even p")
    if not (np.isfinite(u0) and u0 > 0 and np.isfinite(chi_t) and chi_t >= 0):
        raise DomainError("need u0 > 0 and chi_t >= 0")
    tau = chi_t * chi
    if p == 2:
        return float(u0 * np.exp(tau))
    t_star = 1.0 / ((p - 2) * u0 ** (p - 2))
    if tau >= t_star:
        raise FiniteTimeBlowupError("branch solution diverges", t_star)
    return float((u0 ** (-(p - 2)) - (p - 2) * tau) ** (-1.0 / (p - 2)))


@dataclass(frozen=True)
class OrderParameters:
    z_gs_quantum: float
    z_inf: float


def _time_average_kernel(omega: np.ndarray, t: float) -> np.ndarray:
    x = omega * t
    small = np.abs(x) < 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + 0.5j * x, np.expm1(1j * safe) / (1j * safe))


def order_parameters(model, n: int, chi_t_avg: float = 100.0, field: float = 1e-6) -> OrderParameters:
    """Equilibrium and dynamical order parameters at finite ``N``.

    ``z_gs_quantum`` is ``<Jz>/J`` in the highest-energy eigenstate with a
    weak field ``field * (|chi| + Omega) * Jz`` selecting the ``+Z`` well.
    ``z_inf`` is the exact average of ``<Jz>/J`` over ``[0, T]`` starting from
    ``|J, J>``, with ``chi * T = chi_t_avg``.
    """
    if not isinstance(model, (TaT, PTaT)):
        raise DomainError("order parameters are defined for twist-and-turn models")
    if chi_t_avg < 100.0:
        raise DomainError("averaging window must satisfy chi * T >= 100")
    if model.chi == 0:
        raise DomainError("chi must be non-zero")
    ens = SpinEnsemble(n)
    h = build_hamiltonian(model, ens).dense()
    jz_diag = ens.m_values
    scale = abs(model.chi) + model.omega
    e_f, v_f = la.eigh(h + field * scale * np.diag(jz_diag), subset_by_index=[ens.dim - 1, ens.dim - 1])
    top = v_f[:, 0]
    z_gs = float(np.real(np.vdot(top, jz_diag * top)) / ens.spin_length)

    energies, vecs = la.eigh(h)
    coef = vecs.conj().T @ coherent_state(ens, 0.0, 0.0)
    a_mat = vecs.conj().T @ (jz_diag[:, None] * vecs)
    t_avg = chi_t_avg / abs(model.chi)
    kernel = _time_average_kernel(energies[:, None] - energies[None, :], t_avg)
    z_inf = float(np.real(np.einsum("a,ab,b,ab->", coef.conj(), a_mat, coef, kernel)) / ens.spin_length)
    return OrderParameters(z_gs_quantum=z_gs, z_inf=z_inf)
