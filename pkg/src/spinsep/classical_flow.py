"""Mean-field flows on the unit sphere, fixed points and separatrix geometry.

The classical energy ``E(X, Y, Z)`` of each model is the large-``N`` limit of
``<H>/J`` on spin coherent states.  Trajectories follow the spin Poisson
bracket, ``dR/dt = grad E x R``, which reproduces the Heisenberg equations of
the collective operators to leading order in ``1/N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import ellipe

from .errors import DegenerateSaddleError, DomainError, NoSaddleError, SingularEndpointError
from .spin_core import PTaT, PTwoAxisCT, TaT, TwoAxisCT, validate_spec

FlowModel = Union[TwoAxisCT, PTwoAxisCT, TaT, PTaT]

# Tolerances for fixed-point bookkeeping, relative to the model's rate scale.
_FIXED_TOL = 1e-9
_EIG_TOL = 1e-9


def _validate(model) -> None:
    if not isinstance(model, (TwoAxisCT, PTwoAxisCT, TaT, PTaT)):
        raise TypeError(f"unsupported flow model {model!r}")
    validate_spec(model)


def _order(model) -> int:
    return model.p if isinstance(model, (PTwoAxisCT, PTaT)) else 2


def rate_scale(model) -> float:
    scale = abs(model.chi) + abs(getattr(model, "omega", 0.0))
    return scale if scale > 0 else 1.0


def classical_energy(model: FlowModel, r) -> np.ndarray:
    """Energy per spin ``E(X, Y, Z)``; accepts ``(..., 3)`` arrays."""
    _validate(model)
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    if isinstance(model, TwoAxisCT):
        return model.chi * x * y
    p = _order(model)
    if isinstance(model, PTwoAxisCT):
        return model.chi / p * (x**p - y**p)
    return model.omega * x + model.chi / p * z**p


def canonical_energy(model: FlowModel, z, phi) -> np.ndarray:
    """Energy in the canonical pair ``(Z, phi)`` with ``X + iY = sqrt(1-Z^2) e^{i phi}``."""
    z = np.asarray(z, dtype=float)
    rho = np.sqrt(np.clip(1.0 - z**2, 0.0, None))
    r = np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=-1)
    return classical_energy(model, r)


def energy_gradient(model: FlowModel, r) -> np.ndarray:
    _validate(model)
    r = np.asarray(r, dtype=float)
    x, y, z = r[..., 0], r[..., 1], r[..., 2]
    zero = np.zeros_like(x)
    if isinstance(model, TwoAxisCT):
        g = (model.chi * y, model.chi * x, zero)
    elif isinstance(model, PTwoAxisCT):
        p = model.p
        g = (model.chi * x ** (p - 1), -model.chi * y ** (p - 1), zero)
    else:
        p = _order(model)
        g = (model.omega + zero, zero, model.chi * z ** (p - 1))
    return np.stack(g, axis=-1)


def energy_hessian(model: FlowModel, r) -> np.ndarray:
    _validate(model)
    x, y, z = (float(v) for v in np.asarray(r, dtype=float))
    h = np.zeros((3, 3))
    if isinstance(model, TwoAxisCT):
        h[0, 1] = h[1, 0] = model.chi
    elif isinstance(model, PTwoAxisCT):
        p = model.p
        h[0, 0] = model.chi * (p - 1) * x ** (p - 2)
        h[1, 1] = -model.chi * (p - 1) * y ** (p - 2)
    else:
        p = _order(model)
        h[2, 2] = model.chi * (p - 1) * z ** (p - 2)
    return h


def _cross_matrix(v) -> np.ndarray:
    """Matrix ``[v]`` with ``[v] w = v x w``."""
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def rhs(model: FlowModel, r) -> np.ndarray:
    """Mean-field velocity ``dR/dt``."""
    r = np.asarray(r, dtype=float)
    return np.cross(energy_gradient(model, r), r)


def jacobian(model: FlowModel, r) -> np.ndarray:
    """Analytic Jacobian of :func:`rhs` in ambient coordinates."""
    r = np.asarray(r, dtype=float)
    g = energy_gradient(model, r)
    return _cross_matrix(g) - _cross_matrix(r) @ energy_hessian(model, r)


@dataclass(frozen=True)
class FixedPoint:
    position: np.ndarray
    kind: str  # "saddle", "center" or "degenerate"
    eigenvalues: np.ndarray


def classify(model: FlowModel, r) -> FixedPoint:
    eig = np.linalg.eigvals(jacobian(model, r))
    scale = rate_scale(model)
    if np.max(np.abs(eig)) < _EIG_TOL * scale:
        kind = "degenerate"
    elif np.max(eig.real) > _EIG_TOL * scale:
        kind = "saddle"
    else:
        kind = "center"
    return FixedPoint(position=np.asarray(r, dtype=float), kind=kind, eigenvalues=eig)


def _meridian_roots(func: Callable, n_grid: int = 20001) -> list[float]:
    """Zeros of the vectorised ``func(a)`` on ``(0, pi)`` and ``(pi, 2 pi)``."""
    roots = []
    # geometric refinement resolves roots hugging the interval ends at strong coupling
    edge = np.geomspace(1e-12, 1e-2, 400)
    for lo, hi in ((0.0, np.pi), (np.pi, 2 * np.pi)):
        a = np.unique(np.concatenate([np.linspace(lo, hi, n_grid)[1:-1], lo + edge, hi - edge]))
        vals = np.asarray(func(a), dtype=float)
        for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
            if vals[i] == 0.0:
                roots.append(float(a[i]))
            elif vals[i + 1] != 0.0:
                roots.append(brentq(func, a[i], a[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return roots


def _dedupe(points: list) -> list:
    out: list = []
    for p in points:
        p = np.asarray(p, dtype=float)
        p = p / np.linalg.norm(p)
        if all(np.linalg.norm(p - q) > 1e-9 for q in out):
            out.append(p)
    return out


def _candidate_points(model: FlowModel) -> list:
    s = np.sqrt(0.5)
    if isinstance(model, TwoAxisCT):
        return [(0, 0, 1), (0, 0, -1), (s, s, 0), (s, -s, 0), (-s, s, 0), (-s, -s, 0)]
    if isinstance(model, PTwoAxisCT):
        pts = [(0, 0, 1), (0, 0, -1), (1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0)]
        if model.p % 2 == 1 and model.p > 2:
            pts += [(s, -s, 0), (-s, s, 0)]
        return pts
    if model.omega == 0:
        raise DomainError("without the linear field the fixed points form a continuum")
    if isinstance(model, TaT):
        pts = [(1, 0, 0), (-1, 0, 0)]
        if model.chi != 0 and abs(model.omega / model.chi) < 1:
            w = model.omega / model.chi
            pts += [(w, 0, np.sqrt(1 - w**2)), (w, 0, -np.sqrt(1 - w**2))]
        return pts
    # PTaT: critical points of E restricted to the x-z great circle
    p, om, chi = model.p, model.omega, model.chi
    pts = [(1, 0, 0), (-1, 0, 0)]
    if chi != 0:
        if p == 2:
            def h(a):
                return chi * np.cos(a) - om
        else:
            def h(a):
                return chi * np.cos(a) * np.sin(a) ** (p - 2) - om
        pts += [(np.cos(a), 0.0, np.sin(a)) for a in _meridian_roots(h)]
    return pts


def fixed_points(model: FlowModel) -> list[FixedPoint]:
    """All isolated fixed points on the sphere with their linear type."""
    _validate(model)
    scale = rate_scale(model)
    out = []
    for p in _dedupe(_candidate_points(model)):
        if np.linalg.norm(rhs(model, p)) <= _FIXED_TOL * scale:
            out.append(classify(model, p))
    return out


def saddle(model: FlowModel) -> FixedPoint:
    """The hyperbolic fixed point that organises the separatrix.

    Counter-twisting models use the north pole.  Twist-and-turn models use
    the saddle with ``X > 0`` closest to the equator, preferring ``Z >= 0``.
    """
    _validate(model)
    if isinstance(model, (TwoAxisCT, PTwoAxisCT)):
        fp = classify(model, np.array([0.0, 0.0, 1.0]))
        if fp.kind == "center":
            raise NoSaddleError("north pole is not hyperbolic")
        return fp
    cands = [f for f in fixed_points(model) if f.kind == "saddle" and f.position[0] > -1e-12]
    if not cands:
        raise NoSaddleError(f"no saddle for {model!r}")
    return min(cands, key=lambda f: (abs(f.position[2]), -f.position[2]))


def saddle_lyapunov(model: FlowModel) -> float:
    """Largest real part of the Jacobian spectrum at the saddle."""
    fp = saddle(model)
    if fp.kind == "degenerate":
        raise DegenerateSaddleError("linearisation vanishes at the saddle")
    return float(np.max(fp.eigenvalues.real))


def branch_tangents(model: FlowModel, fp: FixedPoint | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Unit unstable and stable eigen-directions at the saddle, in the tangent plane."""
    fp = saddle(model) if fp is None else fp
    if fp.kind == "degenerate":
        raise DegenerateSaddleError("linearisation vanishes at the saddle")
    vals, vecs = np.linalg.eig(jacobian(model, fp.position))
    r = fp.position
    out = []
    for idx in (int(np.argmax(vals.real)), int(np.argmin(vals.real))):
        v = np.real(vecs[:, idx])
        v = v - r * np.dot(v, r)
        out.append(v / np.linalg.norm(v))
    return out[0], out[1]


def _reference_frame(model, r):
    """Viewing plane normal and in-plane orientation axis for branch angles."""
    if isinstance(model, (TaT, PTaT)):
        return np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0])
    return np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0])


def branch_angle(model: FlowModel, projection: str = "coordinate") -> float:
    """Cosine of the angle between the separatrix branches at the saddle.

    ``projection="coordinate"`` projects both eigen-directions on the
    coordinate plane normal to the field axis (y-z for twist-and-turn, x-y
    for counter-twisting).  ``projection="tangent"`` measures the angle in the
    tangent plane of the sphere.  Both directions are oriented to have a
    non-negative component along the in-plane reference axis (``+z`` or
    ``+x``), so the result is signed.
    """
    fp = saddle(model)
    u, s = branch_tangents(model, fp)
    r = fp.position
    normal, ref = _reference_frame(model, r)
    if projection == "coordinate":
        u = u - normal * np.dot(u, normal)
        s = s - normal * np.dot(s, normal)
    elif projection != "tangent":
        raise DomainError(f"unknown projection {projection!r}")
    ref_t = ref - r * np.dot(ref, r) if projection == "tangent" else ref
    if np.linalg.norm(ref_t) < 1e-12:
        ref_t = ref
    if np.dot(u, ref_t) < 0:
        u = -u
    if np.dot(s, ref_t) < 0:
        s = -s
    nu, ns = np.linalg.norm(u), np.linalg.norm(s)
    if nu < 1e-14 or ns < 1e-14:
        raise DegenerateSaddleError("branch direction collapses under projection")
    return float(np.clip(np.dot(u, s) / (nu * ns), -1.0, 1.0))


def branch_angle_radians(model: FlowModel, projection: str = "coordinate") -> float:
    """Angle in ``[0, pi]`` between the oriented separatrix branches."""
    return float(np.arccos(branch_angle(model, projection)))


# --- separatrix geometry -------------------------------------------------------


@dataclass(frozen=True)
class SeparatrixCurve:
    """Sampled separatrix through a saddle.

    ``branches`` holds ordered ``(n, 3)`` point arrays, one per curve through
    the saddle; ``tangents`` are the unstable and stable directions there.
    """

    model: object
    saddle: np.ndarray
    energy: float
    branches: tuple
    tangents: tuple
    method: str

    @property
    def samples(self) -> np.ndarray:
        return np.vstack(self.branches)

    @property
    def arclength(self) -> float:
        return float(sum(np.sum(np.linalg.norm(np.diff(b, axis=0), axis=1)) for b in self.branches))


def _great_circle(normal, start, n: int) -> np.ndarray:
    normal = np.asarray(normal, float) / np.linalg.norm(normal)
    start = np.asarray(start, float)
    other = np.cross(normal, start)
    ang = np.linspace(0.0, 2 * np.pi, n)
    return np.outer(np.cos(ang), start) + np.outer(np.sin(ang), other)


def _is_critical_three(model) -> bool:
    return (
        isinstance(model, PTaT)
        and model.p == 3
        and model.omega > 0
        and abs(model.chi / model.omega - 4 / np.sqrt(3)) < 1e-12
    )


def separatrix(model: FlowModel, n_points: int = 2001) -> SeparatrixCurve:
    """Sample the separatrix through :func:`saddle`.

    Counter-twisting models are unions of great circles; ``TaT`` and
    ``3TaT`` at critical coupling are parametrised in closed form by ``Z``;
    other twist-and-turn models are traced by predictor-corrector
    continuation of the energy level set.
    """
    if n_points < 1000:
        raise DomainError("at least 1000 points per branch are required")
    fp = saddle(model)
    r0 = fp.position
    e0 = float(classical_energy(model, r0))
    tangents = () if fp.kind == "degenerate" else branch_tangents(model, fp)
    if isinstance(model, TwoAxisCT):
        branches = (
            _great_circle((0, 1, 0), (0, 0, 1), n_points),
            _great_circle((1, 0, 0), (0, 0, 1), n_points),
        )
        method = "closed-form"
    elif isinstance(model, PTwoAxisCT):
        planes = [(1, -1, 0)] + ([(1, 1, 0)] if model.p % 2 == 0 else [])
        branches = tuple(_great_circle(n, (0, 0, 1), n_points) for n in planes)
        method = "closed-form"
    elif isinstance(model, TaT) or _is_critical_three(model):
        branches = _z_parametrised_branches(model, r0, e0, n_points)
        method = "closed-form"
    else:
        branches = _continuation_branches(model, fp, e0, tangents, n_points)
        method = "continuation"
    return SeparatrixCurve(
        model=model, saddle=r0, energy=e0, branches=branches, tangents=tangents, method=method
    )


def _z_parametrised_branches(model, r0, e0, n_points):
    speed = branch_speed(model)
    lo, hi = speed.z_range
    zs = r0[2]
    t = np.linspace(0.0, 1.0, n_points)
    z = lo + (hi - lo) * 0.5 * (1.0 - np.cos(np.pi * t))
    # keep the saddle itself on the grid
    z[np.argmin(np.abs(z - zs))] = zs
    if isinstance(model, TaT):
        u = model.chi / model.omega
        x = 1.0 - 0.5 * u * z**2
        y = z * np.sqrt(np.clip((u - 1.0) - 0.25 * u**2 * z**2, 0.0, None))
    else:
        x = (e0 - model.chi / model.p * z**model.p) / model.omega
        y = np.sign(z - zs) * np.sqrt(np.clip(speed.radicand(z), 0.0, None))
    return (np.column_stack([x, y, z]), np.column_stack([x, -y, z]))


def _project_level(model, r, e0, iters: int = 30):
    """Newton projection on ``{|R| = 1, E = e0}`` along the tangential gradient."""
    for _ in range(iters):
        r = r / np.linalg.norm(r)
        g = energy_gradient(model, r)
        gt = g - r * np.dot(g, r)
        de = float(classical_energy(model, r)) - e0
        nrm2 = float(np.dot(gt, gt))
        if nrm2 == 0.0:
            break
        r = r - de * gt / nrm2
        if abs(de) < 1e-15 * rate_scale(model):
            break
    return r / np.linalg.norm(r)


def trace_level_set(
    model, start, direction, e0, step: float, stop_points, max_steps: int = 200000
) -> np.ndarray:
    """Predictor-corrector march along ``E = e0`` until reaching a stop point."""
    r = _project_level(model, np.asarray(start, float), e0)
    prev_dir = np.asarray(direction, float)
    pts = [r]
    travelled = 0.0
    for _ in range(max_steps):
        t = np.cross(r, energy_gradient(model, r))
        t = t - r * np.dot(t, r)
        nt = np.linalg.norm(t)
        t = prev_dir if nt == 0 else t / nt
        if np.dot(t, prev_dir) < 0:
            t = -t
        r_new = _project_level(model, r + step * t, e0)
        prev_dir = (r_new - r) / np.linalg.norm(r_new - r)
        travelled += np.linalg.norm(r_new - r)
        r = r_new
        pts.append(r)
        if travelled > 10 * step:
            for sp in stop_points:
                if np.linalg.norm(r - sp) < 1.5 * step:
                    pts.append(np.asarray(sp, float))
                    return np.array(pts)
    raise DomainError("level-set continuation did not close")


def _continuation_branches(model, fp, e0, tangents, n_points):
    if not tangents:
        raise DegenerateSaddleError("continuation needs a hyperbolic saddle")
    eps = 1e-5
    stops = [f.position for f in fixed_points(model) if f.kind in ("saddle", "degenerate")]
    stops = [s for s in stops if abs(float(classical_energy(model, s)) - e0) < 1e-9 * rate_scale(model)]
    unstable = tangents[0]
    branches = []
    for sign in (1.0, -1.0):
        d = sign * unstable
        # first pass estimates the loop length, second samples it finely enough
        coarse = trace_level_set(model, fp.position + eps * d, d, e0, 2e-3, stops)
        length = np.sum(np.linalg.norm(np.diff(coarse, axis=0), axis=1))
        step = min(2e-3, length / (1.2 * n_points))
        path = trace_level_set(model, fp.position + eps * d, d, e0, step, stops)
        branches.append(np.vstack([fp.position, path]))
    return tuple(branches)


def separatrix_lengths() -> tuple[float, float, float]:
    """Saddle-to-pole branch lengths for 2ACT and critical TaT, and their difference.

    The TaT length is the complete elliptic integral ``E(k = i)``, i.e.
    ``ellipe`` at parameter ``m = -1``.
    """
    l_ct = np.pi / 2
    l_tat = float(ellipe(-1.0))
    return l_ct, l_tat, l_tat - l_ct


def critical_tat_curve(theta) -> np.ndarray:
    """Separatrix branch of TaT at critical coupling, ``(sin^2, sin cos, cos)``."""
    theta = np.asarray(theta, dtype=float)
    s, c = np.sin(theta), np.cos(theta)
    return np.stack([s**2, s * c, c], axis=-1)


def curvature_torsion_tat(theta) -> tuple:
    """Tabulated curvature and torsion expressions of :func:`critical_tat_curve`.

    The curvature equals the Frenet curvature.  The torsion expression equals
    ``3/4`` minus the Frenet torsion ``12 sin(theta)/(13 - 3 cos 2 theta)``;
    see :func:`frenet_torsion_tat` for the latter.
    """
    theta = np.asarray(theta, dtype=float)
    c2 = np.cos(2 * theta)
    kappa = 2.0 * np.sqrt(13.0 - 3.0 * c2) / (3.0 - c2) ** 1.5
    tau = 0.75 - 12.0 * np.sin(theta) / (13.0 - 3.0 * c2)
    return kappa, tau


def frenet_torsion_tat(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    return 12.0 * np.sin(theta) / (13.0 - 3.0 * np.cos(2 * theta))


def solve_curvature(target: float = 1.01) -> float:
    """Polar angle in ``(0, pi/2)`` where the critical-TaT curvature equals ``target``."""
    def f(t):
        return float(curvature_torsion_tat(t)[0]) - target

    return brentq(f, 0.5, np.pi / 2, xtol=1e-14)


# --- travel times along separatrix branches -----------------------------------


@dataclass(frozen=True)
class BranchSpeed:
    """``|dZ/dt| = scale * sqrt(lead * prod |Z - root|^mult)`` on one branch."""

    scale: float
    lead: float
    roots: np.ndarray
    mults: np.ndarray
    z_saddle: float
    z_range: tuple

    def radicand(self, z):
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, abs(self.lead), dtype=float)
        for r, m in zip(self.roots, self.mults):
            out = out * np.abs(z - r) ** m
        return out

    def reduced_speed(self, z, drop):
        """Speed with one simple root divided out (``drop`` is its index)."""
        z = np.asarray(z, dtype=float)
        out = np.full(z.shape, abs(self.lead), dtype=float)
        for i, (r, m) in enumerate(zip(self.roots, self.mults)):
            out = out * np.abs(z - r) ** (m - (1 if i == drop else 0))
        return self.scale * np.sqrt(out)


def _ptat_radicand_poly(model, e0) -> np.ndarray:
    p = _order(model)
    # X(Z) = (e0 - chi/p Z^p)/omega;  P = 1 - Z^2 - X^2
    xz = np.zeros(p + 1)
    xz[0] = e0 / model.omega
    xz[p] = -model.chi / (p * model.omega)
    poly = npoly.polysub([1.0, 0.0, -1.0], npoly.polymul(xz, xz))
    return npoly.polytrim(poly, 0.0)


def branch_speed(model: FlowModel) -> BranchSpeed:
    """Speed of ``Z`` along the separatrix branch that leaves the saddle in the x-z plane."""
    fp = saddle(model)
    zs = float(fp.position[2])
    if isinstance(model, TwoAxisCT):
        return BranchSpeed(abs(model.chi), 1.0, np.array([1.0, -1.0]), np.array([2, 2]), zs, (-1.0, 1.0))
    if isinstance(model, PTwoAxisCT):
        p = model.p
        if p % 2:
            raise DomainError("branch speed needs an even order")
        return BranchSpeed(
            2 * abs(model.chi), 0.5**p, np.array([1.0, -1.0]), np.array([p, p]), zs, (-1.0, 1.0)
        )
    e0 = float(classical_energy(model, fp.position))
    poly = _ptat_radicand_poly(model, e0)
    # divide out the double root at the saddle
    quotient, _ = npoly.polydiv(poly, [zs**2, -2.0 * zs, 1.0])
    lead = quotient[-1]
    qroots = np.roots(quotient[::-1]) if len(quotient) > 1 else np.array([])
    roots, mults = [zs], [2]
    used = np.zeros(len(qroots), dtype=bool)
    for i, r in enumerate(qroots):
        if used[i]:
            continue
        # merge numerically split double roots (second saddle at the same energy)
        close = [j for j in range(i + 1, len(qroots)) if not used[j] and abs(qroots[j] - r) < 1e-6]
        if close and abs(r.imag) < 1e-6:
            used[close[0]] = True
            roots.append(float(0.5 * (r.real + qroots[close[0]].real)))
            mults.append(2)
        else:
            roots.append(r.real if abs(r.imag) < 1e-10 else r)
            mults.append(1)
        used[i] = True
    roots_arr = np.array(roots, dtype=complex)
    real = [float(r.real) for r in roots_arr[1:] if abs(r.imag) == 0.0]
    below = [r for r in real if r < zs - 1e-12]
    above = [r for r in real if r > zs + 1e-12]
    lo = max(below) if below else -1.0
    hi = min(above) if above else 1.0
    roots_out = np.array([r.real if r.imag == 0 else r for r in roots_arr], dtype=complex)
    if np.all(roots_out.imag == 0):
        roots_out = roots_out.real
    return BranchSpeed(
        abs(model.omega), float(lead), roots_out, np.array(mults), zs, (max(lo, -1.0), min(hi, 1.0))
    )


def travel_time(model: FlowModel, z0: float, zf: float, tol: float = 1e-12) -> float:
    """Time ``chi * t`` for a point on the separatrix to move from ``z0`` to ``zf``.

    Endpoints at a turning point of the branch are integrable and handled by
    a square-root substitution; endpoints on a saddle are not and raise
    :class:`SingularEndpointError`.
    """
    _validate(model)
    if model.chi == 0:
        raise DomainError("time in units of 1/chi needs a non-zero chi")
    speed = branch_speed(model)
    lo, hi = speed.z_range
    a, b = sorted((float(z0), float(zf)))
    span_tol = 1e-12
    if a < lo - span_tol or b > hi + span_tol:
        raise DomainError(f"[{a}, {b}] leaves the branch range [{lo}, {hi}]")
    a, b = max(a, lo), min(b, hi)
    singular = [float(np.real(r)) for r, m in zip(speed.roots, speed.mults) if m >= 2 and np.isreal(r)]
    for s in singular:
        if min(abs(a - s), abs(b - s)) < 1e-14:
            raise SingularEndpointError(f"endpoint sits on the saddle at Z={s}")
        if a < s < b:
            raise SingularEndpointError(f"interval crosses the saddle at Z={s}")
    if a == b:
        return 0.0
    simple = [
        (i, float(np.real(r)))
        for i, (r, m) in enumerate(zip(speed.roots, speed.mults))
        if m == 1 and np.isreal(r)
    ]

    def plain(u, v):
        val, _ = quad(
            lambda z: 1.0 / (speed.scale * np.sqrt(speed.radicand(z))),
            u,
            v,
            epsabs=0.0,
            epsrel=tol,
            limit=500,
        )
        return val

    def near_root(end, other):
        """Closest simple root lying beyond ``end`` (away from ``other``)."""
        best = None
        for i, r in simple:
            beyond = (r <= end) if other > end else (r >= end)
            if beyond and abs(end - r) <= abs(other - end) and (best is None or abs(end - r) < abs(end - best[1])):
                best = (i, r)
        return best

    def substituted(end, other, root):
        idx, r = root
        sgn = 1.0 if other > end else -1.0  # Z = r + sgn * s^2
        s_end = np.sqrt(abs(end - r))
        s_other = np.sqrt(abs(other - r))
        val, _ = quad(
            lambda s: 2.0 / float(speed.reduced_speed(r + sgn * s * s, idx)),
            s_end,
            s_other,
            epsabs=0.0,
            epsrel=tol,
            limit=500,
        )
        return val

    mid = 0.5 * (a + b)
    total = 0.0
    for end, other in ((a, mid), (b, mid)):
        root = near_root(end, other)
        total += substituted(end, other, root) if root else plain(*sorted((end, other)))
    return abs(model.chi) * total
