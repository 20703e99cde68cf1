"""Collective spin operators, model Hamiltonians and reference states.

States live in the symmetric (Dicke) subspace of ``N`` spin-1/2 particles,
i.e. total spin ``J = N/2`` and dimension ``N + 1``.  Basis index ``k``
holds the eigenstate of ``Jz`` with eigenvalue ``m = J - k``, so index 0 is
the north pole ``|J, J>`` and the last index is ``|J, -J>``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply
from scipy.spatial.transform import Rotation
from scipy.special import gammaln

from .errors import DomainError, NonHermitianError

MAX_PARTICLES = 4096
TARGET_KINDS = ("BWS", "EWSS", "Yurke", "TwinFock")


@dataclass(frozen=True)
class SpinEnsemble:
    """``N`` spin-1/2 particles restricted to the symmetric subspace."""

    n_particles: int

    def __post_init__(self):
        n = self.n_particles
        if isinstance(n, bool) or int(n) != n:
            raise DomainError(f"particle number must be an integer, got {n!r}")
        if not 1 <= n <= MAX_PARTICLES:
            raise DomainError(f"particle number must lie in [1, {MAX_PARTICLES}], got {n}")
        object.__setattr__(self, "n_particles", int(n))

    @property
    def spin_length(self) -> float:
        return self.n_particles / 2.0

    @property
    def dim(self) -> int:
        return self.n_particles + 1

    @property
    def m_values(self) -> np.ndarray:
        """Jz eigenvalues in basis order (descending)."""
        return self.spin_length - np.arange(self.dim, dtype=float)


def _as_ensemble(ensemble: Union[SpinEnsemble, int]) -> SpinEnsemble:
    return ensemble if isinstance(ensemble, SpinEnsemble) else SpinEnsemble(ensemble)


@dataclass(frozen=True)
class CollectiveOperator:
    """Sparse banded matrix acting on the Dicke basis."""

    matrix: sp.csr_array
    bandwidth: int

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def __matmul__(self, other):
        return self.matrix @ other

    def expectation(self, psi: np.ndarray) -> complex:
        return complex(np.vdot(psi, self.matrix @ psi))

    def hermiticity_defect(self) -> float:
        diff = self.matrix - self.matrix.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def norm_bound(self) -> float:
        """Gershgorin-type bound on the spectral radius (max absolute row sum)."""
        return float(abs(self.matrix).sum(axis=1).max())


def _bandwidth(matrix: sp.csr_array) -> int:
    coo = matrix.tocoo()
    if coo.nnz == 0:
        return 0
    return int(np.max(np.abs(coo.row - coo.col)))


def _wrap(matrix) -> CollectiveOperator:
    csr = sp.csr_array(matrix)
    csr.eliminate_zeros()
    return CollectiveOperator(csr, _bandwidth(csr))


@functools.lru_cache(maxsize=64)
def _ladder(n_particles: int):
    ens = SpinEnsemble(n_particles)
    j = ens.spin_length
    m = ens.m_values
    # J+ |m> = sqrt(J(J+1) - m(m+1)) |m+1>, and m+1 sits one index lower.
    amp = np.sqrt(np.maximum(j * (j + 1) - m[1:] * (m[1:] + 1), 0.0))
    jp = sp.diags_array(amp, offsets=1, shape=(ens.dim, ens.dim), format="csr")
    jz = sp.diags_array(m, offsets=0, shape=(ens.dim, ens.dim), format="csr")
    return jz.astype(complex), jp.astype(complex)


def jz(ensemble) -> CollectiveOperator:
    return _wrap(_ladder(_as_ensemble(ensemble).n_particles)[0])


def jplus(ensemble) -> CollectiveOperator:
    return _wrap(_ladder(_as_ensemble(ensemble).n_particles)[1])


def jminus(ensemble) -> CollectiveOperator:
    return _wrap(_ladder(_as_ensemble(ensemble).n_particles)[1].T.conj())


def jx(ensemble) -> CollectiveOperator:
    _, jp = _ladder(_as_ensemble(ensemble).n_particles)
    return _wrap((jp + jp.T.conj()) / 2)


def jy(ensemble) -> CollectiveOperator:
    _, jp = _ladder(_as_ensemble(ensemble).n_particles)
    return _wrap((jp - jp.T.conj()) / 2j)


def spin_operators(ensemble) -> tuple:
    """Return ``(Jx, Jy, Jz)`` as sparse matrices."""
    ens = _as_ensemble(ensemble)
    return jx(ens).matrix, jy(ens).matrix, jz(ens).matrix


def axis_operator(ensemble, axis: Union[str, Sequence[float]]) -> CollectiveOperator:
    """``n . J`` for a named axis (``'x'``, ``'y'``, ``'z'``) or a unit 3-vector."""
    ops = spin_operators(ensemble)
    if isinstance(axis, str):
        key = axis.lower()
        if key not in "xyz" or len(key) != 1:
            raise DomainError(f"unknown axis {axis!r}")
        return _wrap(ops["xyz".index(key)])
    n = np.asarray(axis, dtype=float)
    norm = np.linalg.norm(n)
    if n.shape != (3,) or not np.isfinite(norm) or norm == 0:
        raise DomainError(f"axis must be a non-zero 3-vector, got {axis!r}")
    n = n / norm
    return _wrap(n[0] * ops[0] + n[1] * ops[1] + n[2] * ops[2])


# Hamiltonian specifications.  Couplings carry the rescaled twisting strength
# chi_tilde = N * chi, so classical limits are N-independent.


@dataclass(frozen=True)
class TwoAxisCT:
    """Two-axis counter-twisting ``(chi/N)(Jx Jy + Jy Jx)``."""

    chi: float = 1.0


@dataclass(frozen=True)
class PTwoAxisCT:
    """p-order counter-twisting ``chi/(p J^(p-1)) (Jx^p - Jy^p)``."""

    p: int
    chi: float = 1.0


@dataclass(frozen=True)
class TaT:
    """Twist-and-turn ``Omega Jx + (chi/N) Jz^2``."""

    omega: float
    chi: float = 1.0


@dataclass(frozen=True)
class PTaT:
    """p-order twist-and-turn ``Omega Jx + chi/(p J^(p-1)) Jz^p``."""

    p: int
    omega: float
    chi: float = 1.0


@dataclass(frozen=True)
class GenericPolynomial:
    """Sum of ``coefficient * J_a J_b ...`` with words over ``{'x','y','z'}``."""

    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((str(w), complex(c)) for w, c in self.terms))


HamiltonianSpec = Union[TwoAxisCT, PTwoAxisCT, TaT, PTaT, GenericPolynomial]


def _check_finite(*values):
    for v in values:
        if not np.isfinite(v):
            raise DomainError(f"model parameters must be finite, got {v!r}")


def _check_order(p):
    if isinstance(p, bool) or int(p) != p or p < 2:
        raise DomainError(f"order p must be an integer >= 2, got {p!r}")


def validate_spec(spec: HamiltonianSpec) -> None:
    if isinstance(spec, TwoAxisCT):
        _check_finite(spec.chi)
    elif isinstance(spec, PTwoAxisCT):
        _check_order(spec.p)
        _check_finite(spec.chi)
    elif isinstance(spec, TaT):
        _check_finite(spec.omega, spec.chi)
        if spec.omega < 0:
            raise DomainError("omega must be non-negative")
    elif isinstance(spec, PTaT):
        _check_order(spec.p)
        _check_finite(spec.omega, spec.chi)
        if spec.omega < 0:
            raise DomainError("omega must be non-negative")
    elif isinstance(spec, GenericPolynomial):
        _check_polynomial_hermitian(spec)
    else:
        raise TypeError(f"unsupported Hamiltonian specification {spec!r}")


def _collect_terms(spec: GenericPolynomial) -> dict:
    coeffs: dict = {}
    for word, c in spec.terms:
        w = word.lower()
        if not w or any(ch not in "xyz" for ch in w):
            raise DomainError(f"axis word must be a non-empty string over 'xyz', got {word!r}")
        _check_finite(c.real, c.imag)
        coeffs[w] = coeffs.get(w, 0.0) + c
    return coeffs


def _check_polynomial_hermitian(spec: GenericPolynomial, tol: float = 1e-12) -> None:
    coeffs = _collect_terms(spec)
    for word, c in coeffs.items():
        partner = coeffs.get(word[::-1], 0.0)
        if abs(partner - np.conj(c)) > tol * max(1.0, abs(c)):
            raise NonHermitianError(
                f"term {word!r} with coefficient {c} has no Hermitian partner "
                f"{word[::-1]!r} with coefficient {np.conj(c)}"
            )


def _power(op, p: int):
    out = op
    for _ in range(p - 1):
        out = out @ op
    return out


def build_hamiltonian(spec: HamiltonianSpec, ensemble) -> CollectiveOperator:
    """Matrix of a model Hamiltonian in the Dicke basis."""
    ens = _as_ensemble(ensemble)
    validate_spec(spec)
    jx_m, jy_m, jz_m = spin_operators(ens)
    n, j = ens.n_particles, ens.spin_length
    if isinstance(spec, TwoAxisCT):
        h = (spec.chi / n) * (jx_m @ jy_m + jy_m @ jx_m)
    elif isinstance(spec, PTwoAxisCT):
        p = spec.p
        h = spec.chi / (p * j ** (p - 1)) * (_power(jx_m, p) - _power(jy_m, p))
    elif isinstance(spec, TaT):
        h = spec.omega * jx_m + (spec.chi / n) * (jz_m @ jz_m)
    elif isinstance(spec, PTaT):
        p = spec.p
        h = spec.omega * jx_m + spec.chi / (p * j ** (p - 1)) * _power(jz_m, p)
    else:
        lookup = {"x": jx_m, "y": jy_m, "z": jz_m}
        h = sp.csr_array((ens.dim, ens.dim), dtype=complex)
        for word, c in _collect_terms(spec).items():
            term = lookup[word[0]]
            for ch in word[1:]:
                term = term @ lookup[ch]
            h = h + c * term
    op = _wrap(h)
    # Hermitian parts are exact up to rounding of the products.
    scale = max(1.0, op.norm_bound())
    if op.hermiticity_defect() > 1e-10 * scale:
        raise NonHermitianError("assembled Hamiltonian is not Hermitian")
    return op


def coherent_state(ensemble, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state pointing along polar angle ``theta``, azimuth ``phi``.

    Amplitudes are evaluated in log space so they stay finite for large ``N``.
    """
    ens = _as_ensemble(ensemble)
    if not (np.isfinite(theta) and np.isfinite(phi)):
        raise DomainError("angles must be finite")
    n = ens.n_particles
    m = ens.m_values
    k = np.arange(ens.dim)  # k = J - m down-flips
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    log_binom = 0.5 * (gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    with np.errstate(divide="ignore", invalid="ignore"):
        # 0 * log(0) is taken as 0 so the poles come out exact.
        up = np.where(n - k == 0, 0.0, (n - k) * np.log(abs(c)))
        down = np.where(k == 0, 0.0, k * np.log(abs(s)))
    mag = np.exp(log_binom + up + down)
    sign = np.where(c < 0, (-1.0) ** (n - k), 1.0) * np.where(s < 0, (-1.0) ** k, 1.0)
    psi = mag * sign * np.exp(-1j * m * phi)
    return psi / np.linalg.norm(psi)


def target_state(ensemble, kind: str, alpha: float | None = None) -> np.ndarray:
    """Reference states expressed in the Dicke basis of their own frame.

    ``BWS``
        ``cos(M pi / (N + 2))`` profile over all ``M``.
    ``EWSS``
        Equal weights on all ``N + 1`` Dicke states.
    ``Yurke``
        ``sin(alpha)/sqrt(2) (|1> + |-1>) + cos(alpha) |0>``; needs even ``N``.
    ``TwinFock``
        ``|J, 0>``; needs even ``N``.
    """
    ens = _as_ensemble(ensemble)
    m = ens.m_values
    psi = np.zeros(ens.dim, dtype=complex)
    if kind == "BWS":
        psi[:] = np.cos(m * np.pi / (ens.n_particles + 2)) / np.sqrt(1.0 + ens.n_particles / 2.0)
    elif kind == "EWSS":
        psi[:] = 1.0 / np.sqrt(ens.dim)
    elif kind in ("Yurke", "TwinFock"):
        if ens.n_particles % 2:
            raise DomainError(f"{kind} state needs an even particle number, got N={ens.n_particles}")
        centre = ens.n_particles // 2  # index of m = 0
        if kind == "TwinFock":
            psi[centre] = 1.0
        else:
            if alpha is None or not np.isfinite(alpha):
                raise DomainError("Yurke state needs a finite mixing angle alpha")
            psi[centre] = np.cos(alpha)
            psi[centre - 1] = psi[centre + 1] = np.sin(alpha) / np.sqrt(2.0)
    else:
        raise DomainError(f"unknown target kind {kind!r}; expected one of {TARGET_KINDS}")
    return psi / np.linalg.norm(psi)


def rotate_state(ensemble, psi: np.ndarray, rotation: Rotation) -> np.ndarray:
    """Apply the unitary representing an active SO(3) rotation.

    With ``U = exp(-i a Jz) exp(-i b Jy) exp(-i c Jz)`` for ZYZ Euler angles
    ``(a, b, c)`` one has ``<U psi| J |U psi> = R <psi| J |psi>``.
    """
    ens = _as_ensemble(ensemble)
    a, b, c = rotation.as_euler("ZYZ")
    m = ens.m_values
    out = np.exp(-1j * c * m) * np.asarray(psi, dtype=complex)
    if b != 0.0:
        out = expm_multiply(-1j * b * jy(ens).matrix, out)
    out = np.exp(-1j * a * m) * out
    return out / np.linalg.norm(out)


def reorient(ensemble, psi: np.ndarray, new_z, new_x) -> np.ndarray:
    """Rotate ``psi`` so its z axis points along ``new_z`` and x along ``new_x``."""
    ez = np.asarray(new_z, dtype=float)
    ex = np.asarray(new_x, dtype=float)
    ez = ez / np.linalg.norm(ez)
    ex = ex - ez * np.dot(ex, ez)
    if np.linalg.norm(ex) < 1e-12:
        raise DomainError("new_x must not be parallel to new_z")
    ex = ex / np.linalg.norm(ex)
    ey = np.cross(ez, ex)
    rot = Rotation.from_matrix(np.column_stack([ex, ey, ez]))
    return rotate_state(ensemble, psi, rot)
