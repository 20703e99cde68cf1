import math

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from spinsep.dynamics import spin_moments
from spinsep.errors import DomainError, NonHermitianError
from spinsep.spin_core import (
    GenericPolynomial,
    PTaT,
    PTwoAxisCT,
    SpinEnsemble,
    TaT,
    TwoAxisCT,
    axis_operator,
    build_hamiltonian,
    coherent_state,
    jminus,
    jplus,
    jx,
    jy,
    jz,
    reorient,
    rotate_state,
    target_state,
)


def dense_ladder_oracle(n):
    """Loop-built ``(Jz, J+)`` from the textbook matrix elements."""
    j = n / 2
    dim = n + 1
    jz_m = np.zeros((dim, dim))
    jp_m = np.zeros((dim, dim))
    for k in range(dim):
        m = j - k
        jz_m[k, k] = m
        if k > 0:
            # J+ |m> -> |m+1>, which is index k-1
            jp_m[k - 1, k] = math.sqrt(j * (j + 1) - m * (m + 1))
    return jz_m, jp_m


def models():
    return st.one_of(
        st.builds(TwoAxisCT, chi=st.floats(0.1, 5)),
        st.builds(PTwoAxisCT, p=st.integers(2, 5), chi=st.floats(0.1, 5)),
        st.builds(TaT, omega=st.floats(0, 5), chi=st.floats(0.1, 5)),
        st.builds(PTaT, p=st.integers(2, 5), omega=st.floats(0, 5), chi=st.floats(0.1, 5)),
    )


# --- ensemble -------------------------------------------------------------------


@given(st.integers(1, 4096))
def test_ensemble_dimensions(n):
    ens = SpinEnsemble(n)
    assert ens.dim == n + 1
    assert ens.spin_length == n / 2
    assert ens.m_values[0] == ens.spin_length and ens.m_values[-1] == -ens.spin_length


@pytest.mark.parametrize("bad", [0, -3, 4097, 2.5])
def test_ensemble_rejects_bad_sizes(bad):
    with pytest.raises((DomainError, TypeError)):
        SpinEnsemble(bad)


# --- operators -------------------------------------------------------------------


def test_single_qubit_jz():
    assert np.allclose(jz(1).dense(), np.diag([0.5, -0.5]))


def test_raising_annihilates_top_state():
    top = np.zeros(3)
    top[0] = 1.0
    assert np.allclose(jplus(2) @ top, 0.0)


def test_jx_ladder_element():
    # <2,2|Jx|2,1> = sqrt(J(J+1) - m(m+1))/2 with J=2, m=1
    expected = math.sqrt(2 * 3 - 1 * 2) / 2
    assert expected == 1.0
    assert jx(4).dense()[0, 1] == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 5, 12, 33])
def test_operators_match_loop_oracle(n):
    jz_o, jp_o = dense_ladder_oracle(n)
    jm_o = jp_o.T
    assert np.allclose(jz(n).dense(), jz_o, atol=1e-14)
    assert np.allclose(jplus(n).dense(), jp_o, atol=1e-14)
    assert np.allclose(jminus(n).dense(), jm_o, atol=1e-14)
    assert np.allclose(jx(n).dense(), (jp_o + jm_o) / 2, atol=1e-14)
    assert np.allclose(jy(n).dense(), (jp_o - jm_o) / 2j, atol=1e-14)


@given(st.integers(1, 40))
def test_commutation_and_casimir(n):
    x, y, z = (op(n).dense() for op in (jx, jy, jz))
    j = n / 2
    assert np.allclose(x @ y - y @ x, 1j * z, atol=1e-10)
    assert np.allclose(x @ x + y @ y + z @ z, j * (j + 1) * np.eye(n + 1), atol=1e-9)


def test_axis_operator_vector_matches_components():
    n = 9
    v = np.array([1.0, -2.0, 0.5])
    u = v / np.linalg.norm(v)
    expected = u[0] * jx(n).dense() + u[1] * jy(n).dense() + u[2] * jz(n).dense()
    assert np.allclose(axis_operator(n, v).dense(), expected)
    with pytest.raises(DomainError):
        axis_operator(n, "w")
    with pytest.raises(DomainError):
        axis_operator(n, [0, 0, 0])


# --- Hamiltonians ----------------------------------------------------------------------


def test_tat_without_twist_is_rotation():
    h = build_hamiltonian(TaT(omega=1.0, chi=0.0), 2)
    assert np.allclose(h.dense(), jx(2).dense())


@pytest.mark.parametrize("n", [2, 7, 20])
def test_counter_twisting_hermitian_zero_diagonal(n):
    h = build_hamiltonian(TwoAxisCT(1.0), n)
    x, y = jx(n).dense(), jy(n).dense()
    oracle = (x @ y + y @ x) / n
    assert np.allclose(h.dense(), oracle, atol=1e-12)
    assert h.hermiticity_defect() <= 1e-12
    assert np.max(np.abs(np.diag(h.dense()))) <= 1e-12


@given(st.integers(2, 60), st.floats(0.1, 4))
def test_counter_twisting_ladder_form(n, chi):
    h = build_hamiltonian(TwoAxisCT(chi), n).dense()
    jp, jm = jplus(n).dense(), jminus(n).dense()
    assert np.allclose(h, chi / (2j * n) * (jp @ jp - jm @ jm), atol=1e-12 * max(1, n))


def test_three_body_tat_pole_energy_matches_classical_limit():
    n = 100
    chi = 4 / math.sqrt(3)
    h = build_hamiltonian(PTaT(p=3, omega=1.0, chi=chi), n)
    ens = SpinEnsemble(n)
    top = coherent_state(ens, 0.0, 0.0)
    energy_density = h.expectation(top).real / ens.spin_length
    classical = 1.0 * 0.0 + chi / 3 * 1.0**3  # Omega X + chi/3 Z^3 at the north pole
    assert abs(energy_density - classical) <= classical / n


@pytest.mark.parametrize(
    "spec",
    [PTaT(p=2, omega=0.7, chi=1.3), PTwoAxisCT(p=2, chi=1.3)],
)
def test_order_two_conventions(spec):
    n = 14
    h = build_hamiltonian(spec, n).dense()
    x = jx(n).dense()
    if isinstance(spec, PTaT):
        expected = build_hamiltonian(TaT(omega=0.7, chi=1.3), n).dense()
    else:
        y = jy(n).dense()
        expected = 1.3 * (x @ x - y @ y) / n
    assert np.allclose(h, expected, atol=1e-12)


@given(models(), st.integers(1, 50))
def test_every_model_is_hermitian(spec, n):
    h = build_hamiltonian(spec, n)
    assert h.hermiticity_defect() <= 1e-12 * max(1.0, h.norm_bound())


@given(models(), st.integers(2, 40))
def test_bandwidth_bounded_by_degree(spec, n):
    degree = {TwoAxisCT: 2, TaT: 2}.get(type(spec), getattr(spec, "p", 2))
    assert build_hamiltonian(spec, n).bandwidth <= degree


def test_generic_polynomial_rejects_non_hermitian():
    with pytest.raises(NonHermitianError):
        build_hamiltonian(GenericPolynomial([("xy", 1.0)]), 4)
    with pytest.raises(NonHermitianError):
        build_hamiltonian(GenericPolynomial([("z", 1j)]), 4)


def test_generic_polynomial_commutator_form():
    # i (Jx Jy - Jy Jx) = i * i Jz = -Jz
    h = build_hamiltonian(GenericPolynomial([("xy", 1j), ("yx", -1j)]), 6)
    assert np.allclose(h.dense(), -jz(6).dense(), atol=1e-12)


def test_generic_polynomial_reproduces_named_model():
    n = 10
    generic = GenericPolynomial([("x", 0.4), ("zz", 2.0 / n)])
    assert np.allclose(
        build_hamiltonian(generic, n).dense(),
        build_hamiltonian(TaT(omega=0.4, chi=2.0), n).dense(),
    )


def test_generic_polynomial_rejects_bad_words():
    with pytest.raises(DomainError):
        build_hamiltonian(GenericPolynomial([("xq", 1.0)]), 3)


@pytest.mark.parametrize(
    "spec",
    [PTaT(p=1, omega=1.0), TaT(omega=-1.0), TaT(omega=float("nan"))],
)
def test_invalid_specs(spec):
    with pytest.raises(DomainError):
        build_hamiltonian(spec, 4)


# --- coherent states ---------------------------------------------------------------


def binomial_amplitudes(n, theta):
    j = n / 2
    out = []
    for k in range(n + 1):
        m = j - k
        out.append(
            math.sqrt(math.comb(n, k)) * math.cos(theta / 2) ** (j + m) * math.sin(theta / 2) ** (j - m)
        )
    return np.array(out)


def test_coherent_north_pole():
    psi = coherent_state(3, 0.0, 1.234)
    assert abs(abs(psi[0]) - 1) < 1e-15 and np.allclose(psi[1:], 0)


def test_coherent_south_pole():
    psi = coherent_state(2, math.pi, 0.0)
    assert abs(abs(psi[-1]) - 1) < 1e-14 and np.allclose(psi[:-1], 0, atol=1e-14)


def test_coherent_overlap_with_top_state():
    psi = coherent_state(10, math.pi / 3, 0.0)
    assert abs(psi[0]) ** 2 == pytest.approx(math.cos(math.pi / 6) ** 20, abs=1e-12)


@given(st.integers(1, 60), st.floats(0, math.pi))
def test_coherent_binomial_oracle(n, theta):
    psi = coherent_state(n, theta, 0.0)
    assert np.allclose(np.abs(psi), np.abs(binomial_amplitudes(n, theta)), atol=1e-10)


@given(st.integers(1, 30), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_coherent_matches_rotation_oracle(n, theta, phi):
    top = np.zeros(n + 1, dtype=complex)
    top[0] = 1.0
    oracle = la.expm(-1j * phi * jz(n).dense()) @ la.expm(-1j * theta * jy(n).dense()) @ top
    psi = coherent_state(n, theta, phi)
    assert abs(abs(np.vdot(oracle, psi)) - 1.0) < 1e-10


@given(st.integers(1, 400), st.floats(0, math.pi))
def test_coherent_overlap_law(n, theta):
    psi = coherent_state(n, theta, 0.0)
    assert abs(abs(psi[0]) ** 2 - math.cos(theta / 2) ** (2 * n)) <= 1e-10


@given(st.integers(1, 300), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_coherent_points_where_constructed(n, theta, phi):
    ens = SpinEnsemble(n)
    psi = coherent_state(ens, theta, phi)
    assert abs(np.linalg.norm(psi) - 1) <= 1e-12
    mean = spin_moments(ens, psi).mean / ens.spin_length
    direction = [math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)]
    assert np.allclose(mean, direction, atol=1e-10)


def test_coherent_large_n_is_finite():
    psi = coherent_state(4096, 1.0, 0.3)
    assert np.all(np.isfinite(psi)) and abs(np.linalg.norm(psi) - 1) < 1e-12


# --- target states ----------------------------------------------------------------------


def test_ewss_amplitudes():
    assert np.allclose(target_state(3, "EWSS"), 0.5)


def test_bws_variance():
    ens = SpinEnsemble(1000)
    var = spin_moments(ens, target_state(ens, "BWS")).cov[2, 2]
    assert abs(var / ens.spin_length**2 - 0.13) <= 0.02 * 0.13


def yurke_variance_oracle(j, alpha):
    """Var(Jy) of the Yurke state from the ladder elements coupling m = -1, 0, 1."""
    s2 = math.sin(alpha) ** 2
    plus_sq = 0.5 * s2 * j * (j + 1)  # <J+^2> = <J-^2>
    symmetric = 2 * (j * (j + 1) - s2)  # <J+J- + J-J+>
    return -(2 * plus_sq - symmetric) / 4


@pytest.mark.parametrize("alpha", [0.0, 0.3, 0.678, 1.2, math.pi / 2])
def test_yurke_variance(alpha):
    ens = SpinEnsemble(100)
    psi = target_state(ens, "Yurke", alpha)
    cov = spin_moments(ens, psi).cov
    j, s2 = ens.spin_length, math.sin(alpha) ** 2
    assert cov[1, 1] == pytest.approx(yurke_variance_oracle(j, alpha), rel=1e-12)
    assert cov[1, 1] == pytest.approx(0.25 * (j * (j + 1) * (2 - s2) - 2 * s2), rel=1e-12)
    # the large-J form (J/4)[(J+1)(2 - s^2) - 2 s^2] agrees to O(1/J)
    large_j = 0.25 * j * ((j + 1) * (2 - s2) - 2 * s2)
    assert abs(large_j - cov[1, 1]) / cov[1, 1] <= 2 / j
    assert cov[2, 2] == pytest.approx(s2, abs=1e-12)


def test_twin_fock_is_central_dicke_state():
    psi = target_state(8, "TwinFock")
    assert psi[4] == 1 and np.count_nonzero(psi) == 1


@pytest.mark.parametrize("kind", ["Yurke", "TwinFock"])
def test_odd_particle_number_rejected(kind):
    with pytest.raises(DomainError):
        target_state(5, kind, 0.3)


def test_unknown_target_rejected():
    with pytest.raises(DomainError):
        target_state(4, "GHZ")


@given(st.sampled_from(["BWS", "EWSS", "Yurke", "TwinFock"]), st.integers(1, 100).map(lambda k: 2 * k))
def test_targets_normalised(kind, n):
    assert abs(np.linalg.norm(target_state(n, kind, 0.5)) - 1) <= 1e-12


# --- rotations ----------------------------------------------------------------------


@given(
    st.integers(1, 40),
    st.floats(0, math.pi),
    st.floats(0, 2 * math.pi),
    st.integers(0, 2**32 - 1),
)
def test_rotation_moves_mean_spin(n, theta, phi, seed):
    ens = SpinEnsemble(n)
    psi = coherent_state(ens, theta, phi)
    rot = Rotation.random(random_state=seed)
    moved = rotate_state(ens, psi, rot)
    assert np.allclose(
        spin_moments(ens, moved).mean, rot.apply(spin_moments(ens, psi).mean), atol=1e-9 * max(1, n)
    )


def test_reorient_maps_pole_to_new_axis():
    ens = SpinEnsemble(12)
    top = coherent_state(ens, 0.0, 0.0)
    out = reorient(ens, top, new_z=(1, 0, 0), new_x=(0, 0, 1))
    assert abs(abs(np.vdot(coherent_state(ens, math.pi / 2, 0.0), out)) - 1) < 1e-12
    with pytest.raises(DomainError):
        reorient(ens, top, new_z=(1, 0, 0), new_x=(2, 0, 0))
