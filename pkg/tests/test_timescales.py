import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spinsep.classical_flow import saddle_lyapunov
from spinsep.errors import DomainError
from spinsep.spin_core import TwoAxisCT
from spinsep.timescales import (
    CRITICAL_3TAT,
    CRITICAL_TAT,
    LABELS,
    YURKE_SMALL_ALPHA,
    ct_explicit_gain,
    ct_explicit_xi2,
    ct_ewss_large_n,
    ct_time_to_z,
    ct_yurke_large_n,
    ct_z_of_t,
    ewss_ratio,
    predict,
    tat_time_to_z,
    three_tat_initial_z,
    three_tat_qfi_time,
    time_to_state_via_variance,
    yurke_ratio,
)


def chi_t(label, n, alpha=None):
    return predict(label, n, alpha).chi_t


# --- worked examples ----------------------------------------------------------------


def test_squeezing_time_example():
    assert chi_t("CT_sq", 100) == pytest.approx(math.log((math.sqrt(2) - 1) * (10 + math.sqrt(99))), rel=1e-14)
    assert chi_t("CT_sq", 100) == pytest.approx(2.1120, abs=5e-4)


def test_counter_twisting_ehrenfest_example():
    assert chi_t("Ehrenfest_CT", 100) == pytest.approx(math.log(100) / 2, rel=1e-12)


def test_tat_qfi_large_n():
    n = 10**6
    assert abs(chi_t("TaT_QFI", n) - math.log(8 * n)) <= 1e-3


def test_explicit_squeezing_at_start():
    for n in (2, 10, 1000):
        assert ct_explicit_xi2(n, 0.0) == pytest.approx(n / (n - 1), rel=1e-12)


def test_explicit_squeezing_minimum():
    n = 400
    t = np.linspace(0.5, 3.5, 30001)
    xi2 = ct_explicit_xi2(n, t)
    k = int(np.argmin(xi2))
    assert abs(xi2[k] - 4 / n) <= 0.1 * 4 / n
    assert abs(t[k] - chi_t("CT_sq", n)) <= 0.02 * chi_t("CT_sq", n)


@given(st.integers(2, 10**5), st.floats(0, 1))
def test_gain_identity(n, frac):
    t_edge = math.atanh(math.sqrt(1 - 1 / n))
    t = frac * 0.999 * t_edge
    z = float(ct_z_of_t(n, t))
    assert float(ct_explicit_gain(n, t)) == pytest.approx(1 / (n * (1 - z * z)), rel=1e-10)


# --- variance mapping ---------------------------------------------------------------


@given(st.integers(2, 10**6))
def test_variance_mapping_reproduces_squeezing_time(n):
    assert time_to_state_via_variance(1 / math.sqrt(2), n) == pytest.approx(chi_t("CT_sq", n), rel=1e-12)


@given(st.integers(4, 10**6))
def test_variance_mapping_large_n_forms(n):
    ewss = time_to_state_via_variance(ewss_ratio(n), n)
    assert ewss == pytest.approx(ct_ewss_large_n(n), abs=5.0 / n)


def test_yurke_example():
    n, alpha = 1024, 0.678
    exact = time_to_state_via_variance(yurke_ratio(n, alpha), n)
    assert chi_t("CT_Yurke", n, alpha) == pytest.approx(exact, rel=1e-14)
    assert exact == pytest.approx(ct_yurke_large_n(n, alpha), abs=5.0 / n)


def test_ratio_outside_unit_interval():
    with pytest.raises(DomainError):
        time_to_state_via_variance(1.01, 10)
    with pytest.raises(DomainError):
        time_to_state_via_variance(-0.1, 10)


def test_time_to_z_inverts_branch():
    n = 300
    for t in (0.0, 0.5, 1.7):
        assert ct_time_to_z(float(ct_z_of_t(n, t)), n) == pytest.approx(t, abs=1e-10)


# --- ordering and asymptotics -------------------------------------------------------


@given(st.integers(30, 10**7))
def test_counter_twisting_ordering(n):
    chain = [chi_t(label, n) for label in ("CT_BWS_lower", "CT_BWS_upper", "CT_EWSS", "CT_sq", "CT_QFI")]
    assert all(a < b for a, b in zip(chain, chain[1:]))


@given(st.integers(2, 10**7))
def test_qfi_time_identity(n):
    assert chi_t("CT_QFI", n) == pytest.approx(math.log(math.sqrt(n) + math.sqrt(n - 1)), rel=1e-14)


def test_qfi_time_asymptote():
    n = 10**8
    assert chi_t("CT_QFI", n) == pytest.approx(math.log(4 * n) / 2, abs=1e-7)


def test_rescaled_time_gap_between_models():
    n = 10**6
    lam_ct = saddle_lyapunov(TwoAxisCT(1.0))
    lam_tat = saddle_lyapunov(CRITICAL_TAT)
    gap = lam_tat * chi_t("TaT_QFI", n) - lam_ct * chi_t("CT_QFI", n)
    assert gap == pytest.approx(math.log(2) / 2, abs=1e-5)


@given(st.floats(1e-3, 0.999), st.integers(2, 10**5))
def test_tat_travel_time_monotone(zf, n):
    assert tat_time_to_z(zf, n) <= tat_time_to_z(1.0, n) + 1e-12


# --- 3TaT ---------------------------------------------------------------------------


def test_three_tat_quadrature_stable():
    for n in (100, 1024, 10**5):
        assert three_tat_qfi_time(n, tol=1e-12) == pytest.approx(three_tat_qfi_time(n, tol=5e-13), abs=1e-6)


def test_three_tat_angle_identity():
    assert math.acos(math.sqrt(3 / 5)) == pytest.approx(math.atan(math.sqrt(2 / 3)), rel=1e-15)


@given(st.integers(2, 10**8))
def test_three_tat_initial_point_above_saddle(n):
    assert 0.5 < three_tat_initial_z(n) < 1.0


def test_three_tat_ehrenfest():
    for n in (10, 1024):
        assert chi_t("Ehrenfest_3TaT", n) == pytest.approx(math.sqrt(2) * math.log(n), rel=1e-9)


def test_critical_models_are_unit_chi():
    assert CRITICAL_TAT.omega / CRITICAL_TAT.chi == 0.5
    assert CRITICAL_3TAT.omega == pytest.approx(math.sqrt(3) / 4)


# --- flags and errors ---------------------------------------------------------------


def test_yurke_large_alpha_is_flagged():
    with pytest.warns(UserWarning):
        pred = predict("CT_Yurke", 100, YURKE_SMALL_ALPHA + 0.1)
    assert pred.flagged
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not predict("CT_Yurke", 100, 0.3).flagged


def test_yurke_needs_alpha():
    with pytest.raises(DomainError):
        predict("CT_Yurke", 100)


@pytest.mark.parametrize("n", [1, 0, 2.5, True])
def test_invalid_particle_number(n):
    with pytest.raises(DomainError):
        predict("CT_sq", n)


def test_unknown_label():
    with pytest.raises(DomainError):
        predict("CT_nothing", 10)


def test_all_labels_evaluate():
    for label in LABELS:
        assert np.isfinite(predict(label, 1024, 0.5).chi_t)


def test_branch_time_past_equator_rejected():
    with pytest.raises(DomainError):
        ct_z_of_t(100, 5.0)
    with pytest.raises(DomainError):
        ct_z_of_t(100, -0.1)


def test_physical_time():
    pred = predict("CT_sq", 100)
    assert pred.physical_time(2.0) == pytest.approx(pred.chi_t / 2)
    with pytest.raises(DomainError):
        pred.physical_time(0.0)
