import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from synclab.potential import (CallablePotential, IFPotential, PotentialDomainError,
                               if_free_period, log_potential, sync_alpha, sync_period,
                               transfer, validate_potential)

drives = st.floats(1.05, 20.0)
phases = st.floats(-2.0, 1.0)


def test_free_period_closed_forms():
    assert if_free_period(4.0) == pytest.approx(0.2876820724517809, abs=1e-15)
    assert if_free_period(2.0) == pytest.approx(math.log(2.0), abs=1e-15)
    values = [if_free_period(I) for I in (1.5, 3.0, 10.0, 1e3, 1e6)]
    assert all(a > b > 0 for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("bad", [1.0, 0.5, -3.0])
def test_drive_must_exceed_one(bad):
    with pytest.raises(ValueError):
        if_free_period(bad)
    with pytest.raises(ValueError):
        IFPotential(bad)


def test_if_potential_formula_and_normalisation():
    U = IFPotential(4.0)
    T = math.log(4 / 3)
    for phi in (-1.5, -0.3, 0.0, 0.25, 0.5, 1.0):
        assert float(U.eval(phi)) == pytest.approx(4 * (1 - math.exp(-phi * T)), rel=1e-14, abs=1e-15)
    assert float(U.eval(0.0)) == 0.0
    assert abs(float(U.eval(1.0)) - 1.0) <= 1e-15
    # U(1/2) = 4 - 2 sqrt(3) since exp(-T/2) = sqrt(3)/2
    assert float(U.eval(0.5)) == pytest.approx(4 - 2 * math.sqrt(3), abs=1e-15)


@pytest.mark.parametrize("U", [IFPotential(4.0), IFPotential(1.3), log_potential(3.0)],
                         ids=["if4", "if1.3", "log3"])
def test_validate_potential(U):
    report = validate_potential(U)
    assert report["normalized"] and report["increasing"] and report["concave"]
    assert report["max_inverse_error"] < 1e-10


def test_validate_flags_convex_potential():
    U = CallablePotential(lambda p: p * p * np.sign(p), lambda p: 2 * np.abs(p) + 1e-9,
                          phi_min=0.0)
    assert not validate_potential(U, phi_min=0.0)["concave"]


@given(drives, st.floats(-1.0, 1.0))
def test_derivative_matches_finite_differences(I, phi):
    U = IFPotential(I)
    h = 1e-5
    fd = (float(U.eval(phi + h)) - float(U.eval(phi - h))) / (2 * h)
    assert fd == pytest.approx(float(U.deriv(phi)), rel=1e-6)


@given(drives, phases)
def test_inverse_roundtrip(I, phi):
    U = IFPotential(I)
    assert float(U.inv(U.eval(phi))) == pytest.approx(phi, abs=1e-10)


def test_if_inverse_domain():
    U = IFPotential(4.0)
    with pytest.raises(PotentialDomainError):
        U.inv(4.0)
    with pytest.raises(PotentialDomainError):
        U.inv(np.array([0.1, 5.0]))


def test_transfer_examples():
    U = IFPotential(4.0)
    assert transfer(U, 0.3, 0.0) == (pytest.approx(0.3, abs=1e-15), False)
    assert float(U.eval(0.9)) == pytest.approx(0.9124, abs=1e-4)
    assert transfer(U, 0.9, 0.2) == (0.0, True)
    phi, fired = transfer(U, 0.5, -0.2)
    assert not fired and phi < 0.5
    expected = -math.log1p(-(4 - 2 * math.sqrt(3) - 0.2) / 4) / math.log(4 / 3)
    assert phi == pytest.approx(expected, abs=1e-14)


def test_transfer_at_threshold_fires():
    U = IFPotential(4.0)
    assert transfer(U, 1.0, 0.0) == (0.0, True)
    assert transfer(U, 0.0, 1.0) == (0.0, True)


def test_transfer_rejects_phase_above_threshold():
    with pytest.raises(PotentialDomainError):
        transfer(IFPotential(4.0), 1.2, -0.1)


@given(drives, st.floats(-1.0, 0.95), st.floats(-0.4, 0.0), st.floats(-0.4, 0.0))
def test_transfer_additivity(I, phi, e1, e2):
    U = IFPotential(I)
    a, fa = transfer(U, phi, e1)
    b, fb = transfer(U, a, e2)
    c, fc = transfer(U, phi, e1 + e2)
    assert not (fa or fb or fc)
    assert b == pytest.approx(c, abs=1e-10)


@given(drives, st.floats(-1.0, 0.9), st.floats(0.01, 0.1), st.floats(-0.5, -0.01))
def test_inhibitory_jump_compresses_phase_differences(I, phi1, dphi, eps):
    # concavity: the later phase is pushed back further, so differences shrink
    U = IFPotential(I)
    phi2 = phi1 + dphi
    h1, h2 = transfer(U, phi1, eps)[0], transfer(U, phi2, eps)[0]
    assert phi2 - h2 > phi1 - h1
    assert 0 < h2 - h1 < dphi


@given(drives, st.floats(-1.0, 0.5), st.floats(0.01, 0.1), st.floats(0.01, 0.2))
def test_excitatory_jump_expands_phase_differences(I, phi1, dphi, eps):
    U = IFPotential(I)
    phi2 = phi1 + dphi
    (h1, f1), (h2, f2) = transfer(U, phi1, eps), transfer(U, phi2, eps)
    assume(not (f1 or f2))
    assert h2 - h1 > dphi


def test_callable_potential_root_finder_fallback():
    ref = IFPotential(3.0)
    U = CallablePotential(ref.eval, ref.deriv, phi_min=-3.0, phi_max=1.5)
    u = ref.eval(np.linspace(-2.5, 1.0, 17))
    assert np.allclose(U.inv(u), np.linspace(-2.5, 1.0, 17), atol=1e-11, rtol=0)
    assert float(U.inv(float(ref.eval(0.4)))) == pytest.approx(0.4, abs=1e-11)


def test_callable_potential_domain_errors():
    U = log_potential(2.0)
    with pytest.raises(PotentialDomainError):
        U.eval(-10.0)
    with pytest.raises(PotentialDomainError):
        U.inv(5.0)
    with pytest.raises(ValueError):
        log_potential(0.0)


def test_sync_alpha_and_period_reference_values():
    U = IFPotential(4.0)
    alpha = sync_alpha(U, 0.15, -0.2)
    T = math.log(4 / 3)
    u = 4 * (1 - math.exp(-0.15 * T)) - 0.2
    assert alpha == pytest.approx(-math.log(1 - u / 4) / T, abs=1e-15)
    assert alpha == pytest.approx(-0.0269, abs=5e-5)
    assert sync_period(U, 0.15, -0.2) == pytest.approx(1.1769, abs=5e-5)


def test_sync_alpha_supra_threshold():
    with pytest.raises(PotentialDomainError):
        sync_alpha(IFPotential(4.0), 0.15, 0.95)


@given(drives, st.floats(0.01, 0.3), st.floats(-1.0, -1e-6))
def test_inhibition_lengthens_period(I, tau, eps):
    U = IFPotential(I)
    assume(float(U.eval(tau)) + eps < 1)
    assert sync_period(U, tau, eps) > 1.0
