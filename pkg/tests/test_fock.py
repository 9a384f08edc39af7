"""Truncated Fock-space oracle: operators, states, Uhlmann fidelity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstfid.algebra import state
from dstfid.fock import (
    ContractViolationError,
    ConvergenceError,
    annihilation,
    displacement_op,
    dst_state,
    fidelity_oracle,
    matrix_exp,
    squeeze_op,
    thermal_cutoff_requirement,
    thermal_state,
    uhlmann_fidelity,
)


def test_annihilation_smallest_case():
    a = annihilation(2)
    assert np.array_equal(a, np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))


def test_annihilation_commutator_truncation_structure():
    # [a, a^dag] = I except the last diagonal slot, which pays for truncation
    a = annihilation(3)
    comm = a @ a.conj().T - a.conj().T @ a
    assert np.allclose(np.diag(comm), [1.0, 1.0, -2.0], atol=1e-14)


def test_number_operator_diagonal():
    a = annihilation(10)
    num = a.conj().T @ a
    assert np.allclose(np.diag(num), np.arange(10), atol=1e-13)


def test_matrix_exp_unitary_for_antihermitian():
    a = annihilation(30)
    h = 0.4 * a.conj().T - 0.4 * a  # anti-Hermitian
    u = matrix_exp(h)
    assert np.max(np.abs(u @ u.conj().T - np.eye(30))) < 1e-12


def test_displacement_vacuum_is_coherent_poisson():
    k = 0.7 + 0.3j
    cutoff = int(8 * abs(k) ** 2 + 30)
    d = displacement_op(k, cutoff)
    vac = np.zeros(cutoff)
    vac[0] = 1.0
    psi = d @ vac
    n = np.arange(cutoff)
    mean = abs(k) ** 2
    expected = np.exp(-mean) * mean**n / np.array([math.factorial(i) for i in n])
    assert np.max(np.abs(np.abs(psi) ** 2 - expected)) < 1e-8


def test_squeezed_vacuum_kills_odd_levels():
    s = squeeze_op(0.6, 60)
    vac = np.zeros(60)
    vac[0] = 1.0
    psi = s @ vac
    assert np.max(np.abs(psi[1::2])) < 1e-12
    # even amplitudes alternate in sign for r > 0 in this convention
    assert psi[0].real > 0 and psi[2].real < 0


def test_thermal_state_geometric_populations():
    beta = math.log(2.0)
    rho = thermal_state(beta, 60)
    pops = np.real(np.diag(rho))
    assert np.allclose(pops[:8], 0.5 * 0.5 ** np.arange(8), atol=1e-12)
    assert abs(np.trace(rho).real - 1.0) < 1e-12


def test_thermal_state_cold_limit_is_vacuum():
    rho = thermal_state(20.0, 8)
    assert abs(rho[0, 0].real - 1.0) < 1e-8
    assert np.max(np.abs(rho - np.diag(np.diag(rho)))) == 0.0


def test_thermal_state_refuses_truncated_tail():
    needed = thermal_cutoff_requirement(0.1)
    with pytest.raises(ValueError):
        thermal_state(0.1, needed - 1)


def test_thermal_mean_photon_number():
    s = state(0.0, 0.0, nbar=1.7)
    rho = thermal_state(s.beta, thermal_cutoff_requirement(s.beta) + 20)
    a = annihilation(rho.shape[0])
    mean = float(np.real(np.trace(a.conj().T @ a @ rho)))
    assert math.isclose(mean, 1.7, rel_tol=1e-10)


def test_thermal_purity():
    s = state(0.0, 0.0, nbar=0.8)
    rho = thermal_state(s.beta, 80)
    purity = float(np.real(np.trace(rho @ rho)))
    assert math.isclose(purity, 1.0 / (2 * 0.8 + 1.0), rel_tol=1e-8)


def test_dst_state_first_and_second_moments():
    """<a> = k; <a^dag a> = nbar cosh 2r + sinh^2 r + |k|^2;
    <a^2> = k^2 - sinh(2r)/2 * (2 nbar + 1)."""
    s = state(0.3 - 0.2j, 0.35, nbar=0.6)
    cutoff = 70
    rho = dst_state(s, cutoff)
    a = annihilation(cutoff)
    mean_a = complex(np.trace(a @ rho))
    assert abs(mean_a - s.k) < 1e-8

    nbar, r = 0.6, 0.35
    mean_n = float(np.real(np.trace(a.conj().T @ a @ rho)))
    expected_n = nbar * math.cosh(2 * r) + math.sinh(r) ** 2 + abs(s.k) ** 2
    assert math.isclose(mean_n, expected_n, rel_tol=1e-8)

    mean_aa = complex(np.trace(a @ a @ rho))
    expected_aa = s.k**2 - 0.5 * math.sinh(2 * r) * (2 * nbar + 1)
    assert abs(mean_aa - expected_aa) < 1e-8


def test_dst_state_cold_limit_is_nearly_pure():
    rho = dst_state(state(0.4, 0.3, beta=20.0), 60)
    purity = float(np.real(np.trace(rho @ rho)))
    assert purity > 1.0 - 1e-6


def test_uhlmann_self_fidelity():
    rho = dst_state(state(0.2 + 0.1j, 0.25, nbar=0.9), 60)
    assert abs(uhlmann_fidelity(rho, rho) - 1.0) < 1e-10


def test_uhlmann_orthogonal_pure_states():
    rho0 = np.zeros((10, 10), dtype=complex)
    rho1 = np.zeros((10, 10), dtype=complex)
    rho0[0, 0] = 1.0
    rho1[1, 1] = 1.0
    assert uhlmann_fidelity(rho0, rho1) < 1e-12


def test_uhlmann_coherent_overlap():
    k1, k2 = 0.3, 0.3 + 0.6j
    cutoff = 50
    rho1 = dst_state(state(k1, 0.0, beta=25.0), cutoff)
    rho2 = dst_state(state(k2, 0.0, beta=25.0), cutoff)
    fid = uhlmann_fidelity(rho1, rho2)
    assert math.isclose(fid, math.exp(-abs(k2 - k1) ** 2), rel_tol=1e-5)


@settings(max_examples=15)
@given(
    st.floats(min_value=-0.5, max_value=0.5),
    st.floats(min_value=0.2, max_value=1.5),
    st.floats(min_value=0.2, max_value=1.5),
)
def test_uhlmann_symmetric(k_re, n1, n2):
    cutoff = 64
    rho1 = dst_state(state(k_re, 0.1, nbar=n1), cutoff)
    rho2 = dst_state(state(0.0, -0.2, nbar=n2), cutoff)
    f12 = uhlmann_fidelity(rho1, rho2)
    f21 = uhlmann_fidelity(rho2, rho1)
    assert math.isclose(f12, f21, rel_tol=1e-9, abs_tol=1e-12)


def test_uhlmann_unitary_invariance():
    cutoff = 70
    rho1 = dst_state(state(0.2, 0.1, nbar=0.5), cutoff)
    rho2 = dst_state(state(-0.1j, 0.3, nbar=1.0), cutoff)
    u = displacement_op(0.15 - 0.1j, cutoff)
    before = uhlmann_fidelity(rho1, rho2)
    after = uhlmann_fidelity(u @ rho1 @ u.conj().T, u @ rho2 @ u.conj().T)
    assert math.isclose(before, after, rel_tol=1e-8)


def test_uhlmann_rejects_non_density_input():
    bad = np.eye(4, dtype=complex)  # trace 4
    good = np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex)
    with pytest.raises(ContractViolationError):
        uhlmann_fidelity(bad, good)
    with pytest.raises(ContractViolationError):
        uhlmann_fidelity(good, np.triu(np.ones((4, 4))) / 4.0)


def test_oracle_converges_and_reports_rungs():
    res = fidelity_oracle(state(0.3, 0.2, nbar=0.5), state(0.1 + 0.2j, 0.5, nbar=1.0))
    assert res.convergence_gap <= 1e-8
    assert res.cutoff_used >= 30
    assert 0.0 < res.fidelity < 1.0
    assert res.spectrum_floor > -1e-12


def test_oracle_fidelity_monotone_under_cutoff_growth():
    s1 = state(0.3, 0.2, nbar=0.5)
    s2 = state(0.1 + 0.2j, 0.5, nbar=1.0)
    fids = [
        uhlmann_fidelity(dst_state(s1, n), dst_state(s2, n)) for n in (40, 60, 90)
    ]
    gaps = [abs(fids[i + 1] - fids[i]) for i in range(len(fids) - 1)]
    assert gaps[1] < gaps[0]  # refinement shrinks the change


def test_oracle_golden_point():
    res = fidelity_oracle(state(0.3, 0.2, nbar=0.5), state(0.1 + 0.2j, 0.5, nbar=1.0))
    assert math.isclose(res.fidelity, 0.8509993417886631, rel_tol=0, abs_tol=5e-8)


def test_oracle_ceiling_exhaustion_raises_with_trace():
    with pytest.raises(ConvergenceError) as exc:
        fidelity_oracle(state(0.0, 0.0, nbar=0.5), state(3.0, 0.0, nbar=0.5), ceiling=40)
    assert exc.value.gaps == []  # clamped straight to the ceiling, no rungs


def test_oracle_rejects_unreachable_tolerance():
    with pytest.raises(ValueError):
        fidelity_oracle(state(0.0, 0.0, nbar=0.5), state(0.1, 0.0, nbar=0.5), tol=1e-12)
