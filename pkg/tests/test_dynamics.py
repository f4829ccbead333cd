import math

import numpy as np
import pytest

from qflight.dynamics import (
    RATE_MASK_THRESHOLD,
    StateError,
    assemble_two_qubit,
    evolve_two_qubit_elements,
    rate_series,
    single_qubit_state,
    validate_density_matrix,
)
from qflight.entanglement import bell_psi
from qflight.kernel import ExponentialKernel
from qflight.volterra import AmplitudeTrajectory, TimeGrid, make_grid, solve_aux

LAM = 0.01


def fake_traj(amplitudes, derivatives=None):
    amps = np.asarray(amplitudes, dtype=complex)
    ders = (np.zeros_like(amps) if derivatives is None
            else np.asarray(derivatives, dtype=complex))
    grid = TimeGrid(dt_gamma=1.0, n_steps=len(amps) - 1)
    return AmplitudeTrajectory(grid=grid, amplitude=amps, derivative=ders)


def random_x_state(rng):
    d = rng.dirichlet(np.ones(4))
    r14 = math.sqrt(d[0] * d[3]) * rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    r23 = math.sqrt(d[1] * d[2]) * rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
    rho = np.diag(d).astype(complex)
    rho[0, 3], rho[3, 0] = r14, np.conj(r14)
    rho[1, 2], rho[2, 1] = r23, np.conj(r23)
    return rho


def test_single_qubit_excited_start():
    traj = fake_traj([1.0, 0.5])
    rho = single_qubit_state(traj, 1.0, 0.0, 0)
    assert np.allclose(rho, np.diag([1.0, 0.0]))


def test_single_qubit_ground_is_dark():
    traj = fake_traj([1.0, 0.3, 0.001])
    for idx in range(3):
        rho = single_qubit_state(traj, 0.0, 1.0, idx)
        assert np.allclose(rho, np.diag([0.0, 1.0]))


def test_single_qubit_superposition_frozen_numbers():
    traj = fake_traj([1.0, 0.7680])
    s = 1 / math.sqrt(2)
    rho = single_qubit_state(traj, s, s, 1)
    assert rho[0, 0].real == pytest.approx(0.294912, abs=1e-6)
    assert abs(rho[0, 1]) == pytest.approx(0.38400, abs=1e-5)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-15)
    validate_density_matrix(rho, 2)


def test_single_qubit_requires_normalized_input():
    traj = fake_traj([1.0, 0.9])
    with pytest.raises(StateError, match="normalized"):
        single_qubit_state(traj, 1.0, 1.0, 0)


def test_rate_series_zero_at_start():
    traj = solve_aux(ExponentialKernel(branches=((LAM / 4, complex(LAM)),)),
                     make_grid(10.0, 1e-3))
    rates = rate_series(traj)
    assert rates.gamma_t[0] == 0.0
    assert rates.omega_t[0] == 0.0


def test_rate_series_stationary_oracle_value():
    # Gamma(t) = 4W sin(x) / (|D| cos x + Lam sin x), x = |D| t / 2, W = lambda/4
    traj = solve_aux(ExponentialKernel(branches=((LAM / 4, complex(LAM)),)),
                     make_grid(10.0, 1e-3))
    rates = rate_series(traj)
    absd = math.sqrt(4 * (LAM / 4) - LAM * LAM)
    x = absd * 10.0 / 2.0
    want = 4 * (LAM / 4) * math.sin(x) / (absd * math.cos(x) + LAM * math.sin(x))
    assert want == pytest.approx(0.051754, abs=1e-6)
    assert rates.gamma_t[-1] == pytest.approx(want, rel=1e-6)


def test_rate_series_goes_negative_in_strong_coupling():
    traj = solve_aux(ExponentialKernel(branches=((LAM / 4, complex(LAM)),)),
                     make_grid(60.0, 1e-3))
    rates = rate_series(traj)
    valid = rates.gamma_t[~rates.mask]
    assert valid.min() < 0.0
    assert valid.max() > 0.0


def test_rate_series_mask_rule():
    amps = np.array([1.0, 0.5, 1e-9, 0.2])
    traj = fake_traj(amps, derivatives=[0.0, 0.1, 0.1, 0.1])
    rates = rate_series(traj)
    assert list(rates.mask) == [False, False, True, False]
    assert rates.gamma_t[2] == 0.0 and rates.omega_t[2] == 0.0
    assert np.all(np.isfinite(rates.gamma_t))
    assert RATE_MASK_THRESHOLD == 1e-8


def test_rate_integral_reproduces_amplitude_decay():
    # integral of Gamma dt = -2 ln |c(t)|, away from amplitude zeros
    from qflight.kernel import residue_kernel
    from qflight.model import SystemParams

    p = SystemParams(beta_omega0_over_gamma=1.0)
    traj = solve_aux(residue_kernel(p), make_grid(100.0, 1e-3))
    rates = rate_series(traj)
    assert not rates.mask.any()
    integral = np.trapezoid(rates.gamma_t, traj.times)
    want = -2.0 * math.log(abs(traj.amplitude[-1]))
    assert integral == pytest.approx(want, rel=1e-6)


def test_assemble_identity_and_full_decay():
    rho0 = bell_psi()
    assert np.allclose(assemble_two_qubit(rho0, 1.0), rho0, atol=1e-15)
    final = assemble_two_qubit(rho0, 0.0)
    assert final[3, 3].real == pytest.approx(1.0, abs=1e-15)
    off = final.copy()
    off[3, 3] = 0.0
    assert np.max(np.abs(off)) == 0.0


def test_assemble_bell_frozen_numbers():
    # exact arithmetic at |C|^2 = 0.589824: rho11 = 0.5 p^2, rho22 = 0.5 p (1-p),
    # rho44 by trace closure (0.1209658/0.5841222, not the rounded 0.120967/0.584120)
    c = math.sqrt(0.589824)
    rho = assemble_two_qubit(bell_psi(), c)
    assert rho[0, 0].real == pytest.approx(0.173946175488, rel=1e-10)
    assert rho[1, 1].real == pytest.approx(0.120965824512, rel=1e-10)
    assert rho[2, 2].real == pytest.approx(0.120965824512, rel=1e-10)
    assert rho[3, 3].real == pytest.approx(0.584122175488, rel=1e-10)
    assert abs(rho[0, 3]) == pytest.approx(0.294912, rel=1e-10)
    validate_density_matrix(rho, 4)


def test_assemble_trace_exact():
    rng = np.random.default_rng(23)
    for _ in range(200):
        rho0 = random_x_state(rng)
        c = rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        rho = assemble_two_qubit(rho0, complex(c))
        assert abs(np.trace(rho).real - 1.0) <= 1e-14
        assert np.trace(rho).imag == 0.0


def test_assemble_rejects_bad_inputs():
    with pytest.raises(StateError):
        assemble_two_qubit(np.eye(4, dtype=complex), 0.5)   # trace 4
    with pytest.raises(StateError):
        assemble_two_qubit(bell_psi(), 1.5)


def test_factorization_consistency():
    # product initial states evolve as the tensor product of single-qubit states
    rng = np.random.default_rng(41)
    for _ in range(100):
        angles = rng.uniform(0, 2 * np.pi, size=4)
        ca = (math.cos(angles[0]), math.sin(angles[0]) * np.exp(1j * angles[1]))
        cb = (math.cos(angles[2]), math.sin(angles[2]) * np.exp(1j * angles[3]))
        psi = np.kron(np.array(ca), np.array(cb))
        rho0 = np.outer(psi, psi.conj())
        c = complex(rng.uniform(0, 1) * np.exp(1j * rng.uniform(0, 2 * np.pi)))
        got = assemble_two_qubit(rho0, c)
        traj = fake_traj([1.0, c])
        want = np.kron(single_qubit_state(traj, ca[0], ca[1], 1),
                       single_qubit_state(traj, cb[0], cb[1], 1))
        assert np.max(np.abs(got - want)) <= 1e-12


def test_elements_match_assemble():
    rng = np.random.default_rng(9)
    rho0 = random_x_state(rng)
    cs = rng.uniform(0, 1, size=5) * np.exp(1j * rng.uniform(0, 2 * np.pi, size=5))
    el = evolve_two_qubit_elements(rho0, cs)
    for i, c in enumerate(cs):
        rho = assemble_two_qubit(rho0, complex(c))
        for (a, b), v in el.items():
            assert rho[a, b] == pytest.approx(v[i], abs=1e-15)


def test_validate_density_matrix_errors():
    with pytest.raises(StateError, match="Hermitian"):
        validate_density_matrix(np.array([[1.0, 1.0], [0.0, 0.0]], dtype=complex), 2)
    with pytest.raises(StateError, match="trace"):
        validate_density_matrix(np.diag([0.7, 0.7]).astype(complex), 2)
    with pytest.raises(StateError, match="negative eigenvalue"):
        validate_density_matrix(np.diag([1.5, -0.5]).astype(complex), 2)
