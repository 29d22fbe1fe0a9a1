import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp
from scipy.linalg import expm

from chiral_sta import dynamics, pulses
from chiral_sta.dynamics import BOTH, Chirality, LevelStructure, RelaxationRates
from chiral_sta.errors import IntegrationDivergedError
from chiral_sta.experiments import build_fields, get_scenario, run_scenario

RNG = np.random.default_rng(2024)


def random_density(n=3):
    a = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_hermitian(n=3):
    a = RNG.normal(size=(n, n)) + 1j * RNG.normal(size=(n, n))
    return a + a.conj().T


# ---------------------------------------------------------------- Hamiltonians


def test_stage_one_sign_differs_between_enantiomers():
    hl = dynamics.build_stage1_h(1.3, 0.2, Chirality.L)
    hr = dynamics.build_stage1_h(1.3, 0.2, Chirality.R)
    np.testing.assert_allclose(hl, -hr)
    assert hl[0, 2] == pytest.approx(0.65 * np.exp(0.2j))


def test_stage_two_matrix_elements():
    h = dynamics.build_stage2_h(2.0, 4.0, 0.3, -0.1)
    assert h[0, 1] == pytest.approx(np.exp(0.3j))
    assert h[1, 2] == pytest.approx(2 * np.exp(-0.1j))
    assert h[0, 2] == 0


@settings(max_examples=40, deadline=None)
@given(t=st.floats(0.0, 2.5), chir=st.sampled_from(list(Chirality)))
def test_hamiltonians_are_hermitian(t, chir):
    s = get_scenario("fig8")
    flds = build_fields(replace(s, drift=replace(s.drift, omega_P=0.1, amp_Q=0.05)))
    tt = np.array([t])
    for h in (
        dynamics.rwa_h(tt, flds, s.structure, chir),
        dynamics.build_lab_h(tt, flds, s.structure, chir),
        dynamics.lab_interaction_h(tt, flds, s.structure, chir),
    ):
        np.testing.assert_allclose(h, np.conj(np.swapaxes(h, -1, -2)), atol=1e-12)


def test_carrier_offset_enters_as_linear_phase():
    s = get_scenario("fig8")
    flds = build_fields(replace(s, dt=None, drift=replace(s.drift, omega_P=0.2)))
    t = np.array([1.2, 1.5])
    h = dynamics.rwa_h(t, flds, s.structure, Chirality.L)
    fp = next(f for f in flds if f.label == "P")
    np.testing.assert_allclose(h[:, 0, 1], 0.5 * fp(t) * np.exp(1j * 0.2 * t))


def test_interaction_picture_is_exact_transform_of_lab_frame():
    s = get_scenario("fig8-lab4")
    flds = build_fields(s)
    t = np.array([0.8, 1.3])
    e = s.structure.energies
    lab = dynamics.build_lab_h(t, flds, s.structure, Chirality.R)
    inter = dynamics.lab_interaction_h(t, flds, s.structure, Chirality.R)
    for k, tk in enumerate(t):
        u = np.diag(np.exp(1j * e * tk))
        np.testing.assert_allclose(inter[k], u @ (lab[k] - np.diag(e)) @ u.conj().T, atol=1e-9)


def test_level_structure_derived_frequencies():
    st_ = LevelStructure()
    assert st_.omega23 == pytest.approx(12212.0 - 11363.0)
    assert st_.resonance("Q") == 12212.0
    with pytest.raises(ValueError):
        LevelStructure(omega12=5.0, omega13=4.0)


# ---------------------------------------------------------------- relaxation bookkeeping


def test_rates_from_lifetimes():
    r = RelaxationRates.from_lifetimes(300.0, 400.0)
    assert (r.gamma12, r.gamma13, r.gamma23) == pytest.approx((1 / 300, 0.5 / 400, 0.5 / 400))
    assert RelaxationRates.from_lifetimes(math.inf, math.inf).is_zero()
    assert r.tau2 == pytest.approx(300.0) and r.tau3 == pytest.approx(400.0)


def test_lindblad_superoperator_matches_direct_formula():
    h = random_hermitian()
    rho = random_density()
    jumps = RelaxationRates(0.3, 0.2, 0.1).jump_operators(3)
    sup = dynamics.lindblad_superoperator(h, jumps)
    direct = -1j * (h @ rho - rho @ h)
    for op in jumps:
        ld = op.conj().T @ op
        direct += op @ rho @ op.conj().T - 0.5 * (ld @ rho + rho @ ld)
    np.testing.assert_allclose((sup @ rho.reshape(-1)).reshape(3, 3), direct, atol=1e-13)


def test_jump_operators_lower_energy():
    ops = RelaxationRates(0.4, 0.0, 0.9).jump_operators(4)
    assert len(ops) == 2
    assert ops[0][0, 1] == pytest.approx(math.sqrt(0.4))
    assert ops[1][1, 2] == pytest.approx(math.sqrt(0.9))


# ---------------------------------------------------------------- integrators


def _zero_h(t):
    return np.zeros((len(np.atleast_1d(t)), 3, 3), dtype=complex)


def test_pure_decay_of_level_two():
    g = 0.7
    rho0 = np.diag([0, 1, 0]).astype(complex)
    times = np.linspace(0, 3, 7)
    traj = dynamics.evolve_master(rho0, _zero_h, (0, 3), 0.01, RelaxationRates(g, 0, 0), sample_times=times)
    pops = traj.populations()
    np.testing.assert_allclose(pops[:, 1], np.exp(-g * times), atol=1e-9)
    np.testing.assert_allclose(pops[:, 0], 1 - np.exp(-g * times), atol=1e-9)


def test_cascade_decay_of_level_three():
    g = 0.4
    rho0 = np.diag([0, 0, 1]).astype(complex)
    times = np.linspace(0, 3, 7)
    traj = dynamics.evolve_master(rho0, _zero_h, (0, 3), 0.01, RelaxationRates(0, g, g), sample_times=times)
    pops = traj.populations()
    np.testing.assert_allclose(pops[:, 2], np.exp(-2 * g * times), atol=1e-9)
    np.testing.assert_allclose(pops[:, 0], 0.5 * (1 - np.exp(-2 * g * times)), atol=1e-9)


def _q_only(q, chir):
    f = pulses.stage_one_field(q, 12212.0, 0.5 * math.pi)
    s = LevelStructure()
    return lambda t: dynamics.rwa_h(t, (f,), s, chir)


def test_stage_one_rk4_against_commuting_propagator():
    q = get_scenario("fig8").stage_one
    area, _ = quad(lambda t: float(pulses.gaussian_q(t, q)), 0, q.t_end, epsabs=1e-14)
    psi0 = np.array([1, 0, 0], dtype=complex)
    for chir in BOTH:
        traj = dynamics.evolve_schrodinger(psi0, _q_only(q, chir), (0, q.t_end), 1e-3)
        exact = expm(-1j * area * dynamics.build_stage1_h(1.0, 0.5 * math.pi, chir)) @ psi0
        np.testing.assert_allclose(traj.states[-1], exact, atol=1e-10)


def test_ideal_stage_one_gives_opposite_superpositions():
    psi0 = np.array([1, 0, 0], dtype=complex)
    l = dynamics.ideal_stage_one(psi0, 0.5 * math.pi, Chirality.L)
    r = dynamics.ideal_stage_one(psi0, 0.5 * math.pi, Chirality.R)
    np.testing.assert_allclose(l, np.array([1, 0, -1]) / math.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(r, np.array([1, 0, 1]) / math.sqrt(2), atol=1e-15)
    rho = dynamics.ideal_stage_one(np.outer(psi0, psi0.conj()), 0.5 * math.pi, Chirality.L)
    np.testing.assert_allclose(rho, np.outer(l, l.conj()), atol=1e-15)


def _stage_two_h(p):
    def h(t):
        omega_p, omega_s = pulses.cp_pulses(t, p)
        return dynamics.build_stage2_h(omega_p, omega_s)

    return h


def test_rk4_fourth_order_convergence():
    p = get_scenario("fig4a").stage_two
    psi0 = np.array([1, 0, 1], dtype=complex) / math.sqrt(2)
    h = _stage_two_h(p)

    def rhs(t, y):
        return -1j * h(np.array([t]))[0] @ y

    ref = solve_ivp(rhs, (p.t_start, p.t_end), psi0, method="DOP853", rtol=1e-13, atol=1e-14).y[:, -1]
    errs = [
        np.abs(dynamics.evolve_schrodinger(psi0, h, (p.t_start, p.t_end), step, n_samples=2).states[-1] - ref).max()
        for step in (0.08, 0.04)
    ]
    assert errs[0] / errs[1] == pytest.approx(16, rel=0.25)


def test_norm_preserved_closed_system():
    res = run_scenario(get_scenario("fig4a"))
    assert np.abs(res.populations_l.sum(axis=1) - 1).max() < 1e-9
    assert np.abs(res.populations_r.sum(axis=1) - 1).max() < 1e-9


def test_master_equation_reduces_to_schrodinger_without_decay():
    p = get_scenario("fig4e").stage_two
    psi0 = np.array([1, 0, -1], dtype=complex) / math.sqrt(2)
    h = _stage_two_h(p)
    span = (p.t_start, p.t_end)
    ket = dynamics.evolve_schrodinger(psi0, h, span, 0.004)
    rho = dynamics.evolve_master(np.outer(psi0, psi0.conj()), h, span, 0.004, RelaxationRates())
    np.testing.assert_allclose(rho.populations(), ket.populations(), atol=1e-10)


def test_trace_and_positivity_open_system():
    s = get_scenario("fig11")
    res = run_scenario(replace(s, rates=RelaxationRates.from_lifetimes(5.0, 5.0)))
    for pops in (res.populations_l, res.populations_r):
        assert np.abs(pops.sum(axis=1) - 1).max() < 1e-9
        assert pops.min() > -1e-9


def test_divergence_is_detected():
    big = 400.0

    def h(t):
        return np.broadcast_to(big * np.diag([1.0, -1.0, 0.0]).astype(complex) + big, (len(t), 3, 3))

    with pytest.raises(IntegrationDivergedError):
        dynamics.evolve_schrodinger(np.array([1, 0, 0], dtype=complex), h, (0, 1), 0.05)


def test_knots_land_on_step_grid():
    grid = dynamics._step_grid((0.0, 1.0), 0.3, [0.123456789, 0.5])
    assert 0.123456789 in grid and 0.5 in grid
    assert np.all(np.diff(grid) <= 0.3 + 1e-15)


def test_sample_times_outside_span_rejected():
    with pytest.raises(ValueError):
        dynamics.evolve_schrodinger(np.array([1, 0, 0], dtype=complex), _zero_h, (0, 1), 0.1, sample_times=[2.0])


def test_lab_frame_close_to_rwa_for_well_separated_carriers():
    # scaled-down level structure keeps the lab run cheap; counter-rotating error ~ Omega / omega
    s = get_scenario("fig5")
    structure = LevelStructure(omega12=400.0, omega13=700.0, omega4=1500.0, p_drives_24=False, q_drives_34=False)
    rwa = run_scenario(replace(s, structure=structure))
    lab = run_scenario(replace(s, structure=structure, model="lab4"))
    np.testing.assert_allclose(lab.final_l[:3], rwa.final_l, atol=2e-2)
    np.testing.assert_allclose(lab.final_r[:3], rwa.final_r, atol=2e-2)
    assert lab.final_l[3] == 0 and lab.final_r[3] == 0


def test_master_divergence_is_detected():
    def h(t):
        return np.broadcast_to(300.0 * np.ones((3, 3), dtype=complex), (len(t), 3, 3))

    rho0 = np.diag([1, 0, 0]).astype(complex)
    with pytest.raises(IntegrationDivergedError):
        dynamics.evolve_master(rho0, h, (0, 1), 0.05, RelaxationRates(0.1, 0.1, 0.1))
