from chiral_sta import pulses, verify
from chiral_sta.experiments import get_scenario


def test_all_checks_pass_on_pristine_build():
    checks = verify.run_checks()
    assert all(c.passed for c in checks), verify.report(checks)
    table = verify.report(checks)
    assert table.count("PASS") == len(checks)


def test_fig4a_residual_reported_below_threshold():
    assert verify.decoupling_ratio(get_scenario("fig4a").stage_two) < 1e-8


def test_mutated_pulse_formula_fails_the_verifier():
    def swapped(t, p):
        omega_p, omega_s = pulses.cp_pulses(t, p)
        return -omega_p, omega_s

    checks = verify.run_checks(cp_func=swapped)
    failed = [c.name for c in checks if not c.passed]
    assert failed == [f"decoupling residual {n}" for n in ("fig4a", "fig4c", "fig4e")]


def test_non_finite_value_fails():
    assert not verify.Check("x", float("nan"), 1.0).passed
