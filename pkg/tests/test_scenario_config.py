import math
from dataclasses import replace

import pytest
import yaml
from hypothesis import given, settings
from hypothesis import strategies as st

from chiral_sta import config
from chiral_sta.errors import ScenarioError
from chiral_sta.experiments import canonical_scenarios, get_scenario
from chiral_sta.pulses import NoiseSpec, StageTwoParams
from chiral_sta.scenario import Scenario, from_flat, to_flat
from chiral_sta.sweeps import get_sweep

MINIMAL = "model: rwa3\nT_us: 1.0\ntau_us: 2.0\nti_us: 0.0\ntf_us: 8.0\n"


@pytest.mark.parametrize("name", sorted(canonical_scenarios()))
def test_round_trip_through_yaml(name):
    s = get_scenario(name)
    back = config.load_scenario(config.dump_scenario(s))
    assert back == s
    assert back.digest() == s.digest()


def test_minimal_file_matches_programmatic_construction():
    s = config.load_scenario(MINIMAL)
    want = Scenario("custom", stage_two=StageTwoParams(width=1.0, delay=2.0, t_start=0.0, t_end=8.0))
    assert s == want


def test_figure_plus_overrides():
    s = config.load_scenario("figure: fig8\ndt_ns: 1\nseed: 9\nnoise: uniform\nnoise_gamma: 0.25\n")
    base = get_scenario("fig8")
    assert s.dt == pytest.approx(0.001)
    assert s.seed == 9
    assert s.noise == NoiseSpec("uniform", gamma=0.25)
    assert s.stage_two == base.stage_two and s.stage_one == base.stage_one


def test_infinite_values_survive_round_trip():
    s = replace(get_scenario("fig10awgn"), noise=NoiseSpec("awgn", snr_db=math.inf))
    assert config.load_scenario(config.dump_scenario(s)).noise.snr_db == math.inf


def test_empty_file_names_first_required_key():
    with pytest.raises(ScenarioError) as info:
        config.load_scenario("")
    assert "'model'" in str(info.value) and "line 1" in str(info.value)


def test_missing_key_named():
    with pytest.raises(ScenarioError, match="'tau_us'"):
        config.load_scenario("model: rwa3\nT_us: 1\n")


def test_unknown_key_reports_its_line():
    with pytest.raises(ScenarioError) as info:
        config.load_scenario(MINIMAL + "colour: blue\n")
    assert info.value.line == 6 and "colour" in str(info.value)


def test_bad_value_reports_its_line():
    with pytest.raises(ScenarioError) as info:
        config.load_scenario(MINIMAL.replace("tau_us: 2.0", "tau_us: soon"))
    assert info.value.line == 3


def test_lab4_needs_explicit_q_pulse():
    with pytest.raises(ScenarioError, match="lab4"):
        config.load_scenario(MINIMAL.replace("rwa3", "lab4"))


def test_malformed_yaml_has_line():
    with pytest.raises(ScenarioError) as info:
        config.load_scenario("model: rwa3\nT_us: [1,\n")
    assert info.value.line is not None


def test_unknown_figure():
    with pytest.raises(ScenarioError, match="valid names"):
        config.load_scenario("figure: fig99\n")


def test_noise_requires_sampling():
    with pytest.raises(ScenarioError, match="dt"):
        replace(get_scenario("fig4a"), noise=NoiseSpec("awgn", snr_db=10))


def test_initial_state_validation():
    with pytest.raises(ScenarioError):
        replace(get_scenario("fig4a"), initial_populations=(0.5, 0.6, 0.0))
    with pytest.raises(ScenarioError):
        replace(get_scenario("fig4a"), initial_state=(1.0, 1.0, 0.0))


def test_digest_changes_with_any_field():
    s = get_scenario("fig8")
    assert s.digest() != replace(s, seed=1).digest()
    assert s.digest() != replace(s, phi_p=1e-9).digest()
    assert s.digest() == get_scenario("fig8").digest()


@settings(max_examples=30, deadline=None)
@given(
    width=st.floats(0.05, 5.0),
    ratio=st.floats(0.2, 4.0),
    t0=st.floats(-3.0, 3.0),
    seed=st.integers(0, 2**64 - 1),
    phi=st.floats(-10, 10),
)
def test_flat_round_trip_property(width, ratio, t0, seed, phi):
    p = StageTwoParams.stirap_convention(width=width, delay=ratio * width, t_start=t0)
    s = Scenario("prop", stage_two=p, seed=seed, phi_p=phi)
    flat = yaml.safe_load(yaml.safe_dump(to_flat(s)))
    assert from_flat(flat) == s


def test_load_scenario_file(tmp_path):
    path = tmp_path / "s.yaml"
    path.write_text(config.dump_scenario(get_scenario("fig11")))
    assert config.load_scenario_file(path) == get_scenario("fig11")


def test_sweep_file_with_inline_scenario_and_axes():
    text = (
        "name: mine\n"
        "scenario: {figure: fig4a}\n"
        "axes:\n"
        "  tau_over_T: {start: 1, stop: 3, num: 3}\n"
        "  beta_max_over_pi: [0.2, 0.5]\n"
    )
    base, spec = config.load_sweep(text)
    assert base == get_scenario("fig4a")
    assert spec.grid_size == 6 and spec.name == "mine"


def test_sweep_file_errors_have_lines():
    with pytest.raises(ScenarioError) as info:
        config.load_sweep("figure: fig3\naxes:\n  warp: [1]\n")
    assert info.value.line == 2
    with pytest.raises(ScenarioError) as info:
        config.load_sweep("figure: fig3\nspeed: 3\n")
    assert info.value.line == 2


def test_sweep_round_trip(tmp_path):
    base, spec = get_sweep("fig10rand")
    (tmp_path / "scenario.yaml").write_text(config.dump_scenario(base))
    (tmp_path / "sweep.yaml").write_text(config.dump_sweep(spec, "scenario.yaml"))
    base2, spec2 = config.load_sweep_file(tmp_path / "sweep.yaml")
    assert base2 == base and spec2 == spec
