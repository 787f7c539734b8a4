import pytest
import yaml

from afcmem.scenario import BUNDLED, Scenario, ScenarioError, load_scenario, parse_text, with_override

MINIMAL = """\
schema_version: 1
name: tiny
seed: 5
bound:
  mu: [0.2, 0.8]
  memory_efficiency: 0.069
"""


def test_minimal_parses():
    sc = parse_text(MINIMAL)
    assert sc.name == "tiny" and sc.seed == 5
    assert list(sc.bound.mu) == [0.2, 0.8]
    assert sc.simulate is None


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_round_trip(name):
    sc = load_scenario(name)
    again = parse_text(sc.dump())
    assert again == sc
    assert again.dump() == sc.dump()


def test_load_from_path(tmp_path):
    p = tmp_path / "s.yaml"
    p.write_text(MINIMAL)
    assert load_scenario(p).name == "tiny"
    with pytest.raises(ScenarioError):
        load_scenario(tmp_path / "missing.yaml")


def test_unknown_key_reports_line():
    text = MINIMAL + "  memory_eficiency: 0.1\n"
    with pytest.raises(ScenarioError) as exc:
        parse_text(text, "typo.yaml")
    assert exc.value.line == 7
    assert "unknown key" in str(exc.value)
    assert str(exc.value).startswith("typo.yaml:7")


def test_negative_mu_reports_item_line():
    text = MINIMAL.replace("[0.2, 0.8]", "\n    - 0.2\n    - -0.8")
    with pytest.raises(ScenarioError) as exc:
        parse_text(text)
    assert exc.value.line == 7
    assert "bound.mu.1" in str(exc.value)


def test_schema_version_and_syntax():
    with pytest.raises(ScenarioError, match="schema_version"):
        parse_text(MINIMAL.replace("schema_version: 1", "schema_version: 2"))
    with pytest.raises(ScenarioError, match="YAML"):
        parse_text("name: [unclosed\n")
    with pytest.raises(ScenarioError):
        parse_text("- just\n- a list\n")


def test_seed_range():
    with pytest.raises(ScenarioError):
        parse_text(MINIMAL.replace("seed: 5", "seed: -1"))
    with pytest.raises(ScenarioError):
        parse_text(MINIMAL.replace("seed: 5", f"seed: {2**64}"))
    assert parse_text(MINIMAL.replace("seed: 5", f"seed: {2**64 - 1}")).seed == 2**64 - 1


def test_override():
    sc = load_scenario("timebin_qubits")
    sc2 = with_override(sc, "timebin.weight_a", 1.0)
    assert sc2.timebin.weight_a == 1.0
    assert sc.timebin.weight_a == 0.85
    with pytest.raises(ScenarioError, match="unknown parameter path"):
        with_override(sc, "timebin.nope", 1)
    with pytest.raises(ScenarioError, match="unknown parameter path"):
        with_override(sc, "nosection.x", 1)
    with pytest.raises(ScenarioError):
        with_override(sc, "detection.trials", 0)


def test_section_lookup():
    sc = parse_text(MINIMAL)
    assert sc.section("bound") is sc.bound
    with pytest.raises(ScenarioError, match="no 'simulate' section"):
        sc.section("simulate")


def test_canonical_is_plain_yaml():
    sc = load_scenario("echo_train")
    assert isinstance(Scenario.model_validate(yaml.safe_load(sc.dump())), Scenario)
