import dataclasses
from pathlib import Path

import numpy as np
import pytest

from adaptvs.plant import DisturbanceSpec
from adaptvs.scenario import (
    DEFAULT_TARGET_OFFSET,
    FeatureLayout,
    Scenario,
    ScenarioError,
    load_scenario,
    scenario_from_dict,
    scenario_hash,
    scenario_to_dict,
)

REPO = Path(__file__).resolve().parents[1]


class TestDefaults:
    def test_field_defaults(self):
        s = Scenario()
        assert s.environment == "no_bend"
        assert s.duration_steps == 2100
        assert s.flow_source == "synthetic"
        assert s.seed == 0
        assert s.features.count == 6

    def test_default_start_offset_from_center(self):
        s = Scenario()
        np.testing.assert_allclose(s.start_target() - s.camera.center, DEFAULT_TARGET_OFFSET)

    def test_explicit_start_honored(self):
        s = Scenario(initial_target_px=(10.0, 20.0))
        np.testing.assert_array_equal(s.start_target(), [10.0, 20.0])

    def test_environment_name_and_disturbance(self):
        assert Scenario(environment="two_bend").environment_name == "two_bend"
        assert Scenario(environment="two_bend").disturbance().dead_zone == 2.0
        custom = Scenario(environment=DisturbanceSpec(rotation_phi=0.3))
        assert custom.environment_name == "custom"
        assert custom.disturbance().rotation_phi == 0.3


class TestValidation:
    def test_unknown_preset(self):
        with pytest.raises(ValueError, match="three_bend"):
            Scenario(environment="three_bend")

    def test_duration_positive(self):
        with pytest.raises(ValueError, match="duration_steps"):
            Scenario(duration_steps=0)

    def test_flow_source_enum(self):
        with pytest.raises(ValueError, match="flow_source"):
            Scenario(flow_source="lk")

    def test_target_inside_image(self):
        with pytest.raises(ValueError, match="inside"):
            Scenario(initial_target_px=(400.0, 10.0))

    def test_feature_layout_constraints(self):
        with pytest.raises(ValueError):
            FeatureLayout(count=0)
        with pytest.raises(ValueError):
            FeatureLayout(blob_sigma=0.0)
        with pytest.raises(ValueError):
            FeatureLayout(margin_px=-1.0)


class TestFromDict:
    def test_minimal(self):
        s = scenario_from_dict({"schema": 1})
        assert s == Scenario()

    def test_missing_schema(self):
        with pytest.raises(ScenarioError, match="schema"):
            scenario_from_dict({})

    def test_wrong_schema_version(self):
        with pytest.raises(ScenarioError, match="unsupported version"):
            scenario_from_dict({"schema": 2})

    def test_unknown_top_level_key(self):
        with pytest.raises(ScenarioError, match="controler"):
            scenario_from_dict({"schema": 1, "controler": {}})

    def test_unknown_nested_keys_have_dotted_paths(self):
        with pytest.raises(ScenarioError, match=r"estimator\.alhpa"):
            scenario_from_dict({"schema": 1, "estimator": {"alhpa": 0.9}})
        with pytest.raises(ScenarioError, match=r"controller\.kp"):
            scenario_from_dict({"schema": 1, "controller": {"kp": 0.2}})
        with pytest.raises(ScenarioError, match=r"features\.blobsigma"):
            scenario_from_dict({"schema": 1, "features": {"blobsigma": 2}})
        with pytest.raises(ScenarioError, match=r"environment\.rotation"):
            scenario_from_dict({"schema": 1, "environment": {"rotation": 0.5}})
        with pytest.raises(ScenarioError, match=r"environment\.shear\.sigma3"):
            scenario_from_dict(
                {"schema": 1, "environment": {"shear": {"sigma1": 1, "sigma2": 1, "sigma3": 1}}}
            )

    def test_config_violations_carry_path(self):
        with pytest.raises(ScenarioError, match="estimator"):
            scenario_from_dict({"schema": 1, "estimator": {"alpha": 1.5}})
        with pytest.raises(ScenarioError, match="controller"):
            scenario_from_dict({"schema": 1, "controller": {"Kp": -1.0}})

    def test_custom_environment_fields_verbatim(self):
        s = scenario_from_dict(
            {
                "schema": 1,
                "environment": {
                    "rotation_phi": 1.0,
                    "scale_s": 0.7,
                    "dead_zone": 0.25,
                    "drift_rate": 0.001,
                    "flow_noise_sigma": 0.5,
                    "shear": {"sigma1": 1.1, "sigma2": 0.9, "axis": 0.2},
                },
            }
        )
        d = s.disturbance()
        assert d.rotation_phi == 1.0
        assert d.scale_s == 0.7
        assert d.shear.axis == 0.2

    def test_bad_target_shapes(self):
        with pytest.raises(ScenarioError, match="initial_target_px"):
            scenario_from_dict({"schema": 1, "initial_target_px": [1.0]})
        with pytest.raises(ScenarioError, match="initial_target_px"):
            scenario_from_dict({"schema": 1, "initial_target_px": ["a", "b"]})

    def test_integer_fields_reject_non_integers(self):
        with pytest.raises(ScenarioError, match="duration_steps"):
            scenario_from_dict({"schema": 1, "duration_steps": 7.5})
        with pytest.raises(ScenarioError, match="seed"):
            scenario_from_dict({"schema": 1, "seed": True})

    def test_not_a_mapping(self):
        with pytest.raises(ScenarioError, match="mapping"):
            scenario_from_dict([1, 2])  # type: ignore[arg-type]


class TestFiles:
    @pytest.mark.parametrize("name", ["one_bend.yaml", "default_sweep.yaml"])
    def test_repo_scenarios_parse(self, name):
        s = load_scenario(REPO / "scenarios" / name)
        assert s.duration_steps == 2100

    def test_missing_file(self, tmp_path):
        with pytest.raises(ScenarioError, match="nope.yaml"):
            load_scenario(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        p = tmp_path / "bad.yaml"
        p.write_text("schema: [unclosed\n")
        with pytest.raises(ScenarioError, match="YAML"):
            load_scenario(p)

    def test_typo_in_file_is_fatal(self, tmp_path):
        p = tmp_path / "typo.yaml"
        p.write_text("schema: 1\nestimator:\n  alpa: 0.9\n")
        with pytest.raises(ScenarioError, match=r"estimator\.alpa"):
            load_scenario(p)


class TestHash:
    def test_stable_for_equal_scenarios(self):
        assert scenario_hash(Scenario()) == scenario_hash(Scenario())

    def test_sensitive_to_any_field(self):
        base = scenario_hash(Scenario())
        assert scenario_hash(Scenario(seed=1)) != base
        assert scenario_hash(Scenario(environment="one_bend")) != base
        assert (
            scenario_hash(dataclasses.replace(Scenario(), flow_source="lucas_kanade")) != base
        )

    def test_dict_round_trip_preserves_hash(self):
        s = scenario_from_dict(
            {
                "schema": 1,
                "environment": {"rotation_phi": 0.4, "shear": {"sigma1": 1.2, "sigma2": 0.8}},
                "estimator": {"alpha": 0.75, "flow_threshold": 1.2},
                "seed": 9,
            }
        )
        again = scenario_from_dict(scenario_to_dict(s))
        assert scenario_hash(again) == scenario_hash(s)

    def test_default_and_explicit_target_hash_equal(self):
        # the canonical form resolves the default start position
        explicit = Scenario(initial_target_px=(280.0, 310.0))
        assert scenario_hash(explicit) == scenario_hash(Scenario())
