"""Configuration schema tests: casting, rejection, round-trip."""

import copy

import pytest
import yaml

from cabledyn.config import RunConfig, load_config, parse_config
from cabledyn.errors import ConfigInvalid

BASE = {
    "label": "unit",
    "seed": 9,
    "theta_taut": 0.98,
    "cable": {
        "length": 2.0, "n_nodes": 8, "density": 1025.0,
        "water_density": 1025.0, "section_area": 1.0e-3,
        "drag_diameter": 0.03, "youngs_modulus": 2.0e6,
        "normal_drag_coeff": 1.5, "tangential_drag_coeff": 0.06,
    },
    "current": {"type": "zero"},
    "integrator": {"dt": 1.0e-3, "t_end": 1.0, "record_stride": 10},
    "boundary": {
        "first": {"profile": "constant_velocity",
                  "params": {"start": [0, 0, 0], "velocity": [0.5, 0, 0]}},
        "last": {"profile": "constant_velocity",
                 "params": {"start": [0, 1.5, 0], "velocity": [0.5, 0, 0]}},
    },
}


def variant(**updates):
    data = copy.deepcopy(BASE)
    data.update(updates)
    return data


class TestParsing:
    def test_minimal_simulate_builds(self):
        rc = parse_config(BASE)
        scn = rc.scenario()
        assert scn.props.n_nodes == 8
        assert scn.integrator.dt == 1e-3
        assert rc.label == "unit" and rc.seed == 9

    def test_round_trip_is_fixed_point(self):
        rc = parse_config(BASE)
        again = parse_config(rc.echo)
        assert again.echo == rc.echo

    def test_string_scientific_notation_coerces(self):
        data = variant()
        data["cable"]["youngs_modulus"] = "3.68e6"
        rc = parse_config(data)
        assert rc.cable().youngs_modulus == 3.68e6

    def test_yaml_bare_exponent_survives(self, tmp_path):
        # plain "3.68e6" is a *string* under YAML 1.1 rules; the caster
        # has to absorb that
        path = tmp_path / "c.yaml"
        data = variant()
        data["cable"]["youngs_modulus"] = 3.68e6
        text = yaml.safe_dump(data).replace("3680000.0", "3.68e6")
        path.write_text(text)
        assert load_config(path).cable().youngs_modulus == 3.68e6

    def test_root_must_be_mapping(self):
        with pytest.raises(ConfigInvalid):
            parse_config([1, 2])


class TestRejection:
    def test_unknown_root_key(self):
        with pytest.raises(ConfigInvalid, match="mystery"):
            parse_config(variant(mystery=1))

    def test_unknown_nested_key_names_path(self):
        data = variant()
        data["cable"]["stiffness"] = 2.0
        with pytest.raises(ConfigInvalid, match="cable.stiffness"):
            parse_config(data)

    def test_unknown_boundary_param(self):
        data = variant()
        data["boundary"]["first"]["params"]["wobble"] = 1.0
        with pytest.raises(ConfigInvalid, match="wobble"):
            parse_config(data)

    def test_unknown_profile_lists_known(self):
        data = variant()
        data["boundary"]["first"]["profile"] = "teleport"
        with pytest.raises(ConfigInvalid, match="constant_velocity"):
            parse_config(data)

    def test_missing_boundary_end(self):
        data = variant()
        del data["boundary"]["last"]
        with pytest.raises(ConfigInvalid, match="last"):
            parse_config(data)

    def test_non_numeric_value(self):
        data = variant()
        data["cable"]["length"] = "long"
        with pytest.raises(ConfigInvalid, match="cable.length"):
            parse_config(data)

    def test_bool_is_not_an_integer(self):
        data = variant()
        data["integrator"]["record_stride"] = True
        with pytest.raises(ConfigInvalid):
            parse_config(data)

    def test_missing_section_on_use(self):
        data = variant()
        del data["boundary"]
        rc = parse_config(data)
        with pytest.raises(ConfigInvalid, match="boundary"):
            rc.scenario()

    def test_bad_yaml_file(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("cable: [unclosed\n")
        with pytest.raises(ConfigInvalid):
            load_config(path)


class TestCurrent:
    def test_default_is_zero(self):
        data = variant()
        del data["current"]
        assert parse_config(data).current().is_uniform

    def test_uniform_needs_velocity(self):
        rc = parse_config(variant(current={"type": "uniform"}))
        with pytest.raises(ConfigInvalid, match="velocity"):
            rc.current()

    def test_uniform_velocity(self):
        rc = parse_config(variant(
            current={"type": "uniform", "velocity": [0.1, 0, 0]}))
        assert rc.current().uniform_velocity[0] == 0.1


class TestIdentifySection:
    def make(self, tmp_path, **overrides):
        data = variant(identify={
            "dataset": "data.csv",
            "ga": {"population": 10, "generations": 3},
            "forward": {"dt": 1e-3, "t_end": 10.0},
        })
        data["identify"].update(overrides)
        rc = parse_config(data, base_dir=str(tmp_path))
        return rc

    def test_parts_built(self, tmp_path):
        path, ga, model, threads = self.make(tmp_path).identify_parts()
        assert path.endswith("data.csv") and str(tmp_path) in path
        assert ga.population == 10 and ga.seed == 9
        assert model.t_end == 10.0
        assert threads is None

    def test_seed_required(self, tmp_path):
        data = variant(identify={"dataset": "d.csv"})
        del data["seed"]
        rc = parse_config(data, base_dir=str(tmp_path))
        with pytest.raises(ConfigInvalid, match="seed"):
            rc.identify_parts()

    def test_dataset_required(self, tmp_path):
        data = variant(identify={"ga": {"population": 8}})
        rc = parse_config(data, base_dir=str(tmp_path))
        with pytest.raises(ConfigInvalid, match="dataset"):
            rc.identify_parts()

    def test_absolute_dataset_untouched(self, tmp_path):
        rc = self.make(tmp_path, dataset="/abs/data.csv")
        assert rc.identify_parts()[0] == "/abs/data.csv"


class TestAnalyzeSection:
    def test_kind_and_params_split(self):
        rc = parse_config(variant(analyze={
            "kind": "converge-space", "n_list": [4, 6], "stations": 31}))
        kind, params = rc.analyze_params()
        assert kind == "converge-space"
        assert params == {"n_list": [4, 6], "stations": 31}

    def test_bad_kind_rejected(self):
        rc = parse_config(variant(analyze={"kind": "frequency-sweep"}))
        with pytest.raises(ConfigInvalid, match="sweep-material"):
            rc.analyze_params()

    def test_samples_accepts_int_and_pair(self):
        rc = parse_config(variant(analyze={
            "kind": "sweep-material", "d_range": [0.01, 0.1],
            "e_range": [1e6, 1e8], "samples": 3}))
        assert rc.analyze_params()[1]["samples"] == 3
        rc = parse_config(variant(analyze={
            "kind": "sweep-material", "d_range": [0.01, 0.1],
            "e_range": [1e6, 1e8], "samples": [3, 4]}))
        assert rc.analyze_params()[1]["samples"] == [3, 4]


class TestTransitionProfile:
    def test_moves_cast_and_validated(self):
        data = variant()
        data["boundary"]["last"] = {
            "profile": "ramp_hold_transition",
            "params": {"start": [0, 2.7, 0], "direction": [1, 0, 0],
                       "speed": 0.5, "t_start": 0.0, "t_end": 5.0,
                       "moves": [{"axis": 1, "t_start": 10.0,
                                  "t_end": 20.0, "delta": -2.7}]},
        }
        rc = parse_config(data)
        assert rc.boundary() is not None

    def test_move_axis_must_be_integer(self):
        data = variant()
        data["boundary"]["last"] = {
            "profile": "ramp_hold_transition",
            "params": {"start": [0, 2.7, 0], "direction": [1, 0, 0],
                       "speed": 0.5, "t_start": 0.0, "t_end": 5.0,
                       "moves": [{"axis": "y", "t_start": 10.0,
                                  "t_end": 20.0, "delta": -2.7}]},
        }
        with pytest.raises(ConfigInvalid, match="axis"):
            parse_config(data)
