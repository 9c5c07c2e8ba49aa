import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from realfield.errors import ParseError, SchemaError
from realfield.scenario import (
    ScenarioConfig, from_dict, parse_scenario, reference_double_slit, serialize_scenario,
)

MZ = {"kind": "mach_zehnder", "setup": 1, "trials": 10, "seed": 0}


def test_defaults_filled():
    cfg = from_dict(MZ)
    assert cfg.arm_phase == 0.0 and cfg.choice_step is None
    beams = from_dict({"kind": "independent_beams", "angle": 1e-3, "wavelength": 633e-9,
                       "photons_per_trial": 200, "n_trial_groups": 100, "seed": 1})
    assert beams.trials == 20_000
    assert beams.phase_sampling == "stratified"


@pytest.mark.parametrize("data,path", [
    ({**MZ, "setup": 3}, "setup"),
    ({**MZ, "bogus": 1}, "bogus"),
    ({**MZ, "seed": -1}, "seed"),
    ({**MZ, "seed": 2**64}, "seed"),
    ({k: v for k, v in MZ.items() if k != "setup"}, "setup"),
    ({**MZ, "kind": "laser_show"}, "kind"),
    ({"kind": "quantum_eraser", "basis": "diagonal", "trials": 1, "seed": 0}, "basis"),
    ({"kind": "independent_beams", "angle": 0.5, "wavelength": 1e-6, "photons_per_trial": 1,
      "n_trial_groups": 1, "seed": 0}, "angle"),
])
def test_schema_errors_name_the_field(data, path):
    with pytest.raises(SchemaError) as info:
        from_dict(data)
    assert path in info.value.path


@pytest.mark.parametrize("text", [b"\xff\xfe", "{not json", "[1, 2]"])
def test_parse_errors(text):
    with pytest.raises((ParseError, SchemaError)):
        parse_scenario(text)


def test_roundtrip_and_hashable():
    cfg = reference_double_slit()
    again = parse_scenario(serialize_scenario(cfg))
    assert again == cfg
    assert hash(again) == hash(cfg)
    assert isinstance(cfg, ScenarioConfig)


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6),
       st.floats(-10, 10, allow_nan=False))
def test_mz_roundtrip_property(seed, trials, phase):
    cfg = from_dict({**MZ, "seed": seed, "trials": trials, "arm_phase": phase})
    assert from_dict(json.loads(serialize_scenario(cfg))) == cfg


def test_with_run_overrides():
    cfg = from_dict(MZ).with_run(trials=99, seed=5)
    assert (cfg.trials, cfg.seed) == (99, 5)


def test_eraser_phases_default_to_arm_phase():
    cfg = from_dict({"kind": "quantum_eraser", "basis": "circular", "trials": 3, "seed": 0,
                     "arm_phase": 0.5})
    assert cfg.phases == (0.5,)
    cfg = from_dict({"kind": "quantum_eraser", "basis": "circular", "trials": 3, "seed": 0,
                     "phase_sweep": [0, math.pi]})
    assert cfg.phases == (0.0, math.pi)
