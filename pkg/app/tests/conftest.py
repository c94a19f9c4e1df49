"""Shared fixtures: a desk-scale ill-prepared sweep on the 1-torus."""

import copy
import math
from pathlib import Path

import pytest

from app.harness.config import scenario_from_mapping
from app.models.scenario import Scenario

TINY_CONFIG = {
    "grid": {"dim": 1, "n_per_dim": 16},
    "constants": {"gamma": 1.4},
    "scenario": {
        "name": "tiny",
        "preparation": "ill",
        "xi0": [{"k": [1], "amplitude": 0.05}],
        "phi0": [{"k": [1], "amplitude": 0.02, "phase": math.pi / 2}],
        "offset": [{"k": [1], "amplitude": 0.05, "component": 0}],
    },
    "sweep": {
        "tau_list": [0.5, 0.25],
        "t_end": 1.0 / 32.0,
        "sample_dt": 1.0 / 128.0,
        "t_layer": 0.0,
    },
}

TINY_TOML = """\
[grid]
dim = 1
n_per_dim = 16

[constants]
gamma = 1.4

[scenario]
name = "tiny"
preparation = "ill"

[[scenario.xi0]]
k = [1]
amplitude = 0.05

[[scenario.phi0]]
k = [1]
amplitude = 0.02
phase = 1.5707963267948966

[[scenario.offset]]
k = [1]
amplitude = 0.05
component = 0

[sweep]
tau_list = [0.5, 0.25]
t_end = 0.03125
sample_dt = 0.0078125
t_layer = 0.0
"""


@pytest.fixture
def tiny_config() -> dict:
    return copy.deepcopy(TINY_CONFIG)


@pytest.fixture
def tiny_scenario() -> Scenario:
    return scenario_from_mapping(copy.deepcopy(TINY_CONFIG))


@pytest.fixture
def tiny_toml(tmp_path: Path) -> Path:
    path = tmp_path / "tiny.toml"
    path.write_text(TINY_TOML, encoding="utf-8")
    return path
