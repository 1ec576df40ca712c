import math

import pytest

from era_beam import scenario_io
from era_beam.em_response import FarTarget, NearTarget
from era_beam.geometry import rayleigh_distance
from era_beam.scenario_io import ScenarioError, loads

GOOD = """\
title = "tiny"

[array]
nx = 2
ny = 2
spacing_wavelengths = 0.5
frequency_hz = 30e9

[model]
regime = "far"
L = 2

[solver]
seed = 3
outer_max = 10

[[samples]]
type = "focal"
desired = 4.0
theta_deg = 30
phi_deg = 45

[[samples]]
type = "null"
weight = 2.5
theta_deg = 60.0
phi_deg = -90.0
"""


def test_loads_good_file():
    sf = loads(GOOD)
    scn = sf.to_scenario()
    assert scn.n_elements == 4 and scn.T == 9
    assert scn.geometry.wavelength == pytest.approx(299792458.0 / 30e9)
    assert scn.samples[0].target == FarTarget(math.radians(30), math.radians(45))
    assert scn.samples[1].desired == 0.0 and scn.samples[1].weight == 2.5
    assert scn.power == pytest.approx(4 * math.pi)
    cfg = sf.to_config()
    assert cfg.seed == 3 and cfg.outer_max == 10 and cfg.positivity_mode == "off"
    assert sf.to_config(seed=9, solver=None).seed == 9


def test_round_trip_is_stable():
    sf = loads(GOOD)
    again = loads(scenario_io.dumps(sf))
    assert again == sf
    assert again.digest() == sf.digest()
    assert scenario_io.dumps(again) == scenario_io.dumps(sf)


@pytest.mark.parametrize(
    "old, new, line",
    [
        ("nx = 2\n", "nx = 2\ncolour = 1\n", 5),
        ("L = 2\n", "L = \"two\"\n", 11),
        ("outer_max = 10\n", "outer_max = 10\nmomentum = 0.9\n", 16),
        ("phi_deg = -90.0\n", "phi_deg = -90.0\nx = 1.0\n", 23),
        ("theta_deg = 30\n", "theta_deg = 300\n", 17),
        ("regime = \"far\"", "regime = \"mid\"", 10),
        ("[solver]", "[solver\n", 13),
    ],
)
def test_errors_carry_line_numbers(old, new, line):
    with pytest.raises(ScenarioError) as err:
        loads(GOOD.replace(old, new, 1))
    assert err.value.line == line
    assert str(err.value).startswith(f"line {line}:")


def test_structural_errors():
    with pytest.raises(ScenarioError, match="unknown top-level"):
        loads(GOOD + "\n[extras]\na = 1\n")
    with pytest.raises(ScenarioError, match="at least one"):
        loads(GOOD.split("[[samples]]")[0])
    with pytest.raises(ScenarioError, match="desired"):
        loads(GOOD.replace("desired = 4.0\n", ""))
    with pytest.raises(ScenarioError):
        loads(GOOD.replace("weight = 2.5", "weight = -1.0"))
    with pytest.raises(ScenarioError):
        loads(GOOD.replace("seed = 3", "solver = \"lbfgs\""))


def test_near_regime_requires_coordinates():
    near = GOOD.replace("regime = \"far\"", "regime = \"near\"")
    with pytest.raises(ScenarioError, match="x, y, z"):
        loads(near)


def test_bundled_scenarios():
    far = scenario_io.load_bundled("far")
    scn = far.to_scenario()
    assert scn.regime == "far" and scn.n_elements == 16 and scn.T == 25
    assert all(isinstance(s.target, FarTarget) for s in scn.samples)
    assert {s.kind for s in scn.samples} == {"focal", "null"}

    near = scenario_io.load_bundled("near")
    scn = near.to_scenario()
    assert scn.geometry.nx == 1 and scn.geometry.ny == 64
    assert all(isinstance(s.target, NearTarget) for s in scn.samples)
    r = rayleigh_distance(scn.geometry)
    assert all(math.dist(s.target.position, (0, 0, 0)) < r for s in scn.samples)
    with pytest.raises(KeyError):
        scenario_io.bundled_path("mid")
