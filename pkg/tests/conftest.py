import math
from pathlib import Path

import pytest

import corralwalk as cw

PLANS = Path(__file__).resolve().parents[1] / "plans"

REFERENCE_SPIN = cw.BlochSpin(math.pi / 4, math.pi / 2)        # (|up> + i|down>)/sqrt(2)
SWEEP_SPIN = cw.BlochSpin(math.pi / 4, 3 * math.pi / 2)        # (|up> - i|down>)/sqrt(2)


@pytest.fixture(scope="session")
def corral_ref() -> cw.CompiledProtocol:
    plan = cw.CorralPlan(cw.GaussianSpec(10.0, 0), REFERENCE_SPIN,
                         (cw.Station(-101, 101),))
    return cw.compile_plan(plan)


@pytest.fixture(scope="session")
def single_shot_ref() -> cw.CompiledProtocol:
    plan = cw.CorralPlan(cw.GaussianSpec(10.0, 0), REFERENCE_SPIN,
                         (cw.Station(-50, 50), cw.Station(50, 250)))
    return cw.single_shot_plan(plan)


@pytest.fixture(scope="session")
def multistation_ref() -> cw.CompiledProtocol:
    plan = cw.CorralPlan(cw.GaussianSpec(10.0, 0), REFERENCE_SPIN,
                         (cw.Station(-50, 50), cw.Station(50, 150),
                          cw.Station(150, 250, hold=1)))
    return cw.multistation_plan(plan)


@pytest.fixture(scope="session")
def plans_dir() -> Path:
    return PLANS
