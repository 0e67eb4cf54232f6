import pathlib

import pytest

from btq import Engine, load_scenario, parse_file

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture()
def lab_model():
    return parse_file(str(FIXTURES / "lab_mission.btq"))


def scenario_path(name: str) -> pathlib.Path:
    return FIXTURES / "scenarios" / f"{name}.scn.json"


def run_lab_scenario(model, name: str):
    """Run the lab mission against a committed scenario; returns (engine, trace)."""
    scenario = load_scenario(scenario_path(name).read_text(), model)
    engine = Engine(model, scenario)
    return engine, engine.run()
