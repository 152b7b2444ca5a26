import os.path

import pytest

from bayes_reinsurance.config import parse_config
from tests.utils import load_json


@pytest.fixture(scope="session")
def base_dir():
    abspath_for_this_script = os.path.abspath(__file__)
    return os.path.dirname(abspath_for_this_script)


@pytest.fixture(scope="session")
def config(base_dir):
    return load_json(base_dir, "conftest.json")


def _families(rates):
    return [{"kind": "exponential", "rate": rate} for rate in rates]


@pytest.fixture(scope="session")
def sweep_config(config):
    sweep = config["Sweep"]
    golden_crossing = sweep["ZeroCrossing"]
    document = {
        "model": config["Model"],
        "claims": {"families": _families([0.1])},
        "sweep": {
            "thresholds": sweep["Thresholds"],
            "include": [point["threshold"] for point in sweep["Golden"]],
            "zero_crossing": {"lower": 10.0, "upper": 100.0},
            "golden": {
                "points": sweep["Golden"],
                "zero_crossing": golden_crossing,
            },
        },
        "simulation": config["Simulation"],
    }
    return parse_config(document)


@pytest.fixture(scope="session")
def bayes_config(config):
    bayes = config["Bayes"]
    document = {
        "model": config["Model"],
        "claims": {
            "families": _families(bayes["Rates"]),
            "stochastically_ordered": True,
        },
        "prior": {"probabilities": bayes["Prior"]},
        "solver": bayes["Solver"],
        "simulation": config["Simulation"],
    }
    return parse_config(document)
