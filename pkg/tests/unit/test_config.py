import copy
import math

import pytest

from bayes_reinsurance import config as run_config
from bayes_reinsurance.distributions import Exponential, TabulatedDensity
from bayes_reinsurance.errors import InvalidConfig
from bayes_reinsurance.filter import PriorSpec

from .utils import load_data


@pytest.fixture()
def sweep_document():
    return load_data("config-threshold-sweep.json")


def test_load_config_threshold_sweep(config_path):
    config = run_config.load_config(config_path("config-threshold-sweep.json"))

    params = config.params
    assert params.kappa == pytest.approx(250.0)
    assert params.eta == 0.2
    assert params.theta == 0.4
    assert params.x0 == 100.0
    assert params.alpha == 0.05
    assert config.family == Exponential(0.1)
    assert config.prior == PriorSpec([1.0])
    assert config.sweep.thresholds[0] == 0.001
    assert config.sweep.thresholds[-1] == 1e6
    assert config.sweep.zero_crossing == (10.0, 100.0)
    assert config.sweep.golden_crossing == (64.35, 0.5)
    assert config.sweep.golden_points[2].b == 0.93
    assert config.simulation.seed == 20240101
    assert config.output_dir == config.path.resolve().parent / "out"


def test_load_config_two_exponentials(config_path):
    config = run_config.load_config(
        config_path("config-two-exponentials.json")
    )

    assert config.mixture.m == 2
    assert config.mixture.stochastically_ordered
    # insurer loading defaults to half the reinsurer loading
    assert config.params.eta == pytest.approx(0.2)
    assert config.solver.time_steps == 20
    assert config.solver.simplex_divisions == 4
    assert config.report_grid == 3
    with pytest.raises(InvalidConfig, match="exactly one claim family"):
        config.family


def test_load_config_resolves_tabulated_files(config_path):
    config = run_config.load_config(config_path("config-tabulated.json"))

    assert isinstance(config.family, TabulatedDensity)
    assert math.isinf(config.params.threshold)
    assert config.params.eta == pytest.approx(0.15)
    assert config.params.jump_law.mgf(0.0, 1) == pytest.approx(1.0 / 3.0)


@pytest.mark.parametrize(
    "file, lineno, match",
    [
        ("config-invalid-syntax.json", 4, "delimiter"),
        ("config-invalid-loadings.json", 11, "must exceed insurer loading"),
        ("config-invalid-rate.json", 18, "claims/families/1/rate"),
        ("config-invalid-prior.json", 20, "3 entries but 2 claim families"),
        ("config-invalid-admissible.json", 8, "moment generating bound"),
    ],
)
def test_load_config_w_invalid_file_should_fail(
    config_path, file, lineno, match
):
    with pytest.raises(InvalidConfig, match=match) as excinfo:
        run_config.load_config(config_path(file))

    assert excinfo.value.lineno == lineno
    assert "{}:{}:".format(config_path(file), lineno) in str(excinfo.value)


def test_load_config_w_missing_file_should_fail(tmp_path):
    with pytest.raises(InvalidConfig, match="cannot read config"):
        run_config.load_config(tmp_path / "missing.json")


def test_parse_config_w_unknown_key_should_fail(sweep_document):
    sweep_document["plot"] = True

    with pytest.raises(InvalidConfig, match="<root>"):
        run_config.parse_config(sweep_document)


def test_parse_config_w_both_premium_keys_should_fail(sweep_document):
    sweep_document["model"]["kappa"] = 250.0

    with pytest.raises(InvalidConfig, match="model"):
        run_config.parse_config(sweep_document)


def test_parse_config_threshold_range(sweep_document):
    sweep_document["sweep"]["thresholds"] = {
        "start": 0.001,
        "stop": 1e6,
        "num": 10,
    }
    sweep_document["sweep"]["include"] = [64.0, 65.0]

    config = run_config.parse_config(sweep_document)

    thresholds = config.sweep.thresholds
    assert len(thresholds) == 12
    assert list(thresholds) == sorted(thresholds)
    assert 64.0 in thresholds
    assert thresholds[0] == pytest.approx(0.001)


def test_parse_config_w_reversed_crossing_bracket_should_fail(
    sweep_document,
):
    sweep_document["sweep"]["zero_crossing"] = {
        "lower": 100.0,
        "upper": 10.0,
    }

    with pytest.raises(InvalidConfig, match="lower < upper"):
        run_config.parse_config(sweep_document)


def test_parse_config_w_odd_antithetic_paths_should_fail(sweep_document):
    document = copy.deepcopy(sweep_document)
    document["simulation"].update(antithetic=True, n_paths=2001)

    with pytest.raises(InvalidConfig, match="antithetic"):
        run_config.parse_config(document)


def test_parse_config_defaults(sweep_document):
    for key in ("sweep", "simulation", "output_dir", "jump_law"):
        sweep_document.pop(key)

    config = run_config.parse_config(sweep_document)

    assert config.path is None
    assert config.sweep.thresholds == ()
    assert config.simulation == run_config.SimulationConfig()
    assert config.solver.time_steps == 200
    assert config.report_grid == 9
    assert str(config.output_dir) == "out"
