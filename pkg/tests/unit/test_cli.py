import dataclasses
import json

import pandas
import pytest

from bayes_reinsurance import cli
from bayes_reinsurance.config import load_config
from bayes_reinsurance.errors import InvalidConfig


def test_sweep_w_golden_values(config_path, tmp_path):
    code = cli.main(
        [
            "sweep",
            "--config",
            config_path("config-threshold-sweep.json"),
            "--out",
            str(tmp_path),
            "--assert-golden",
        ]
    )

    assert code == cli.EXIT_OK
    frame = pandas.read_csv(tmp_path / "sweep.csv")
    assert list(frame.columns) == cli.SWEEP_COLUMNS
    assert frame["L"].tolist() == [0.001, 1.0, 10.0, 50.0, 100.0, 1e3, 1e6]
    assert frame["regime"].iloc[0] == "clamped_at_one"


def test_run_threshold_sweep_checks(config_path, tmp_path):
    config = load_config(config_path("config-threshold-sweep.json"))

    result = cli.run_threshold_sweep(config, tmp_path, assert_golden=False)

    assert result.passed
    assert result.zero_crossing == pytest.approx(64.35, abs=0.5)
    enabled = {check.name for check in result.checks if check.enabled}
    assert enabled == {"foc_residuals", "below_independent_investment"}
    names = [check.name for check in result.checks]
    assert "nondecreasing_in_L" in names
    assert "zero_crossing" in names


def test_sweep_plot_is_written(config_path, tmp_path):
    pytest.importorskip("matplotlib")
    config = load_config(config_path("config-threshold-sweep.json"))

    cli.run_threshold_sweep(config, tmp_path)

    assert (tmp_path / "sweep.png").stat().st_size > 0


def test_sweep_frame_keeps_input_order(reference_params, reference_family):
    thresholds = [100.0, 1.0, 10.0]

    serial = cli.sweep_frame(reference_params, reference_family, thresholds)
    threaded = cli.sweep_frame(
        reference_params, reference_family, thresholds, workers=3
    )

    assert serial["L"].tolist() == thresholds
    pandas.testing.assert_frame_equal(serial, threaded)


def test_sweep_w_mixture_config_should_fail(config_path, tmp_path):
    config = load_config(config_path("config-two-exponentials.json"))

    with pytest.raises(InvalidConfig, match="exactly one claim family"):
        cli.run_threshold_sweep(config, tmp_path)


@pytest.mark.parametrize(
    "file",
    [
        "config-invalid-syntax.json",
        "config-invalid-loadings.json",
        "config-two-exponentials.json",
    ],
)
def test_sweep_w_bad_config_exits_w_error(config_path, tmp_path, file):
    code = cli.main(
        ["sweep", "--config", config_path(file), "--out", str(tmp_path)]
    )

    assert code == cli.EXIT_ERROR


def test_main_wo_config_should_fail():
    with pytest.raises(SystemExit):
        cli.main(["sweep"])


def test_bayes_report(config_path, tmp_path):
    config = load_config(config_path("config-two-exponentials.json"))

    report = cli.run_bayes_report(config, tmp_path)

    frame = pandas.read_csv(tmp_path / "bayes_report.csv")
    assert len(frame) == 3 * 3
    for column in cli.STATUS_COLUMNS:
        assert column in frame.columns
        assert set(frame[column]) <= {"pass", "fail", "gated", "n/a"}
    corners = frame[(frame["p_1"] == 0.0) | (frame["p_1"] == 1.0)]
    assert set(corners["corner_status"]) == {"pass"}
    assert set(frame["independent_status"]) == {"pass"}
    assert [check.name for check in report.checks] == cli.STATUS_COLUMNS + [
        "value_grid_g"
    ]
    assert not report.checks[-1].enabled
    assert (tmp_path / "value_grid.csv").exists()


def test_bayes_report_w_seed_override(config_path, tmp_path):
    config = load_config(config_path("config-two-exponentials.json"))
    config = dataclasses.replace(
        config,
        solver=dataclasses.replace(config.solver, scheme="exponential"),
    )

    first = cli.run_bayes_report(config, tmp_path, seed=3).checks[-1]
    again = cli.run_bayes_report(config, tmp_path, seed=3).checks[-1]
    other = cli.run_bayes_report(config, tmp_path, seed=4).checks[-1]

    assert first.name == "value_grid_g"
    assert first.enabled
    assert first.statistic == again.statistic
    assert first.statistic != other.statistic


def test_bayes_command(config_path, tmp_path):
    code = cli.main(
        [
            "bayes",
            "--config",
            config_path("config-two-exponentials.json"),
            "--out",
            str(tmp_path),
            "--workers",
            "2",
            "--seed",
            "3",
        ]
    )

    assert code in (cli.EXIT_OK, cli.EXIT_ASSERTION)
    assert (tmp_path / "bayes_report.csv").exists()


def test_validate_command(config_path, tmp_path):
    code = cli.main(
        [
            "validate",
            "--config",
            config_path("config-threshold-sweep.json"),
            "--out",
            str(tmp_path),
            "--seed",
            "5",
            "--dump-paths",
            "2",
        ]
    )

    assert code in (cli.EXIT_OK, cli.EXIT_ASSERTION)
    with open(tmp_path / "mc_report.json") as f:
        report = json.load(f)
    assert report["seed"] == 5
    checks = {check["name"]: check for check in report["checks"]}
    assert checks["deterministic_wealth"]["passed"]
    assert {
        "compound_poisson_utility",
        "mixture_identity",
        "dominates_xi_x0.8",
        "dominates_xi_x1.2",
        "dominates_b_-0.1",
        "dominates_b_+0.1",
        "dominates_independent",
    } <= set(checks)
    independent = report["details"]["independent"]
    assert independent["independent_xi"] == pytest.approx(37.5)
    paths = pandas.read_csv(tmp_path / "paths.csv")
    assert sorted(paths["path"].unique()) == [0, 1]


def test_check_statuses():
    check = cli.Check("x", 2.0, 1.0, False, enabled=False)

    assert not check.failed
    assert cli.Check("x", 2.0, 1.0, False).failed
    assert check.as_record()["enabled"] is False
