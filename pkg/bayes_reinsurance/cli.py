"""Command line runners: the threshold sweep, the learning report and
the Monte Carlo validation."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import pathlib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy
import pandas

from . import errors
from .config import load_config
from .filter import FilterState
from .foc_full import RESIDUAL_TOL, find_zero_crossing, solve_foc_full
from .hjb_bayes import (
    apriori_bounds,
    mean_model_upper_bound,
    solve_foc_bayes,
    value_iteration,
)
from .market import discount_factor, independent_investment
from .simulator import (
    ConstantStrategy,
    DeterministicStrategy,
    PerturbedStrategy,
    compare_strategies,
    constant_strategy_g,
    dump_paths,
    estimate_g,
    estimate_utility,
)
from .utils import simplex_lattice

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_ERROR = 2

SWEEP_COLUMNS = [
    "L",
    "xi_star",
    "b_star",
    "regime",
    "A_F",
    "B_F",
    "residual_v1",
    "residual_v2",
]
FLOAT_FORMAT = "%.12g"
INDEPENDENT_BOUND_TOL = 1e-6
MONOTONE_TOL = 1e-8
DETERMINISTIC_TOL = 1e-9
STANDARD_ERRORS = 3.0
XI_FACTORS = (0.8, 1.2)
B_SHIFTS = (-0.1, 0.1)
DETERMINISTIC_PATHS = 1000
# relative gap allowed between simulated and tabulated g
GRID_G_TOL = 0.05

PASS, FAIL, GATED, NOT_APPLICABLE = "pass", "fail", "gated", "n/a"


@dataclass(frozen=True)
class Check(object):
    """One asserted property with its statistic and acceptance threshold.

    Disabled checks are reported but never fail a run.
    """

    name: str
    statistic: float
    threshold: float
    passed: bool
    enabled: bool = True

    @property
    def failed(self):
        return self.enabled and not self.passed

    def as_record(self):
        return {
            "name": self.name,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "passed": bool(self.passed),
            "enabled": bool(self.enabled),
        }


@dataclass
class SweepResult(object):
    frame: pandas.DataFrame
    zero_crossing: Optional[float] = None
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self):
        return not any(check.failed for check in self.checks)


@dataclass
class BayesReport(object):
    frame: pandas.DataFrame
    grid: object
    checks: List[Check] = field(default_factory=list)

    @property
    def passed(self):
        return not any(check.failed for check in self.checks)


@dataclass
class McReport(object):
    checks: List[Check]
    record: dict

    @property
    def passed(self):
        return not any(check.failed for check in self.checks)


def _output_dir(config, out_dir):
    path = pathlib.Path(out_dir) if out_dir is not None else config.output_dir
    path.mkdir(parents=True, exist_ok=True)
    return path


def _solve_threshold(params, family, t, threshold):
    try:
        solution = solve_foc_full(
            params.replace(threshold=threshold), family, t
        )
    except (
        errors.NoConvergence,
        errors.InvestmentCapReached,
        errors.DivergentIntegral,
    ) as err:
        raise type(err)("threshold L={}: {}".format(threshold, err)) from err
    record = solution.as_record()
    record.pop("t")
    record["L"] = threshold
    return record


def sweep_frame(params, family, thresholds, t=0.0, workers=1):
    """Complete-information strategy for every threshold, one row per
    threshold in input order."""

    thresholds = list(thresholds)
    total = len(thresholds)

    def solve(threshold):
        return _solve_threshold(params, family, t, threshold)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = pool.map(solve, thresholds)
            rows = []
            for done, row in enumerate(results, start=1):
                rows.append(row)
                if done % 50 == 0 or done == total:
                    logger.info(
                        "{} out of {} thresholds solved.".format(done, total)
                    )
    else:
        rows = []
        for done, threshold in enumerate(thresholds, start=1):
            rows.append(solve(threshold))
            if done % 50 == 0 or done == total:
                logger.info(
                    "{} out of {} thresholds solved.".format(done, total)
                )
    return pandas.DataFrame(rows, columns=SWEEP_COLUMNS)


def _crossing_bracket(frame):
    xi = frame["xi_star"].to_numpy()
    signs = numpy.flatnonzero(numpy.sign(xi[:-1]) * numpy.sign(xi[1:]) < 0)
    if signs.size == 0:
        return None
    i = int(signs[0])
    return float(frame["L"].iloc[i]), float(frame["L"].iloc[i + 1])


def _plot_sweep(frame, path, independent=None, crossing=None):
    try:
        import matplotlib
    except ImportError:
        logger.warning(
            "matplotlib is not installed; skipping {}".format(path)
        )
        return None
    matplotlib.use("Agg")
    from matplotlib import pyplot

    fig, (top, bottom) = pyplot.subplots(2, 1, sharex=True, figsize=(7, 6))
    top.plot(frame["L"], frame["xi_star"], color="tab:blue")
    if independent is not None:
        top.axhline(independent, color="grey", linestyle="--", linewidth=1)
    if crossing is not None:
        top.axvline(crossing, color="tab:red", linestyle=":", linewidth=1)
    top.axhline(0.0, color="black", linewidth=0.5)
    top.set_ylabel("investment")
    bottom.plot(frame["L"], frame["b_star"], color="tab:green")
    bottom.set_ylim(-0.05, 1.05)
    bottom.set_ylabel("retention")
    bottom.set_xscale("log")
    bottom.set_xlabel("threshold L")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    pyplot.close(fig)
    return path


def _golden_checks(config, params, family, t, crossing, enabled):
    checks = []
    for point in config.sweep.golden_points:
        solution = solve_foc_full(
            params.replace(threshold=point.threshold), family, t
        )
        deviation = abs(solution.xi_star - point.xi)
        checks.append(
            Check(
                "xi_at_L={:g}".format(point.threshold),
                deviation,
                point.xi_tol,
                deviation <= point.xi_tol,
                enabled,
            )
        )
        if point.b is not None:
            b_tol = 0.01 if point.b_tol is None else point.b_tol
            deviation = abs(solution.b_star - point.b)
            checks.append(
                Check(
                    "b_at_L={:g}".format(point.threshold),
                    deviation,
                    b_tol,
                    deviation <= b_tol,
                    enabled,
                )
            )
    if config.sweep.golden_crossing is not None:
        value, tol = config.sweep.golden_crossing
        deviation = math.inf if crossing is None else abs(crossing - value)
        checks.append(
            Check("zero_crossing", deviation, tol, deviation <= tol, enabled)
        )
    return checks


def run_threshold_sweep(config, out_dir=None, assert_golden=False, workers=1):
    """Solve the complete-information strategy over the configured
    thresholds and write ``sweep.csv`` and ``sweep.png``.

    Parameters
    ----------
    config : RunConfig
        Needs exactly one claim family.
    out_dir : path-like, optional
        Overrides ``config.output_dir``.
    assert_golden : bool, default False
        Enables the golden checks of the ``sweep.golden`` block and the
        monotonicity of the investment in the threshold.
    workers : int, default 1
        Threads over thresholds; rows keep the input order.

    Returns
    -------
    SweepResult
    """

    family = config.family
    params = config.params
    t = config.sweep.time
    thresholds = config.sweep.thresholds
    if not thresholds:
        raise errors.InvalidConfig(
            "the sweep needs at least one threshold", path=config.path
        )
    out = _output_dir(config, out_dir)
    frame = sweep_frame(params, family, thresholds, t, workers)

    bracket = config.sweep.zero_crossing or _crossing_bracket(frame)
    crossing = None
    if bracket is not None:
        crossing = find_zero_crossing(params, family, t, *bracket)
        logger.info("Investment changes sign at L={:.6g}".format(crossing))

    xi_tilde = independent_investment(params, t)
    excess = float((frame["xi_star"] - xi_tilde).max())
    interior = frame["regime"] == "interior"
    residual = float(
        max(
            frame["residual_v1"].abs().max(),
            frame.loc[interior, "residual_v2"].abs().max()
            if interior.any()
            else 0.0,
        )
    )
    steps = numpy.diff(frame["xi_star"].to_numpy())
    checks = [
        Check(
            "foc_residuals",
            residual,
            RESIDUAL_TOL,
            residual < RESIDUAL_TOL,
        ),
        Check(
            "below_independent_investment",
            excess,
            INDEPENDENT_BOUND_TOL,
            excess <= INDEPENDENT_BOUND_TOL,
        ),
        Check(
            "nondecreasing_in_L",
            float(-steps.min()) if steps.size else 0.0,
            MONOTONE_TOL,
            bool(steps.size == 0 or steps.min() >= -MONOTONE_TOL),
            assert_golden,
        ),
    ]
    checks.extend(
        _golden_checks(config, params, family, t, crossing, assert_golden)
    )

    frame.to_csv(out / "sweep.csv", index=False, float_format=FLOAT_FORMAT)
    _plot_sweep(frame, out / "sweep.png", xi_tilde, crossing)
    for check in checks:
        if check.failed:
            logger.error(
                "Check {} failed: {} exceeds {}".format(
                    check.name, check.statistic, check.threshold
                )
            )
    return SweepResult(frame=frame, zero_crossing=crossing, checks=checks)


def _report_points(m, n):
    if m == 1:
        return numpy.ones((1, 1))
    if m == 2:
        p = numpy.linspace(0.0, 1.0, n)
        return numpy.column_stack([p, 1.0 - p])
    return simplex_lattice(m, n - 1)


def _slack(tol, reference):
    return 2.0 * tol * max(1.0, abs(reference))


def _status(premise, ok):
    if not premise:
        return GATED
    return PASS if ok else FAIL


def _report_row(grid, config, t, probs, full_cache):
    params, mixture = config.params, config.mixture
    tol = grid.spec.tolerance
    b_tol = 2.0 * tol
    bayes = solve_foc_bayes(grid, params, mixture, t, probs)
    xi, b = bayes.xi_star, bayes.b_star
    row = {"t": t}
    for k, value in enumerate(probs, start=1):
        row["p_{}".format(k)] = float(value)
    row.update(
        xi=xi, b=b, regime=str(bayes.regime), A=bayes.A_F, B=bayes.B_F
    )

    def full(k):
        if k not in full_cache:
            full_cache[k] = solve_foc_full(params, mixture[k], t)
        return full_cache[k]

    corner = numpy.flatnonzero(probs > 0)
    if corner.size == 1:
        exact = full(int(corner[0]))
        ok = abs(xi - exact.xi_star) <= _slack(tol, exact.xi_star) and abs(
            b - exact.b_star
        ) <= _slack(tol, 1.0)
        row["corner_status"] = PASS if ok else FAIL
    else:
        row["corner_status"] = NOT_APPLICABLE

    if mixture.stochastically_ordered:
        bounds = apriori_bounds(params, mixture, t, b=b)
        first, last = full(0), full(mixture.m - 1)
        row["apriori_lower"] = bounds.r1_max
        row["apriori_upper"] = bounds.r1_min
        row["apriori_lower_status"] = _status(
            abs(first.b_star - b) <= b_tol,
            xi >= bounds.r1_max - _slack(tol, bounds.r1_max),
        )
        row["apriori_upper_status"] = _status(
            abs(last.b_star - b) <= b_tol,
            xi <= bounds.r1_min + _slack(tol, bounds.r1_min),
        )
    else:
        row["apriori_lower"] = row["apriori_upper"] = math.nan
        row["apriori_lower_status"] = NOT_APPLICABLE
        row["apriori_upper_status"] = NOT_APPLICABLE

    mean = mean_model_upper_bound(grid, params, mixture, t, probs, b_tol)
    row["mean_xi"] = mean.xi_bound
    row["mean_b"] = mean.b_bound
    row["mean_status"] = _status(
        mean.premise,
        mean.bayes_xi <= mean.xi_bound + _slack(tol, mean.xi_bound),
    )

    xi_tilde = independent_investment(params, t)
    row["independent_xi"] = xi_tilde
    row["independent_status"] = (
        PASS if xi <= xi_tilde + _slack(tol, xi_tilde) else FAIL
    )
    return row


STATUS_COLUMNS = [
    "corner_status",
    "apriori_lower_status",
    "apriori_upper_status",
    "mean_status",
    "independent_status",
]


def run_bayes_report(config, out_dir=None, workers=None, seed=None):
    """Solve the learning problem on the configured grid and tabulate the
    bound checks over a ``report_grid x report_grid`` set of ``(t, p)``
    points.

    The grid is also checked against a Monte Carlo estimate of ``g(0,
    p_0)`` under the solved strategy, seeded by ``seed`` or the
    configured simulation seed. The explicit Euler scheme carries an
    O(dt) bias, so that check only gates runs on the exponential scheme.

    Writes ``bayes_report.csv`` and ``value_grid.csv``. A row status is
    ``gated`` when the premise of its bound does not hold at that point;
    only ``fail`` entries fail the run.
    """

    spec = config.solver
    if workers is not None:
        spec = dataclasses.replace(spec, workers=workers)
    out = _output_dir(config, out_dir)
    grid = value_iteration(config.params, config.mixture, spec)
    grid.to_csv(out / "value_grid.csv")
    diagnostics = grid.diagnostics()
    logger.info(
        "Value grid solved: g in [{:.6g}, {:.6g}], log K1={:.6g}".format(
            diagnostics["g_min"], diagnostics["g_max"], diagnostics["log_k1"]
        )
    )

    n = config.report_grid
    times = numpy.linspace(0.0, config.params.horizon, n)
    points = _report_points(config.mixture.m, n)
    rows = []
    for i, t in enumerate(times, start=1):
        full_cache = {}
        for probs in points:
            rows.append(_report_row(grid, config, float(t), probs, full_cache))
        logger.info("{} out of {} report times done.".format(i, n))
    frame = pandas.DataFrame(rows)
    frame.to_csv(
        out / "bayes_report.csv", index=False, float_format=FLOAT_FORMAT
    )

    checks = []
    for column in STATUS_COLUMNS:
        failures = int((frame[column] == FAIL).sum())
        gated = int((frame[column] == GATED).sum())
        if gated:
            logger.warning(
                "{} out of {} rows of {} gated by their premise.".format(
                    gated, len(frame), column
                )
            )
        checks.append(Check(column, failures, 0, failures == 0))

    sim = config.simulation
    if seed is not None:
        sim = dataclasses.replace(sim, seed=seed)
    checks.append(_value_grid_check(grid, config, sim))
    return BayesReport(frame=frame, grid=grid, checks=checks)


def _value_grid_check(grid, config, sim):
    probs = config.prior.probs
    tabulated = grid.g(0.0, probs)
    estimate = estimate_g(
        config.params,
        config.mixture,
        grid.strategy(),
        0.0,
        probs,
        sim.n_paths,
        sim.seed,
        antithetic=sim.antithetic,
        batch_size=sim.batch_size,
        steps_per_year=sim.steps_per_year,
        workers=sim.workers,
    )
    deviation = abs(estimate.mean - tabulated)
    threshold = STANDARD_ERRORS * estimate.std_error + GRID_G_TOL * abs(
        tabulated
    )
    logger.info(
        "g(0, p0) on the grid {:.6g}, simulated {:.6g} +- {:.2g}".format(
            tabulated, estimate.mean, estimate.std_error
        )
    )
    return Check(
        "value_grid_g",
        deviation,
        threshold,
        deviation <= threshold,
        enabled=grid.spec.scheme == "exponential",
    )


def _seeds(seed, n):
    children = numpy.random.SeedSequence(seed).spawn(n)
    return [int(child.generate_state(1)[0]) for child in children]


def _check_alpha(params, mixture):
    """Risk aversion for the closed-form checks, small enough that
    ``exp(-alpha X_T)`` has finite variance."""

    tilt = min(family.max_tilt for family in mixture) / params.max_discount
    return min(params.alpha, tilt / 4.0)


def _deterministic_check(params, mixture, probs, sim, seed):
    strategy = ConstantStrategy(0.0, 0.0)
    rate = params.premium_rate - params.reinsurance_price
    growth = discount_factor(params, 0.0)
    if params.r == 0.0:
        terminal = params.x0 + rate * params.horizon
    else:
        terminal = params.x0 * growth + rate * math.expm1(
            params.r * params.horizon
        ) / params.r
    exact = -math.exp(-params.alpha * terminal)
    estimate = estimate_utility(
        params,
        mixture,
        strategy,
        min(sim.n_paths, DETERMINISTIC_PATHS),
        seed,
        prior=probs,
        batch_size=min(sim.batch_size, DETERMINISTIC_PATHS),
        steps_per_year=sim.steps_per_year,
    )
    statistic = max(abs(estimate.mean - exact), estimate.std_error)
    threshold = DETERMINISTIC_TOL * abs(exact)
    return (
        Check(
            "deterministic_wealth",
            statistic,
            threshold,
            statistic <= threshold,
        ),
        {"exact": exact, "estimate": estimate.as_record()},
    )


def _compound_poisson_check(params, mixture, probs, strategy, sim, seed):
    exact = -math.exp(
        -params.alpha * params.x0 * discount_factor(params, 0.0)
    ) * constant_strategy_g(
        params, mixture, 0.0, probs, strategy.xi, strategy.b
    )
    estimate = estimate_utility(
        params,
        mixture,
        strategy,
        sim.n_paths,
        seed,
        prior=probs,
        antithetic=sim.antithetic,
        batch_size=sim.batch_size,
        steps_per_year=sim.steps_per_year,
        workers=sim.workers,
    )
    deviation = abs(estimate.mean - exact)
    threshold = STANDARD_ERRORS * estimate.std_error
    return (
        Check(
            "compound_poisson_utility",
            deviation,
            threshold,
            deviation <= threshold,
        ),
        {"exact": exact, "estimate": estimate.as_record()},
    )


def _mixture_identity_check(params, mixture, probs, strategy, sim, seeds):
    def g_at(p, seed):
        return estimate_g(
            params,
            mixture,
            strategy,
            0.0,
            p,
            sim.n_paths,
            seed,
            antithetic=sim.antithetic,
            batch_size=sim.batch_size,
            steps_per_year=sim.steps_per_year,
            workers=sim.workers,
        )

    mixed = g_at(probs, seeds[0])
    corners = []
    for k in range(mixture.m):
        corner = numpy.zeros(mixture.m)
        corner[k] = 1.0
        corners.append(g_at(corner, seeds[k + 1]))
    combined = sum(p * c.mean for p, c in zip(probs, corners))
    variance = mixed.std_error ** 2 + sum(
        (p * c.std_error) ** 2 for p, c in zip(probs, corners)
    )
    deviation = abs(mixed.mean - combined)
    threshold = STANDARD_ERRORS * math.sqrt(variance)
    return (
        Check(
            "mixture_identity", deviation, threshold, deviation <= threshold
        ),
        {
            "mixed": mixed.as_record(),
            "corners": [c.as_record() for c in corners],
        },
    )


def _optimal_strategy(config, workers):
    if config.mixture.m == 1:
        return DeterministicStrategy.full_information(
            config.params, config.mixture[0]
        )
    spec = config.solver
    if workers is not None:
        spec = dataclasses.replace(spec, workers=workers)
    return value_iteration(config.params, config.mixture, spec).strategy()


def _dominance_checks(config, probs, optimal, sim, seed):
    perturbations = [
        ("xi_x{:g}".format(f), PerturbedStrategy(optimal, xi_factor=f))
        for f in XI_FACTORS
    ] + [
        ("b_{:+g}".format(s), PerturbedStrategy(optimal, b_shift=s))
        for s in B_SHIFTS
    ]
    checks, records = [], {}
    for name, strategy in perturbations:
        estimate = compare_strategies(
            config.params,
            config.mixture,
            probs,
            optimal,
            strategy,
            sim.n_paths,
            seed,
            batch_size=sim.batch_size,
            steps_per_year=sim.steps_per_year,
            workers=sim.workers,
        )
        threshold = -STANDARD_ERRORS * estimate.std_error
        checks.append(
            Check(
                "dominates_" + name,
                estimate.mean,
                threshold,
                estimate.mean >= threshold,
            )
        )
        records[name] = estimate.as_record()
    return checks, records


def _independent_check(config, probs, optimal, sim, seed):
    """Paired comparison of the optimal strategy with the one that treats
    stock and claims as independent, both run in the dependent model."""

    independent = DeterministicStrategy.independent_case(
        config.params, config.mixture, FilterState(probs)
    )
    estimate = compare_strategies(
        config.params,
        config.mixture,
        probs,
        optimal,
        independent,
        sim.n_paths,
        seed,
        batch_size=sim.batch_size,
        steps_per_year=sim.steps_per_year,
        workers=sim.workers,
    )
    threshold = -STANDARD_ERRORS * estimate.std_error
    record = estimate.as_record()
    record["independent_xi"] = float(independent.xi[0])
    record["independent_b"] = float(independent.b[0])
    return (
        Check(
            "dominates_independent",
            estimate.mean,
            threshold,
            estimate.mean >= threshold,
        ),
        record,
    )


def run_mc_validation(config, out_dir=None, seed=None, dump=0, workers=None):
    """Monte Carlo checks of the simulator against closed forms and of the
    solved strategy against perturbations; writes ``mc_report.json``.

    Checks
    ------
    deterministic_wealth
        Full reinsurance without investment gives deterministic wealth.
    compound_poisson_utility
        A constant strategy reproduces the closed-form expected utility
        within three standard errors.
    mixture_identity
        ``g(0, p) = sum_k p_k g(0, e_k)`` for a constant strategy.
    dominates_*
        The optimal strategy beats +-20% investment and +-0.1 retention
        perturbations under common random numbers.
    dominates_independent
        The optimal strategy beats the strategy that is optimal when the
        stock ignores claims, both run in the dependent model.
    """

    sim = config.simulation
    if seed is not None:
        sim = dataclasses.replace(sim, seed=seed)
    if workers is not None:
        sim = dataclasses.replace(sim, workers=workers)
    out = _output_dir(config, out_dir)
    params, mixture = config.params, config.mixture
    probs = config.prior.probs
    seeds = _seeds(sim.seed, 5 + mixture.m)

    check_params = params.replace(alpha=_check_alpha(params, mixture))
    if check_params.alpha < params.alpha:
        logger.info(
            "Closed-form checks use alpha={} for finite variance".format(
                check_params.alpha
            )
        )
    constant = solve_foc_full(check_params, mixture.collapse(probs), 0.0)
    strategy = ConstantStrategy(constant.xi_star, constant.b_star)

    checks, details = [], {}
    for name, (check, record) in (
        (
            "deterministic_wealth",
            _deterministic_check(params, mixture, probs, sim, seeds[0]),
        ),
        (
            "compound_poisson_utility",
            _compound_poisson_check(
                check_params, mixture, probs, strategy, sim, seeds[1]
            ),
        ),
        (
            "mixture_identity",
            _mixture_identity_check(
                check_params, mixture, probs, strategy, sim, seeds[3:]
            ),
        ),
    ):
        checks.append(check)
        details[name] = record

    optimal = _optimal_strategy(config, workers)
    dominance, records = _dominance_checks(
        config, probs, optimal, sim, seeds[2]
    )
    checks.extend(dominance)
    details["dominance"] = records
    check, record = _independent_check(
        config, probs, optimal, sim, seeds[-1]
    )
    checks.append(check)
    details["independent"] = record

    if dump:
        dump_paths(
            params, mixture, probs, optimal, dump, sim.seed,
            out / "paths.csv"
        )

    record = {
        "seed": sim.seed,
        "n_paths": sim.n_paths,
        "steps_per_year": sim.steps_per_year,
        "antithetic": sim.antithetic,
        "check_alpha": check_params.alpha,
        "constant_strategy": {"xi": strategy.xi, "b": strategy.b},
        "checks": [check.as_record() for check in checks],
        "details": details,
        "passed": not any(check.failed for check in checks),
    }
    with open(out / "mc_report.json", "w") as f:
        json.dump(record, f, indent=2, sort_keys=True)
    return McReport(checks=checks, record=record)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="bayes-reinsurance",
        description=(
            "Optimal investment and proportional reinsurance with "
            "claim-triggered stock drops."
        ),
    )
    parser.add_argument(
        "-v", "--verbose", action="store_true", help="log at DEBUG level"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name, help):
        sub = commands.add_parser(name, help=help)
        sub.add_argument("--config", required=True, help="JSON run config")
        sub.add_argument("--out", help="output directory")
        sub.add_argument("--workers", type=int, help="worker threads")
        return sub

    sweep = add("sweep", "complete-information strategy over thresholds")
    sweep.add_argument("--assert-golden", action="store_true")
    bayes = add("bayes", "learning value grid and bound report")
    bayes.add_argument("--seed", type=int, help="Monte Carlo seed")
    validate = add("validate", "Monte Carlo validation")
    validate.add_argument("--seed", type=int, help="Monte Carlo seed")
    validate.add_argument(
        "--dump-paths", type=int, default=0, metavar="N",
        help="write N simulated paths to paths.csv"
    )
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.command == "sweep":
            result = run_threshold_sweep(
                config,
                args.out,
                assert_golden=args.assert_golden,
                workers=args.workers or 1,
            )
        elif args.command == "bayes":
            result = run_bayes_report(
                config, args.out, workers=args.workers, seed=args.seed
            )
        else:
            result = run_mc_validation(
                config,
                args.out,
                seed=args.seed,
                dump=args.dump_paths,
                workers=args.workers,
            )
    except ValueError as err:
        logger.error(str(err))
        return EXIT_ERROR
    return EXIT_OK if result.passed else EXIT_ASSERTION


if __name__ == "__main__":
    sys.exit(main())
