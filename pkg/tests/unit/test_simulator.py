import math

import numpy
import pandas
import pytest

from bayes_reinsurance.distributions import ClaimMixture
from bayes_reinsurance.filter import FilterState, batch_posterior
from bayes_reinsurance.simulator import (
    ConstantStrategy,
    DeterministicStrategy,
    PerturbedStrategy,
    UtilityEstimate,
    compare_strategies,
    constant_strategy_g,
    dump_paths,
    estimate_g,
    estimate_utility,
    simulate_path,
)


@pytest.fixture(scope="module")
def single_family(reference_family):
    return ClaimMixture([reference_family])


def test_constant_strategy_w_invalid_retention_should_fail():
    with pytest.raises(ValueError, match="retention"):
        ConstantStrategy(10.0, 1.2)


def test_perturbed_strategy_clips_retention():
    base = ConstantStrategy(10.0, 0.95)

    xi, b = PerturbedStrategy(base, xi_factor=1.2, b_shift=0.1).decide(
        0.0, numpy.full((3, 2), 0.5)
    )

    numpy.testing.assert_allclose(xi, 12.0)
    numpy.testing.assert_array_equal(b, 1.0)


def test_deterministic_strategy_interpolates_in_time():
    strategy = DeterministicStrategy([0.0, 1.0], [10.0, 20.0], [0.2, 0.6])

    xi, b = strategy.decide(numpy.array([0.25, 0.5]), numpy.ones((2, 1)))

    numpy.testing.assert_allclose(xi, [12.5, 15.0])
    numpy.testing.assert_allclose(b, [0.3, 0.4])


def test_deterministic_strategy_full_information(
    reference_params, reference_family
):
    strategy = DeterministicStrategy.full_information(
        reference_params, reference_family, times=[0.0, 1.0]
    )

    xi, b = strategy.decide(0.5, numpy.ones((1, 1)))

    # r = 0 makes the complete-information strategy constant in time
    assert xi[0] == pytest.approx(25.19, abs=0.05)
    assert 0.0 <= b[0] <= 1.0


def test_simulate_path_wo_claims_is_deterministic(
    no_claims_params, single_family
):
    path = simulate_path(
        no_claims_params,
        single_family,
        None,
        ConstantStrategy(0.0, 1.0),
        seed=1,
        steps_per_year=20,
    )

    frame = path.to_frame()

    assert list(frame.columns) == ["t", "X_t", "p_1", "xi", "b"]
    assert len(frame) == 21
    assert frame["X_t"].iloc[0] == 0.0
    # premium (1 + eta) kappa with full retention
    assert path.terminal_wealth == pytest.approx(12.0, rel=1e-12)
    assert path.claims.size == 0


def test_simulate_path_is_reproducible(reference_params, ordered_mixture):
    strategy = ConstantStrategy(10.0, 0.5)

    first = simulate_path(
        reference_params, ordered_mixture, [0.5, 0.5], strategy, 11, 20
    )
    second = simulate_path(
        reference_params, ordered_mixture, [0.5, 0.5], strategy, 11, 20
    )

    pandas.testing.assert_frame_equal(first.to_frame(), second.to_frame())
    numpy.testing.assert_array_equal(first.claims, second.claims)
    assert list(first.to_frame().columns) == [
        "t",
        "X_t",
        "p_1",
        "p_2",
        "xi",
        "b",
    ]


def test_simulate_path_records_claim_losses(reference_params, single_family):
    path = simulate_path(
        reference_params,
        single_family,
        None,
        ConstantStrategy(0.0, 0.5),
        seed=5,
        steps_per_year=20,
    )

    # without investment the only losses are the retained claims
    numpy.testing.assert_allclose(path.jumps, -0.5 * path.claims)
    assert numpy.all(numpy.diff(path.times) >= 0)


@pytest.mark.parametrize("seed", range(10))
def test_simulated_filter_matches_batch_posterior(
    reference_params, ordered_mixture, seed
):
    prior = FilterState([0.3, 0.7])

    path = simulate_path(
        reference_params,
        ordered_mixture,
        prior,
        ConstantStrategy(10.0, 0.9),
        seed=seed,
        steps_per_year=20,
    )

    assert path.claims_seen[0] == 0
    assert path.claims_seen[-1] == path.claims.size
    for probs, seen in zip(path.filters, path.claims_seen):
        expected = batch_posterior(prior, path.claims[:seen], ordered_mixture)
        numpy.testing.assert_allclose(
            probs, expected.probs, rtol=0, atol=1e-10
        )
    for k, t in enumerate(path.claim_times):
        expected = batch_posterior(
            prior, path.claims[: k + 1], ordered_mixture
        )
        numpy.testing.assert_allclose(
            path.filter_at(t).probs, expected.probs, rtol=0, atol=1e-10
        )


def test_filter_at_before_first_claim_is_prior(
    reference_params, ordered_mixture
):
    path = simulate_path(
        reference_params,
        ordered_mixture,
        [0.3, 0.7],
        ConstantStrategy(10.0, 0.9),
        seed=3,
        steps_per_year=20,
    )

    first = path.claim_times[0] if path.claims.size else 1.0
    numpy.testing.assert_allclose(
        path.filter_at(0.5 * first).probs, [0.3, 0.7], rtol=1e-14
    )
    assert len(path.jump_filters) == path.claims.size + 1


def test_estimate_utility_wo_randomness(no_claims_params, single_family):
    estimate = estimate_utility(
        no_claims_params,
        single_family,
        ConstantStrategy(0.0, 1.0),
        n_paths=10,
        seed=0,
        antithetic=True,
        batch_size=4,
        steps_per_year=10,
    )

    assert estimate.mean == pytest.approx(-math.exp(-0.05 * 12.0), rel=1e-12)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-12)
    assert estimate.n_paths == 10


def test_estimate_utility_w_odd_antithetic_paths_should_fail(
    reference_params, single_family
):
    with pytest.raises(ValueError, match="antithetic"):
        estimate_utility(
            reference_params,
            single_family,
            ConstantStrategy(10.0, 0.5),
            n_paths=101,
            seed=0,
            antithetic=True,
        )


def test_estimate_utility_w_single_path_should_fail(
    reference_params, single_family
):
    with pytest.raises(ValueError, match="at least 2 paths"):
        estimate_utility(
            reference_params, single_family, ConstantStrategy(10.0, 0.5), 1, 0
        )


def test_estimate_utility_does_not_depend_on_workers(
    reference_params, ordered_mixture
):
    kwargs = dict(
        n_paths=400,
        seed=3,
        prior=[0.5, 0.5],
        batch_size=100,
        steps_per_year=10,
    )
    strategy = ConstantStrategy(10.0, 0.5)

    serial = estimate_utility(
        reference_params, ordered_mixture, strategy, **kwargs
    )
    threaded = estimate_utility(
        reference_params, ordered_mixture, strategy, workers=2, **kwargs
    )

    assert serial == threaded


def test_constant_strategy_g_wo_claims(no_claims_params, single_family):
    params = no_claims_params.replace(mu=0.09)
    a = 0.05
    drift = 0.09 * 5.0 + (12.0 - 0.5 * 14.0)

    value = constant_strategy_g(params, single_family, 0.0, [1.0], 5.0, 0.5)

    assert value == pytest.approx(
        math.exp(-a * drift + 0.5 * (a * 0.3 * 5.0) ** 2), rel=1e-12
    )


def test_constant_strategy_g_is_linear_in_filter(
    reference_params, ordered_mixture
):
    corners = [
        constant_strategy_g(
            reference_params, ordered_mixture, 0.2, FilterState.corner(2, j),
            10.0, 0.5
        )
        for j in range(2)
    ]

    mixed = constant_strategy_g(
        reference_params, ordered_mixture, 0.2, [0.25, 0.75], 10.0, 0.5
    )

    assert mixed == pytest.approx(
        0.25 * corners[0] + 0.75 * corners[1], rel=1e-12
    )
    assert constant_strategy_g(
        reference_params, ordered_mixture, 1.0, [0.5, 0.5], 10.0, 0.5
    ) == 1.0


@pytest.mark.parametrize("probs", [[1.0, 0.0], [0.5, 0.5]])
def test_estimate_g_matches_constant_strategy_value(
    reference_params, ordered_mixture, probs
):
    strategy = ConstantStrategy(10.0, 0.5)
    exact = constant_strategy_g(
        reference_params, ordered_mixture, 0.0, probs, 10.0, 0.5
    )

    estimate = estimate_g(
        reference_params,
        ordered_mixture,
        strategy,
        0.0,
        probs,
        n_paths=4000,
        seed=20240101,
        batch_size=1000,
        steps_per_year=50,
    )

    assert estimate.kind == "g"
    assert abs(estimate.mean - exact) <= 4 * estimate.std_error


def test_compare_strategy_with_itself_is_zero(
    reference_params, ordered_mixture
):
    strategy = ConstantStrategy(10.0, 0.5)

    difference = compare_strategies(
        reference_params,
        ordered_mixture,
        [0.5, 0.5],
        strategy,
        strategy,
        n_paths=200,
        seed=9,
        batch_size=100,
        steps_per_year=10,
    )

    assert difference.mean == 0.0
    assert difference.std_error == 0.0


def test_positive_utility_should_fail():
    with pytest.raises(ValueError, match="negative"):
        UtilityEstimate(mean=0.1, std_error=0.0, n_paths=2, seed=0)

    assert UtilityEstimate(0.1, 0.0, 2, 0, kind="g").as_record() == {
        "mean": 0.1,
        "std_error": 0.0,
        "n_paths": 2,
        "seed": 0,
    }


def test_dump_paths(reference_params, ordered_mixture, tmp_path):
    path = tmp_path / "paths.csv"

    dump_paths(
        reference_params,
        ordered_mixture,
        [0.5, 0.5],
        ConstantStrategy(10.0, 0.5),
        3,
        1,
        path,
    )
    frame = pandas.read_csv(path)

    assert list(frame.columns) == ["path", "t", "X_t", "p_1", "p_2", "xi", "b"]
    assert sorted(frame["path"].unique()) == [0, 1, 2]
