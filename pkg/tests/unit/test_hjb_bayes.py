import math

import numpy
import pytest

from bayes_reinsurance import hjb_bayes
from bayes_reinsurance.distributions import (
    ABOVE,
    ALL,
    ClaimMixture,
    Exponential,
)
from bayes_reinsurance.errors import InvalidGridSpec, StepTooLarge
from bayes_reinsurance.filter import FilterState
from bayes_reinsurance.foc_full import Regime, solve_foc_full
from bayes_reinsurance.hjb_bayes import (
    GridSpec,
    SimplexInterpolator,
    apriori_bounds,
    convergence_study,
    mean_model_upper_bound,
    solve_foc_bayes,
    value_iteration,
)
from bayes_reinsurance.simulator import constant_strategy_g, estimate_g
from bayes_reinsurance.utils import simplex_lattice


@pytest.fixture(scope="module")
def single_family(reference_family):
    return ClaimMixture([reference_family])


@pytest.mark.parametrize(
    "changes, match",
    [
        ({"time_steps": 0}, "positive integer"),
        ({"simplex_divisions": 2.5}, "positive integer"),
        ({"workers": 0}, "positive integer"),
        ({"scheme": "implicit"}, "scheme must be one of"),
        ({"tolerance": 0.0}, "tolerances must be positive"),
        ({"quadrature_nodes": 2}, "at least 4 quadrature nodes"),
    ],
)
def test_grid_spec_w_invalid_value_should_fail(changes, match):
    with pytest.raises(InvalidGridSpec, match=match):
        GridSpec(**changes)


def test_grid_spec_refined():
    spec = GridSpec(time_steps=10, simplex_divisions=4, scheme="exponential")

    refined = spec.refined()

    assert refined.time_steps == 20
    assert refined.simplex_divisions == 8
    assert refined.scheme == "exponential"


@pytest.mark.parametrize(
    "scheme, expected",
    [("euler", (1.0 - 0.06) ** 10), ("exponential", math.exp(-0.6))],
)
def test_value_iteration_wo_claims(no_claims_params, scheme, expected):
    mixture = ClaimMixture([Exponential(0.1)])
    spec = GridSpec(time_steps=10, simplex_divisions=1, scheme=scheme)

    grid = value_iteration(no_claims_params, mixture, spec)

    assert grid.g(0.0, FilterState([1.0])) == pytest.approx(
        expected, rel=1e-12
    )
    numpy.testing.assert_allclose(grid.xi, 0.0, atol=1e-9)
    numpy.testing.assert_array_equal(grid.b, 1.0)


def test_single_family_matches_constant_strategy_value(
    reference_params, single_family
):
    spec = GridSpec(time_steps=10, simplex_divisions=1, scheme="exponential")

    grid = value_iteration(reference_params, single_family, spec)

    expected = constant_strategy_g(
        reference_params,
        single_family,
        0.0,
        [1.0],
        grid.xi[0, 0],
        grid.b[0, 0],
    )
    assert grid.g(0.0, FilterState([1.0])) == pytest.approx(
        expected, rel=1e-10
    )


def test_value_iteration_w_large_step_should_fail(
    reference_params, single_family
):
    with pytest.raises(StepTooLarge, match="reduce the time step"):
        value_iteration(
            reference_params,
            single_family,
            GridSpec(time_steps=1, simplex_divisions=1),
        )


def test_value_iteration_w_coarse_euler_step_should_fail(
    reference_params, ordered_mixture
):
    # the Exp(0.2) corner clamps at b=1 with generator rate near -11.95
    with pytest.raises(StepTooLarge, match="dt=0.1"):
        value_iteration(
            reference_params,
            ordered_mixture,
            GridSpec(time_steps=10, simplex_divisions=4),
        )


def test_value_iteration_w_coarse_exponential_step_stays_positive(
    reference_params, ordered_mixture
):
    grid = value_iteration(
        reference_params,
        ordered_mixture,
        GridSpec(time_steps=10, simplex_divisions=4, scheme="exponential"),
    )

    assert numpy.all(grid.values > 0)


@pytest.mark.parametrize("seed", [5, 6])
def test_simulated_g_under_bayes_strategy_matches_grid(
    reference_params, ordered_mixture, seed
):
    grid = value_iteration(
        reference_params,
        ordered_mixture,
        GridSpec(time_steps=40, simplex_divisions=4, scheme="exponential"),
    )
    prior = FilterState([0.5, 0.5])

    estimate = estimate_g(
        reference_params,
        ordered_mixture,
        grid.strategy(),
        0.0,
        prior,
        4000,
        seed,
        steps_per_year=50,
    )

    tabulated = grid.g(0.0, prior)
    assert abs(estimate.mean - tabulated) <= (
        4.0 * estimate.std_error + 0.05 * tabulated
    )


def test_value_iteration_w_too_many_families_should_fail(reference_params):
    mixture = ClaimMixture([Exponential(0.1 + 0.1 * k) for k in range(5)])

    with pytest.raises(InvalidGridSpec, match="at most 4 families"):
        value_iteration(reference_params, mixture, GridSpec(time_steps=10))


def test_terminal_slice_is_one(two_family_grid):
    numpy.testing.assert_array_equal(two_family_grid.values[-1], 1.0)
    assert two_family_grid.g(1.0, FilterState([0.3, 0.7])) == 1.0


def test_values_are_positive_and_bounded(two_family_grid):
    assert numpy.all(two_family_grid.values > 0)
    assert numpy.log(two_family_grid.values.max()) <= two_family_grid.log_k1


def test_lattice_orientation(two_family_grid):
    nodes = two_family_grid.nodes

    assert nodes.shape == (5, 2)
    assert nodes[0].tolist() == [1.0, 0.0]
    assert nodes[-1].tolist() == [0.0, 1.0]


@pytest.mark.parametrize("corner", [0, 1])
def test_corner_strategy_matches_full_information(
    reference_params, ordered_mixture, two_family_grid, corner
):
    node = 0 if corner == 0 else -1
    family = ordered_mixture[corner]

    full = solve_foc_full(reference_params, family, 0.0)

    assert two_family_grid.xi[0, node] == pytest.approx(
        full.xi_star, abs=1e-4
    )
    assert two_family_grid.b[0, node] == pytest.approx(full.b_star, abs=1e-6)


def test_solve_foc_bayes_at_corner(
    reference_params, ordered_mixture, two_family_grid
):
    p = FilterState.corner(2, 1)

    solution = solve_foc_bayes(
        two_family_grid, reference_params, ordered_mixture, 0.5, p
    )
    full = solve_foc_full(reference_params, ordered_mixture[1], 0.5)

    assert solution.probs == (0.0, 1.0)
    assert solution.regime is full.regime
    assert solution.xi_star == pytest.approx(full.xi_star, abs=1e-4)


def test_bayes_strategy_minimizes_hamiltonian(
    reference_params, ordered_mixture, two_family_grid
):
    p = FilterState([0.5, 0.5])
    solution = solve_foc_bayes(
        two_family_grid, reference_params, ordered_mixture, 0.5, p
    )

    best = hjb_bayes.hamiltonian(
        two_family_grid,
        reference_params,
        ordered_mixture,
        0.5,
        p,
        solution.xi_star,
        solution.b_star,
    )

    for d_xi, d_b in [(-5.0, 0.0), (5.0, 0.0), (0.0, -0.1), (3.0, 0.1)]:
        other = hjb_bayes.hamiltonian(
            two_family_grid,
            reference_params,
            ordered_mixture,
            0.5,
            p,
            solution.xi_star + d_xi,
            min(max(solution.b_star + d_b, 0.0), 1.0),
        )
        assert best <= other + 1e-9


def test_g_ratio_integrals_at_corner(
    reference_params, ordered_mixture, two_family_grid
):
    family = ordered_mixture[0]
    s = 0.05 * 0.4

    i_tail, i_mean = hjb_bayes.g_ratio_integrals(
        two_family_grid, 0.0, FilterState.corner(2, 0), 0.0, 0.4
    )

    assert i_tail == pytest.approx(
        family.tilted_moment(s, 100.0, ABOVE, 0), rel=1e-12
    )
    assert i_mean == pytest.approx(
        family.tilted_moment(s, 100.0, ALL, 1), rel=1e-12
    )


def test_bayes_strategy_reads_grid(two_family_grid):
    strategy = two_family_grid.strategy()

    point = strategy(0.0, FilterState.corner(2, 0))
    xi, b = strategy.decide(0.0, two_family_grid.nodes)

    assert point.xi == pytest.approx(two_family_grid.xi[0, 0])
    numpy.testing.assert_allclose(xi, two_family_grid.xi[0])
    numpy.testing.assert_allclose(b, two_family_grid.b[0])
    assert strategy.regime(0.0, FilterState.corner(2, 0)) in set(Regime)


def test_to_frame(two_family_grid, tmp_path):
    frame = two_family_grid.to_frame()

    assert list(frame.columns) == [
        "time",
        "p_1",
        "p_2",
        "g",
        "xi",
        "b",
        "regime",
    ]
    assert len(frame) == 21 * 5
    assert set(frame["regime"]) <= {
        "interior",
        "clamped_at_zero",
        "clamped_at_one",
    }

    path = tmp_path / "value_grid.csv"
    two_family_grid.to_csv(path)
    assert path.read_text().splitlines()[0] == "time,p_1,p_2,g,xi,b,regime"


def test_diagnostics(two_family_grid):
    diagnostics = two_family_grid.diagnostics()

    assert sorted(diagnostics) == sorted(
        [
            "time_steps",
            "simplex_divisions",
            "scheme",
            "g_min",
            "g_max",
            "log_k1",
            "max_edge_second_difference",
            "time_lipschitz",
        ]
    )
    assert diagnostics["g_min"] > 0
    assert diagnostics["time_lipschitz"] >= 0


def test_interpolator_reproduces_linear_functions():
    nodes = simplex_lattice(3, 4)
    interpolator = SimplexInterpolator(nodes)
    values = 1.0 + 2.0 * nodes[:, 0] - nodes[:, 1]
    points = numpy.random.default_rng(3).dirichlet([2.0, 2.0, 2.0], 50)

    out = interpolator(values, points)

    numpy.testing.assert_allclose(
        out, 1.0 + 2.0 * points[:, 0] - points[:, 1], rtol=1e-10
    )


def test_interpolator_w_five_families_should_fail():
    with pytest.raises(InvalidGridSpec, match="m <= 4"):
        SimplexInterpolator(simplex_lattice(5, 2))


def test_apriori_bounds(reference_params, ordered_mixture):
    bounds = apriori_bounds(reference_params, ordered_mixture, 0.0)
    full = solve_foc_full(reference_params, ordered_mixture[0], 0.0)

    assert bounds.b == full.b_star
    assert bounds.r1_min == pytest.approx(full.xi_star, abs=1e-6)
    assert bounds.r1_max <= bounds.r1_min


def test_apriori_bounds_w_unordered_mixture_should_fail(reference_params):
    mixture = ClaimMixture([Exponential(0.2), Exponential(0.1)])

    with pytest.raises(ValueError, match="stochastically ordered"):
        apriori_bounds(reference_params, mixture, 0.0)


def test_mean_model_bound_at_corner(
    reference_params, ordered_mixture, two_family_grid
):
    bound = mean_model_upper_bound(
        two_family_grid,
        reference_params,
        ordered_mixture,
        0.0,
        FilterState.corner(2, 0),
    )

    assert bound.bayes_xi == pytest.approx(bound.xi_bound, abs=1e-4)
    assert bound.bayes_b == pytest.approx(bound.b_bound, abs=1e-6)


def test_convergence_study_w_two_levels_should_fail(
    reference_params, ordered_mixture
):
    with pytest.raises(InvalidGridSpec, match="at least 3 levels"):
        convergence_study(
            reference_params, ordered_mixture, GridSpec(time_steps=10), 2
        )
