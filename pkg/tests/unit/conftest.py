import functools

import pytest

import bayes_reinsurance
from bayes_reinsurance import (
    ClaimMixture,
    Exponential,
    GridSpec,
    ModelParams,
)

from .utils import data_file


@pytest.fixture(scope="session")
def reference_params():
    return ModelParams.from_reinsurance_price(
        350.0,
        0.4,
        eta=0.2,
        r=0.0,
        mu=0.3,
        sigma=0.4,
        intensity=10.0,
        threshold=100.0,
        alpha=0.05,
        horizon=1.0,
        x0=100.0,
    )


@pytest.fixture(scope="session")
def reference_family():
    return Exponential(0.1)


@pytest.fixture(scope="session")
def ordered_mixture():
    # smallest claims first
    return ClaimMixture(
        [Exponential(0.2), Exponential(0.1)], stochastically_ordered=True
    )


@pytest.fixture(scope="session")
def no_claims_params():
    return ModelParams(
        r=0.0,
        mu=0.0,
        sigma=0.3,
        intensity=0.0,
        threshold=5.0,
        alpha=0.05,
        horizon=1.0,
        kappa=10.0,
        eta=0.2,
        theta=0.4,
    )


@pytest.fixture(scope="session")
def small_grid_spec():
    return GridSpec(time_steps=20, simplex_divisions=4)


@pytest.fixture(scope="session")
def two_family_grid(reference_params, ordered_mixture, small_grid_spec):
    return bayes_reinsurance.value_iteration(
        reference_params, ordered_mixture, small_grid_spec
    )


@pytest.fixture()
def config_path():
    return data_file


@pytest.fixture()
def full_info_solver_under_test(reference_params, reference_family):
    return functools.partial(
        bayes_reinsurance.solve_foc_full,
        family=reference_family,
        t=0.0,
    )
