import math

import pytest

from bayes_reinsurance import market
from bayes_reinsurance.distributions import ClaimMixture, Exponential
from bayes_reinsurance.errors import InvalidModelParams, InvestmentCapReached
from bayes_reinsurance.market import ModelParams, StrategyPoint


def test_from_reinsurance_price(reference_params):
    assert reference_params.kappa == pytest.approx(250.0, rel=1e-14)
    assert reference_params.premium_rate == pytest.approx(300.0, rel=1e-14)
    assert reference_params.reinsurance_price == pytest.approx(
        350.0, rel=1e-14
    )


def test_from_reinsurance_price_defaults_insurer_loading():
    params = ModelParams.from_reinsurance_price(
        140.0,
        0.4,
        r=0.0,
        mu=0.1,
        sigma=0.2,
        intensity=1.0,
        threshold=10.0,
        alpha=0.1,
        horizon=1.0,
    )

    assert params.eta == pytest.approx(0.2)
    assert params.kappa == pytest.approx(100.0)


@pytest.mark.parametrize(
    "changes, field",
    [
        ({"theta": 0.2}, "theta"),
        ({"theta": 0.1}, "theta"),
        ({"sigma": 0.0}, "sigma"),
        ({"alpha": -0.05}, "alpha"),
        ({"intensity": -1.0}, "intensity"),
        ({"threshold": 0.0}, "threshold"),
        ({"mu": math.nan}, "mu"),
        ({"cap": -1.0}, "cap"),
    ],
)
def test_model_params_w_invalid_value_should_fail(
    reference_params, changes, field
):
    with pytest.raises(InvalidModelParams) as excinfo:
        reference_params.replace(**changes)

    assert excinfo.value.field == field


def test_infinite_threshold_is_allowed(reference_params):
    params = reference_params.replace(threshold=math.inf)

    assert math.isinf(params.threshold)


def test_default_investment_cap(reference_params, no_claims_params):
    assert reference_params.investment_cap == pytest.approx(375.0)
    # no excess return
    assert no_claims_params.investment_cap == pytest.approx(
        10.0 / (0.05 * 0.3)
    )
    assert reference_params.replace(
        mu=0.0
    ).investment_cap == pytest.approx(500.0)
    assert reference_params.replace(cap=42.0).investment_cap == 42.0


def test_independent_investment(reference_params):
    assert market.independent_investment(
        reference_params, 0.0
    ) == pytest.approx(37.5, rel=1e-14)


def test_independent_investment_is_discounted(reference_params):
    params = reference_params.replace(r=0.05, mu=0.35)

    value = market.independent_investment(params, 0.25)

    assert value == pytest.approx(
        0.3 / (0.05 * 0.16) * math.exp(-0.05 * 0.75), rel=1e-14
    )


def test_discount_factor_outside_horizon_should_fail(reference_params):
    with pytest.raises(ValueError, match="outside"):
        market.discount_factor(reference_params, 1.5)


@pytest.mark.parametrize("b, expected", [(1.0, 300.0), (0.0, -50.0)])
def test_net_income_rate(reference_params, b, expected):
    assert market.net_income_rate(reference_params, b) == pytest.approx(
        expected, rel=1e-12
    )


def test_net_income_rate_w_invalid_retention_should_fail(reference_params):
    with pytest.raises(ValueError, match="retention"):
        market.net_income_rate(reference_params, 1.5)
    with pytest.raises(ValueError, match="retention"):
        StrategyPoint(xi=1.0, b=-0.1)


def test_check_admissible(reference_params):
    mixture = ClaimMixture([Exponential(0.1)])

    checked = market.check_admissible(reference_params, mixture)
    assert checked is reference_params

    with pytest.raises(InvalidModelParams, match="moment generating bound"):
        market.check_admissible(reference_params.replace(alpha=0.1), mixture)


def test_check_admissible_accounts_for_discounting(reference_params):
    mixture = ClaimMixture([Exponential(0.2), Exponential(0.1)])
    # alpha e^{|r| T} = 0.09 * e^{0.2} > 0.1
    params = reference_params.replace(alpha=0.09, r=0.2, mu=0.5)

    with pytest.raises(InvalidModelParams) as excinfo:
        market.check_admissible(params, mixture)

    assert excinfo.value.field == "alpha"
    assert "family 2" in str(excinfo.value)


def test_check_interior(reference_params):
    assert market.check_interior(reference_params, 300.0) == 300.0

    with pytest.raises(InvestmentCapReached, match="threshold L=1"):
        market.check_interior(
            reference_params, -372.0, context="threshold L=1"
        )
