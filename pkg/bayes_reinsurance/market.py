from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .distributions import JumpLaw, UniformOn01
from .errors import InvalidModelParams, InvestmentCapReached

logger = logging.getLogger(__name__)

# investment cap as a multiple of the independent-case investment
CAP_MULTIPLE = 10.0
# a solved investment this close to the cap (relative) fails the run
CAP_MARGIN = 0.01
_TIME_TOL = 1e-12


def default_investment_cap(mu, r, alpha, sigma, horizon):
    """Ten times the independent-case investment ``(mu - r)/(alpha
    sigma^2) e^{|r| T}``; ``10/(alpha sigma)`` when ``mu == r``."""

    base = abs(mu - r) / (alpha * sigma ** 2) * math.exp(abs(r) * horizon)
    if base == 0.0:
        return CAP_MULTIPLE / (alpha * sigma)
    return CAP_MULTIPLE * base


@dataclass(frozen=True)
class ModelParams(object):
    """Market, insurance and preference constants of the model.

    Parameters
    ----------
    r : float
        Risk-free rate per year.
    mu : float
        Drift of the risky asset per year.
    sigma : float
        Volatility of the risky asset per square-root year.
    intensity : float
        Claim arrival intensity per year.
    threshold : float
        Claim size above which the stock drops; ``inf`` switches the
        dependence off.
    alpha : float
        Absolute risk aversion per unit of currency.
    horizon : float
        Terminal time ``T`` in years.
    kappa : float
        Premium scale in currency per year.
    eta : float
        Safety loading of the insurer.
    theta : float
        Safety loading of the reinsurer, ``theta > eta``.
    x0 : float, default 0.0
        Initial capital.
    cap : float, optional
        Technical investment cap ``K``; see :func:`default_investment_cap`.
    jump_law : JumpLaw, default UniformOn01()
        Law of the relative stock drop.
    """

    r: float
    mu: float
    sigma: float
    intensity: float
    threshold: float
    alpha: float
    horizon: float
    kappa: float
    eta: float
    theta: float
    x0: float = 0.0
    cap: Optional[float] = None
    jump_law: JumpLaw = field(default_factory=UniformOn01)

    def __post_init__(self):
        for name in (
            "r",
            "mu",
            "sigma",
            "intensity",
            "alpha",
            "horizon",
            "kappa",
            "eta",
            "theta",
            "x0",
        ):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(
                value
            ):
                raise InvalidModelParams(
                    "'{}' must be a finite number, got {!r}".format(
                        name, value
                    ),
                    field=name,
                )
        positive = ("sigma", "alpha", "horizon", "kappa", "eta")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InvalidModelParams(
                    "'{}' must be positive, got {}".format(
                        name, getattr(self, name)
                    ),
                    field=name,
                )
        if self.intensity < 0:
            raise InvalidModelParams(
                "'intensity' must be nonnegative, got {}".format(
                    self.intensity
                ),
                field="intensity",
            )
        if not self.theta > self.eta:
            raise InvalidModelParams(
                "reinsurer loading theta={} must exceed insurer loading "
                "eta={}".format(self.theta, self.eta),
                field="theta",
            )
        if not (
            isinstance(self.threshold, (int, float)) and self.threshold > 0
        ):
            raise InvalidModelParams(
                "'threshold' must be positive, got {!r}".format(
                    self.threshold
                ),
                field="threshold",
            )
        if self.cap is not None and not (
            math.isfinite(self.cap) and self.cap > 0
        ):
            raise InvalidModelParams(
                "'cap' must be positive, got {!r}".format(self.cap),
                field="cap",
            )
        if not isinstance(self.jump_law, JumpLaw):
            raise InvalidModelParams(
                "'jump_law' must be a JumpLaw, got {!r}".format(
                    self.jump_law
                ),
                field="jump_law",
            )

    @classmethod
    def from_reinsurance_price(cls, reinsurance_price, theta, eta=None, **kw):
        """Build from ``(1 + theta) kappa`` directly; ``eta`` defaults to
        ``theta / 2``."""

        if eta is None:
            eta = theta / 2.0
        return cls(
            kappa=reinsurance_price / (1.0 + theta), eta=eta, theta=theta, **kw
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    @property
    def investment_cap(self):
        if self.cap is not None:
            return self.cap
        return default_investment_cap(
            self.mu, self.r, self.alpha, self.sigma, self.horizon
        )

    @property
    def premium_rate(self):
        """``(1 + eta) kappa``, the premium income without reinsurance."""

        return (1.0 + self.eta) * self.kappa

    @property
    def reinsurance_price(self):
        """``(1 + theta) kappa``, the cost of ceding all claims."""

        return (1.0 + self.theta) * self.kappa

    @property
    def excess_return(self):
        return self.mu - self.r

    @property
    def max_discount(self):
        """``e^{|r| T}``, the largest discount factor on ``[0, T]``."""

        return math.exp(abs(self.r) * self.horizon)


@dataclass(frozen=True)
class StrategyPoint(object):
    """An amount ``xi`` held in the risky asset and a retention ``b``."""

    xi: float
    b: float

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(
                "retention must lie in [0, 1], got {}".format(self.b)
            )


def net_income_rate(params, b):
    """``c(b) = (1 + eta) kappa - (1 - b)(1 + theta) kappa``."""

    if not 0.0 <= b <= 1.0:
        raise ValueError("retention must lie in [0, 1], got {}".format(b))
    return params.premium_rate - (1.0 - b) * params.reinsurance_price


def discount_factor(params, t):
    """``e^{r (T - t)}``."""

    if not -_TIME_TOL <= t <= params.horizon + _TIME_TOL:
        raise ValueError(
            "time {} outside [0, {}]".format(t, params.horizon)
        )
    return math.exp(params.r * (params.horizon - t))


def independent_investment(params, t):
    """``(mu - r) / (alpha sigma^2) e^{-r (T - t)}``, optimal when the
    stock never drops with claims."""

    return (
        params.excess_return
        / (params.alpha * params.sigma ** 2)
        / discount_factor(params, t)
    )


def check_admissible(params, mixture):
    """Reject families whose moment generating function does not reach
    the largest tilt ``alpha e^{|r| T}`` a retention in ``[0, 1]`` can
    produce."""

    tilt = params.alpha * params.max_discount
    for index, family in enumerate(mixture, start=1):
        if not tilt < family.max_tilt:
            raise InvalidModelParams(
                "risk aversion alpha e^(|r|T)={} must stay below the "
                "moment generating bound {} of family {} ({})".format(
                    tilt, family.max_tilt, index, family
                ),
                field="alpha",
            )
    return params


def check_interior(params, xi, context=""):
    """Fail when ``xi`` comes within one percent of the cap."""

    cap = params.investment_cap
    if abs(xi) >= (1.0 - CAP_MARGIN) * cap:
        raise InvestmentCapReached(
            "solved investment {} is within {:.0%} of the cap K={}{}; "
            "raise the cap".format(
                xi, CAP_MARGIN, cap, " ({})".format(context) if context else ""
            )
        )
    return xi
