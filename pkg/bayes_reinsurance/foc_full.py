from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy
from scipy import optimize

from .distributions import ABOVE, ALL, BELOW
from .errors import InvestmentCapReached, NoConvergence
from .market import (
    StrategyPoint,
    check_interior,
    discount_factor,
    independent_investment,
)

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-9
# classification of the clamped regimes, absolute on (1 + theta) kappa
CLAMP_TOL = 1e-9
NEWTON_MAX_ITER = 60
NEWTON_MAX_HALVINGS = 30
POLISH_STEPS = 4


class Regime(enum.Enum):
    INTERIOR = "interior"
    CLAMPED_AT_ZERO = "clamped_at_zero"
    CLAMPED_AT_ONE = "clamped_at_one"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TiltedMoments(object):
    """Tilted claim moments of orders 0, 1 and 2 below and above the
    threshold, possibly weighted by a value-function ratio."""

    below: Tuple[float, float, float]
    above: Tuple[float, float, float]

    def total(self, order):
        return self.below[order] + self.above[order]


class FamilyMoments(object):
    """Moment provider for a single claim law (closed forms or adaptive
    quadrature, depending on the family)."""

    def __init__(self, family, threshold):
        self.family = family
        self.threshold = threshold
        self._cache = {}

    def moments(self, s):
        cached = self._cache.get(s)
        if cached is not None:
            return cached
        family, threshold = self.family, self.threshold
        value = TiltedMoments(
            below=tuple(
                family.tilted_moment(s, threshold, BELOW, n) for n in range(3)
            ),
            above=tuple(
                family.tilted_moment(s, threshold, ABOVE, n) for n in range(3)
            ),
        )
        if len(self._cache) > 256:
            self._cache.clear()
        self._cache[s] = value
        return value


class FocSystem(object):
    """The first order conditions ``v1 = mu - r``, ``v2 = (1 + theta)
    kappa`` at a fixed time, for any moment provider.

    ``v1`` and ``v2`` are the scaled partial derivatives of the strictly
    convex function ``gamma`` in ``xi`` and ``b``; the Jacobian is the
    scaled Hessian of ``gamma`` and is symmetric.
    """

    def __init__(self, params, t, provider, residual_tol=RESIDUAL_TOL):
        self.params = params
        self.t = t
        self.provider = provider
        self.residual_tol = residual_tol
        self.discount = discount_factor(params, t)
        self.scale = params.alpha * self.discount
        self.target_xi = params.excess_return
        self.target_b = params.reinsurance_price
        self.cap = params.investment_cap

    def _m(self, b):
        return self.provider.moments(self.scale * b)

    def _mz(self, xi, order):
        return self.params.jump_law.mgf(self.scale * xi, order)

    def v1(self, xi, b):
        p = self.params
        return p.alpha * p.sigma ** 2 * self.discount * xi + (
            p.intensity * self._m(b).above[0] * self._mz(xi, 1)
        )

    def v2(self, xi, b):
        m = self._m(b)
        return self.params.intensity * (
            m.below[1] + self._mz(xi, 0) * m.above[1]
        )

    def residuals(self, xi, b):
        return (
            self.v1(xi, b) - self.target_xi,
            self.v2(xi, b) - self.target_b,
        )

    def jacobian(self, xi, b):
        p, a = self.params, self.scale
        m = self._m(b)
        lam = p.intensity
        d11 = p.alpha * p.sigma ** 2 * self.discount + lam * a * m.above[
            0
        ] * self._mz(xi, 2)
        d12 = lam * a * m.above[1] * self._mz(xi, 1)
        d22 = lam * a * (m.below[2] + self._mz(xi, 0) * m.above[2])
        return numpy.array([[d11, d12], [d12, d22]])

    def gamma(self, xi, b):
        """``gamma`` divided by ``g(t, p)``, i.e. with the value-function
        ratio folded into the moments."""

        p, a = self.params, self.scale
        m = self._m(b)
        return -a * (
            p.excess_return * xi
            - 0.5 * p.alpha * p.sigma ** 2 * self.discount * xi ** 2
            + p.reinsurance_price * b
        ) + p.intensity * (m.below[0] + self._mz(xi, 0) * m.above[0])

    def gamma_gradient(self, xi, b):
        r1, r2 = self.residuals(xi, b)
        return numpy.array([self.scale * r1, self.scale * r2])

    def gamma_hessian(self, xi, b):
        return self.scale * self.jacobian(xi, b)

    def solve_xi(self, b):
        """Unique root of ``v1(., b) = mu - r`` in ``[-K, K]``."""

        def f(xi):
            return self.v1(xi, b) - self.target_xi

        lo, hi = -self.cap, self.cap
        f_lo, f_hi = f(lo), f(hi)
        if f_lo > 0 or f_hi < 0:
            raise InvestmentCapReached(
                "investment root for b={} lies outside [-K, K] with "
                "K={}".format(b, self.cap)
            )
        xi, result = optimize.brentq(
            f, lo, hi, xtol=1e-14, rtol=4 * numpy.finfo(float).eps,
            maxiter=200, full_output=True, disp=False
        )
        if not result.converged:
            raise NoConvergence(
                "investment root for b={} did not converge: {}".format(
                    b, result.flag
                )
            )
        # Newton polish on the strictly increasing scalar equation
        for _ in range(POLISH_STEPS):
            residual = f(xi)
            if abs(residual) < 0.1 * self.residual_tol:
                break
            slope = self.jacobian(xi, b)[0, 0]
            step = xi - residual / slope
            if not lo <= step <= hi:
                break
            xi = step
        return xi

    def _newton(self, xi0, b0):
        x = numpy.array([xi0, b0], dtype=float)
        res = numpy.array(self.residuals(*x))
        merit = float(res @ res)
        for iteration in range(1, NEWTON_MAX_ITER + 1):
            if (
                abs(res[0]) < 0.1 * self.residual_tol
                and abs(res[1]) < 0.1 * self.residual_tol
            ):
                return x, iteration - 1
            try:
                step = numpy.linalg.solve(self.jacobian(*x), -res)
            except numpy.linalg.LinAlgError:
                return None, iteration
            damping = 1.0
            for _ in range(NEWTON_MAX_HALVINGS):
                trial = x + damping * step
                trial[1] = min(max(trial[1], 0.0), 1.0)
                trial[0] = min(max(trial[0], -self.cap), self.cap)
                trial_res = numpy.array(self.residuals(*trial))
                trial_merit = float(trial_res @ trial_res)
                if trial_merit < merit:
                    break
                damping *= 0.5
            else:
                if (
                    abs(res[0]) < self.residual_tol
                    and abs(res[1]) < self.residual_tol
                ):
                    return x, iteration
                return None, iteration
            x, res, merit = trial, trial_res, trial_merit
        if abs(res[0]) < self.residual_tol and abs(res[1]) < self.residual_tol:
            return x, NEWTON_MAX_ITER
        return None, NEWTON_MAX_ITER

    def _nested_bisection(self):
        def h(b):
            return self.v2(self.solve_xi(b), b) - self.target_b

        b, result = optimize.brentq(
            h, 0.0, 1.0, xtol=1e-15, maxiter=200, full_output=True,
            disp=False
        )
        if not result.converged:
            raise NoConvergence(
                "retention bisection did not converge: {}".format(result.flag)
            )
        return self.solve_xi(b), b

    def solve(self, xi0=None, b0=0.5):
        """Minimize ``gamma`` over ``[-K, K] x [0, 1]``.

        Returns
        -------
        tuple
            ``(xi, b, regime, method, iterations)``.
        """

        a0 = self.solve_xi(0.0)
        if self.v2(a0, 0.0) >= self.target_b - CLAMP_TOL:
            return a0, 0.0, Regime.CLAMPED_AT_ZERO, "scalar", 0
        a1 = self.solve_xi(1.0)
        if self.v2(a1, 1.0) <= self.target_b + CLAMP_TOL:
            return a1, 1.0, Regime.CLAMPED_AT_ONE, "scalar", 0

        if xi0 is None:
            xi0 = independent_investment(self.params, self.t)
        xi0 = min(max(xi0, -self.cap), self.cap)
        x, iterations = self._newton(xi0, b0)
        method = "newton"
        if x is None:
            logger.debug(
                "Newton stalled at t={} after {} iterations; falling back "
                "to nested bisection".format(self.t, iterations)
            )
            xi, b = self._nested_bisection()
            x, polish = self._newton(xi, b)
            if x is None:
                x = numpy.array([xi, b])
            iterations += polish
            method = "bisection"
        xi, b = float(x[0]), float(x[1])
        if not 0.0 < b < 1.0:
            raise NoConvergence(
                "interior solve left (0, 1) with b={}".format(b)
            )
        return xi, b, Regime.INTERIOR, method, iterations


@dataclass(frozen=True)
class FullInfoSolution(object):
    """Optimal complete-information strategy at one time point.

    ``A_F`` and ``B_F`` are ``v2`` at the solved investment with
    retention 0 and 1; they classify the regime.
    """

    t: float
    xi_star: float
    b_star: float
    regime: Regime
    A_F: float
    B_F: float
    residuals: Tuple[float, float]
    method: str = "scalar"
    iterations: int = 0

    @property
    def strategy(self):
        return StrategyPoint(self.xi_star, self.b_star)

    def as_record(self):
        return {
            "t": self.t,
            "xi_star": self.xi_star,
            "b_star": self.b_star,
            "regime": str(self.regime),
            "A_F": self.A_F,
            "B_F": self.B_F,
            "residual_v1": self.residuals[0],
            "residual_v2": self.residuals[1],
        }


def solve_system(system, xi0=None, b0=0.5, result_cls=None, **extra):
    """Run a :class:`FocSystem` and package the result with its regime
    bounds and residual checks."""

    xi, b, regime, method, iterations = system.solve(xi0=xi0, b0=b0)
    residuals = system.residuals(xi, b)
    tol = system.residual_tol
    if abs(residuals[0]) >= tol or (
        regime is Regime.INTERIOR and abs(residuals[1]) >= tol
    ):
        raise NoConvergence(
            "first order conditions not met at t={}: residuals {}".format(
                system.t, residuals
            )
        )
    check_interior(system.params, xi, "t={}".format(system.t))
    A = system.v2(xi, 0.0)
    B = system.v2(xi, 1.0)
    logger.debug(
        "t={}: xi={}, b={}, regime={} via {} ({} iterations)".format(
            system.t, xi, b, regime, method, iterations
        )
    )
    return (result_cls or FullInfoSolution)(
        t=system.t,
        xi_star=xi,
        b_star=b,
        regime=regime,
        A_F=A,
        B_F=B,
        residuals=tuple(float(v) for v in residuals),
        method=method,
        iterations=iterations,
        **extra
    )


def full_info_system(params, family, t, residual_tol=RESIDUAL_TOL):
    return FocSystem(
        params, t, FamilyMoments(family, params.threshold), residual_tol
    )


def v1_full(params, family, t, xi, b):
    """``alpha sigma^2 e^{r(T-t)} xi + lambda int_L^inf e^{alpha b y
    e^{r(T-t)}} F(dy) M_Z'(alpha e^{r(T-t)} xi)``."""

    return full_info_system(params, family, t).v1(xi, b)


def v2_full(params, family, t, xi, b):
    """``lambda [int_0^L y e^{s y} F(dy) + M_Z(alpha e^{r(T-t)} xi)
    int_L^inf y e^{s y} F(dy)]`` with ``s = alpha b e^{r(T-t)}``."""

    return full_info_system(params, family, t).v2(xi, b)


def gamma_full(params, family, t, xi, b):
    """The complete-information ``gamma`` (value-function factor one)."""

    return full_info_system(params, family, t).gamma(xi, b)


def solve_foc_full(params, family, t, residual_tol=RESIDUAL_TOL):
    """Optimal complete-information investment and retention at ``t``.

    Parameters
    ----------
    params : ModelParams
    family : ClaimFamily
        The known claim law.
    t : float
        Time in ``[0, T]``.
    residual_tol : float, default 1e-9
        Bound on the absolute residuals of the active equations.

    Returns
    -------
    FullInfoSolution

    Raises
    ------
    NoConvergence
        When the root finders fail.
    InvestmentCapReached
        When the solution is not interior to ``[-K, K]``.
    DivergentIntegral
        When a tilt exceeds the moment generating bound of the family.
    """

    return solve_system(full_info_system(params, family, t, residual_tol))


def independent_case_strategy(params, mixture, t, p, grid=None):
    """Optimal strategy when the stock never drops with claims.

    The investment is the closed form ``(mu - r)/(alpha sigma^2)
    e^{-r(T-t)}``. The retention solves ``lambda sum_k p_k int y
    g(t, J(p, y))/g(t, p) e^{alpha b y e^{r(T-t)}} f_k(y) dy = (1 +
    theta) kappa`` and is clamped to ``[0, 1]``.

    Parameters
    ----------
    grid : ValueGrid, optional
        Value grid of the independent model (threshold ``inf``) that
        supplies the ratio ``g(t, J(p, y))/g(t, p)``. Without it the ratio
        is one, which is exact at corners and for a single family.
    """

    xi = independent_investment(params, t)
    if grid is None:
        provider = FamilyMoments(mixture.collapse(p.probs), params.threshold)
    else:
        provider = grid.moment_provider(t, p)
    scale = params.alpha * discount_factor(params, t)
    target = params.reinsurance_price

    def gamma_tilde(b):
        return params.intensity * provider.moments(scale * b).total(1)

    if gamma_tilde(0.0) >= target - CLAMP_TOL:
        return StrategyPoint(xi, 0.0)
    if gamma_tilde(1.0) <= target + CLAMP_TOL:
        return StrategyPoint(xi, 1.0)
    b, result = optimize.brentq(
        lambda v: gamma_tilde(v) - target,
        0.0,
        1.0,
        xtol=1e-15,
        maxiter=200,
        full_output=True,
        disp=False,
    )
    if not result.converged:
        raise NoConvergence(
            "independent-case retention did not converge: {}".format(
                result.flag
            )
        )
    return StrategyPoint(xi, b)


def find_zero_crossing(params, family, t, lower, upper):
    """Threshold in ``[lower, upper]`` at which the optimal investment
    changes sign, by Brent's method in ``log L``."""

    def xi_at(log_threshold):
        solution = solve_foc_full(
            params.replace(threshold=math.exp(log_threshold)), family, t
        )
        return solution.xi_star

    lo, hi = math.log(lower), math.log(upper)
    if xi_at(lo) * xi_at(hi) > 0:
        raise NoConvergence(
            "optimal investment does not change sign on [{}, {}]".format(
                lower, upper
            )
        )
    return math.exp(optimize.brentq(xi_at, lo, hi, xtol=1e-12))
