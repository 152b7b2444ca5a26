from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Tuple

import numpy
import pandas
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import Delaunay

from .distributions import ABOVE, BELOW, QUADRATURE_NODES
from .errors import InvalidGridSpec, StepTooLarge
from .filter import FilterState
from .foc_full import (
    FamilyMoments,
    FocSystem,
    FullInfoSolution,
    Regime,
    TiltedMoments,
    solve_foc_full,
    solve_system,
)
from .market import (
    StrategyPoint,
    check_admissible,
    discount_factor,
)
from .utils import simplex_lattice

logger = logging.getLogger(__name__)

SCHEMES = ("euler", "exponential")
MAX_FAMILIES = 4
BAYES_RESIDUAL_TOL = 1e-7
_REGIMES = (Regime.INTERIOR, Regime.CLAMPED_AT_ZERO, Regime.CLAMPED_AT_ONE)
_CORNER_TOL = 1e-14


@dataclass(frozen=True)
class GridSpec(object):
    """Discretization of ``[0, T] x simplex`` for the value iteration.

    Parameters
    ----------
    time_steps : int, default 200
        Number of backward steps ``N``; ``dt = T / N``.
    simplex_divisions : int, default 32
        Lattice spacing ``h = 1 / simplex_divisions``.
    scheme : {"euler", "exponential"}
        ``euler`` is ``g_i = g_{i+1} + dt inf Lg``; ``exponential`` is
        ``g_i = g_{i+1} exp(dt inf Lg / g_{i+1})``.
    residual_tol : float, default 1e-7
        Residual bound of the first order conditions at each node.
    tolerance : float, default 1e-3
        Relative tolerance the run declares for comparisons against
        complete-information solutions.
    quadrature_nodes : int, default 64
        Nodes per region of the fixed claim-size rules.
    workers : int, default 1
        Threads used for the nodes of one time slice.
    """

    time_steps: int = 200
    simplex_divisions: int = 32
    scheme: str = "euler"
    residual_tol: float = BAYES_RESIDUAL_TOL
    tolerance: float = 1e-3
    quadrature_nodes: int = QUADRATURE_NODES
    workers: int = 1

    def __post_init__(self):
        for name in ("time_steps", "simplex_divisions", "workers"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise InvalidGridSpec(
                    "'{}' must be a positive integer, got {!r}".format(
                        name, value
                    )
                )
        if self.scheme not in SCHEMES:
            raise InvalidGridSpec(
                "scheme must be one of {}, got '{}'".format(
                    SCHEMES, self.scheme
                )
            )
        if not self.residual_tol > 0 or not self.tolerance > 0:
            raise InvalidGridSpec("tolerances must be positive")
        if self.quadrature_nodes < 4:
            raise InvalidGridSpec(
                "at least 4 quadrature nodes are needed, got {}".format(
                    self.quadrature_nodes
                )
            )

    def refined(self, factor=2):
        """A grid with ``factor`` times as many time steps and simplex
        divisions."""

        return GridSpec(
            time_steps=self.time_steps * factor,
            simplex_divisions=self.simplex_divisions * factor,
            scheme=self.scheme,
            residual_tol=self.residual_tol,
            tolerance=self.tolerance,
            quadrature_nodes=self.quadrature_nodes,
            workers=self.workers,
        )


class SimplexInterpolator(object):
    """Piecewise linear interpolation of lattice values on the simplex.

    ``m == 2`` interpolates along ``p_1``; ``m`` of 3 or 4 uses a
    Delaunay triangulation of the lattice in the first ``m - 1``
    coordinates, with nearest-node values for points that round off the
    hull.
    """

    def __init__(self, nodes):
        self.nodes = numpy.asarray(nodes, dtype=float)
        self.m = self.nodes.shape[1]
        if self.m > MAX_FAMILIES:
            raise InvalidGridSpec(
                "simplex interpolation supports m <= {}, got {}".format(
                    MAX_FAMILIES, self.m
                )
            )
        if self.m == 2:
            self._order = numpy.argsort(self.nodes[:, 0])
            self._x = self.nodes[self._order, 0]
        elif self.m > 2:
            self._tri = Delaunay(self.nodes[:, :-1])

    def __call__(self, values, points):
        values = numpy.asarray(values, dtype=float)
        points = numpy.atleast_2d(numpy.asarray(points, dtype=float))
        if self.m == 1:
            return numpy.full(points.shape[0], values[0])
        if self.m == 2:
            return numpy.interp(points[:, 0], self._x, values[self._order])
        coords = points[:, :-1]
        out = LinearNDInterpolator(self._tri, values)(coords)
        missing = numpy.isnan(out)
        if missing.any():
            nearest = NearestNDInterpolator(self.nodes[:, :-1], values)
            out[missing] = nearest(coords[missing])
        return out


def _corner_of(probs):
    support = numpy.flatnonzero(probs > _CORNER_TOL)
    return int(support[0]) if support.size == 1 else None


class BayesMoments(object):
    """Tilted moments weighted by the value-function ratio
    ``g(t, J(p, y)) / g(t, p)`` under the predictive law at ``p``.

    At corners and for a single family the ratio is one and the exact
    family moments are used.
    """

    def __init__(
        self, mixture, threshold, probs, g_of, g_at_p, nodes=QUADRATURE_NODES
    ):
        self.mixture = mixture
        self.threshold = threshold
        self.probs = numpy.asarray(probs, dtype=float)
        self.g_of = g_of
        self.g_at_p = g_at_p
        self.nodes = nodes
        corner = _corner_of(self.probs)
        self._exact = None
        if corner is not None:
            self._exact = FamilyMoments(mixture[corner], threshold)
        self._cache = {}

    def ratio(self, y):
        """``g(t, J(p, y)) / g(t, p)`` at the claim sizes ``y``."""

        y = numpy.asarray(y, dtype=float)
        if self._exact is not None or y.size == 0:
            return numpy.ones_like(y)
        weighted = self.probs * self.mixture.densities(y)
        totals = weighted.sum(axis=1)
        ratio = numpy.ones_like(y)
        seen = totals > 0
        if seen.any():
            targets = weighted[seen] / totals[seen, None]
            ratio[seen] = self.g_of(targets) / self.g_at_p
        return ratio

    def _region(self, region, s):
        total = numpy.zeros(3)
        for p_k, family in zip(self.probs, self.mixture):
            if p_k <= 0:
                continue
            y, w = family.quadrature(region, s, self.threshold, self.nodes)
            if y.size == 0:
                continue
            weight = p_k * w * self.ratio(y)
            total += [weight.sum(), (weight * y).sum(), (weight * y * y).sum()]
        return tuple(float(v) for v in total)

    def moments(self, s):
        if self._exact is not None:
            return self._exact.moments(s)
        cached = self._cache.get(s)
        if cached is None:
            cached = TiltedMoments(
                below=self._region(BELOW, s), above=self._region(ABOVE, s)
            )
            if len(self._cache) > 256:
                self._cache.clear()
            self._cache[s] = cached
        return cached


@dataclass(frozen=True)
class BayesSolution(FullInfoSolution):
    """Optimal strategy at one ``(t, p)``; ``A_F``/``B_F`` hold the
    partial-information ``A(t, p)`` and ``B(t, p)``."""

    probs: Tuple[float, ...] = ()


class ValueGrid(object):
    """The discretized ``g(t, p)`` with the strategies solved at every
    node.

    Attributes
    ----------
    times : numpy.ndarray
        ``t_0 = 0 < ... < t_N = T``.
    nodes : numpy.ndarray
        Simplex lattice, shape ``(n_nodes, m)``.
    values : numpy.ndarray
        ``g`` at ``(times[i], nodes[j])``, shape ``(N + 1, n_nodes)``.
    xi, b : numpy.ndarray
        Solved strategy at each node, same shape as ``values``.
    regimes : numpy.ndarray
        Index into ``(interior, clamped_at_zero, clamped_at_one)``.
    log_k1 : float
        Logarithm of the a-priori upper bound of ``g``.
    """

    def __init__(
        self, params, mixture, spec, times, nodes, values, xi, b, regimes,
        log_k1
    ):
        self.params = params
        self.mixture = mixture
        self.spec = spec
        self.times = times
        self.nodes = nodes
        self.values = values
        self.xi = xi
        self.b = b
        self.regimes = regimes
        self.log_k1 = log_k1
        self.interpolator = SimplexInterpolator(nodes)

    @property
    def m(self):
        return self.nodes.shape[1]

    @property
    def dt(self):
        return self.params.horizon / self.spec.time_steps

    def _time_weights(self, t):
        if not -1e-12 <= t <= self.params.horizon + 1e-12:
            raise ValueError(
                "time {} outside [0, {}]".format(t, self.params.horizon)
            )
        i = int(numpy.searchsorted(self.times, t, side="right") - 1)
        i = min(max(i, 0), self.times.size - 2)
        w = (t - self.times[i]) / (self.times[i + 1] - self.times[i])
        return i, min(max(w, 0.0), 1.0)

    def slice_at(self, t, table=None):
        """Node values of ``table`` (default ``values``) at time ``t``,
        linear in time between grid times."""

        table = self.values if table is None else table
        i, w = self._time_weights(t)
        return (1.0 - w) * table[i] + w * table[i + 1]

    def g(self, t, p):
        """Interpolated ``g(t, p)`` for a filter state or an ``(n, m)``
        array."""

        points = p.probs if isinstance(p, FilterState) else p
        out = self.interpolator(self.slice_at(t), points)
        return float(out[0]) if numpy.ndim(points) == 1 else out

    def value_function(self, t, x, p):
        """``V(t, x, p) = -exp(-alpha x e^{r(T-t)}) g(t, p)``."""

        e = discount_factor(self.params, t)
        return -math.exp(-self.params.alpha * x * e) * self.g(t, p)

    def moment_provider(self, t, p):
        probs = p.probs if isinstance(p, FilterState) else numpy.asarray(p)
        values = self.slice_at(t)
        return _provider_for_slice(
            self.params, self.mixture, self.spec, self.interpolator, values,
            probs
        )

    def strategy(self):
        return BayesStrategy(self)

    def to_frame(self):
        """Long table with columns ``time, p_1..p_m, g, xi, b, regime``."""

        n_times, n_nodes = self.values.shape
        frame = pandas.DataFrame(
            numpy.tile(self.nodes, (n_times, 1)),
            columns=["p_{}".format(k + 1) for k in range(self.m)],
        )
        frame.insert(0, "time", numpy.repeat(self.times, n_nodes))
        frame["g"] = self.values.ravel()
        frame["xi"] = self.xi.ravel()
        frame["b"] = self.b.ravel()
        frame["regime"] = [str(_REGIMES[k]) for k in self.regimes.ravel()]
        return frame

    def to_csv(self, path):
        self.to_frame().to_csv(path, index=False, float_format="%.12g")

    def edge_second_differences(self):
        """Largest second difference of ``g`` along the simplex edges over
        all time slices; concavity makes it nonpositive."""

        if self.m == 1:
            return 0.0
        worst = -math.inf
        for j in range(self.m):
            for k in range(j + 1, self.m):
                others = numpy.delete(numpy.arange(self.m), [j, k])
                on_edge = numpy.all(self.nodes[:, others] == 0.0, axis=1)
                index = numpy.flatnonzero(on_edge)
                index = index[numpy.argsort(self.nodes[index, j])]
                if index.size < 3:
                    continue
                edge = self.values[:, index]
                d2 = edge[:, :-2] - 2.0 * edge[:, 1:-1] + edge[:, 2:]
                worst = max(worst, float(d2.max()))
        return 0.0 if worst == -math.inf else worst

    def time_lipschitz(self):
        steps = numpy.abs(numpy.diff(self.values, axis=0))
        return float(steps.max() / self.dt)

    def diagnostics(self):
        """Summary of the run: range of ``g``, the a-priori bound, the edge
        concavity check and the empirical Lipschitz constant in time."""

        return {
            "time_steps": self.spec.time_steps,
            "simplex_divisions": self.spec.simplex_divisions,
            "scheme": self.spec.scheme,
            "g_min": float(self.values.min()),
            "g_max": float(self.values.max()),
            "log_k1": self.log_k1,
            "max_edge_second_difference": self.edge_second_differences(),
            "time_lipschitz": self.time_lipschitz(),
        }


def _provider_for_slice(params, mixture, spec, interpolator, values, probs):
    g_at_p = float(interpolator(values, probs)[0])
    return BayesMoments(
        mixture,
        params.threshold,
        probs,
        lambda points: interpolator(values, points),
        g_at_p,
        spec.quadrature_nodes,
    )


class BayesStrategy(object):
    """The feedback strategy ``(t, p) -> (xi, b)`` read off a
    :class:`ValueGrid`, linear in time and on the simplex between
    nodes."""

    def __init__(self, grid):
        self.grid = grid

    def decide(self, t, probs):
        """Vectorized decision for an ``(n, m)`` array of filters at a
        common time or at one time per row."""

        grid = self.grid
        probs = numpy.atleast_2d(probs)
        t = numpy.broadcast_to(numpy.asarray(t, dtype=float), probs.shape[:1])
        xi = numpy.empty(probs.shape[0])
        b = numpy.empty(probs.shape[0])
        for value in numpy.unique(t):
            rows = t == value
            xi[rows] = grid.interpolator(
                grid.slice_at(value, grid.xi), probs[rows]
            )
            b[rows] = grid.interpolator(
                grid.slice_at(value, grid.b), probs[rows]
            )
        return xi, numpy.clip(b, 0.0, 1.0)

    def __call__(self, t, p):
        xi, b = self.decide(t, p.probs)
        return StrategyPoint(float(xi[0]), float(b[0]))

    def regime(self, t, p):
        b = self(t, p).b
        if b <= 0.0:
            return Regime.CLAMPED_AT_ZERO
        if b >= 1.0:
            return Regime.CLAMPED_AT_ONE
        return Regime.INTERIOR


def log_value_bound(params, mixture):
    """Logarithm of the a-priori upper bound ``K_1`` of ``g``.

    ``K_1 = exp{T (alpha e^{|r|T} (|mu - r| K + (2 + eta + theta) kappa)
    + alpha^2 sigma^2 e^{2|r|T} K^2 / 2 + lambda sum_k M_k(alpha
    e^{|r|T}) M_Z(alpha K e^{|r|T}))}``.
    """

    p = params
    e = p.max_discount
    cap = p.investment_cap
    with numpy.errstate(over="ignore"):
        jump = p.intensity * sum(
            family.mgf(p.alpha * e) for family in mixture
        ) * p.jump_law.mgf(p.alpha * cap * e)
    rate = (
        p.alpha
        * e
        * (abs(p.excess_return) * cap + (2 + p.eta + p.theta) * p.kappa)
        + 0.5 * p.alpha ** 2 * p.sigma ** 2 * e ** 2 * cap ** 2
        + jump
    )
    return float(p.horizon * rate)


def _generator_rate(params, system, xi, b):
    # Lg / g at the node's own value
    return (
        -params.intensity
        + system.scale * (params.theta - params.eta) * params.kappa
        + system.gamma(xi, b)
    )


def g_ratio_integrals(grid, t, p, xi, b):
    """The value-function weighted claim integrals of the first order
    conditions.

    Returns
    -------
    tuple
        ``(I_tail, I_mean)`` where ``I_tail = sum_k p_k int_L^inf
        g(t, J(p, y))/g(t, p) e^{s y} f_k(y) dy`` and ``I_mean`` is the
        ``y``-weighted integral over ``(0, inf)`` with the factor
        ``M_Z(alpha e^{r(T-t)} xi)`` above ``L``; ``s = alpha b
        e^{r(T-t)}``.
    """

    params = grid.params
    a = params.alpha * discount_factor(params, t)
    moments = grid.moment_provider(t, p).moments(a * b)
    i_tail = moments.above[0]
    i_mean = moments.below[1] + params.jump_law.mgf(a * xi) * moments.above[1]
    return i_tail, i_mean


def solve_foc_bayes(grid, params, mixture, t, p):
    """Optimal partial-information strategy at ``(t, p)`` from the value
    grid.

    Returns
    -------
    BayesSolution
        Strategy, regime and ``A(t, p)``, ``B(t, p)``.
    """

    probs = p.probs if isinstance(p, FilterState) else numpy.asarray(p)
    system = FocSystem(
        params, t, grid.moment_provider(t, probs), grid.spec.residual_tol
    )
    return solve_system(
        system, result_cls=BayesSolution, probs=tuple(probs.tolist())
    )


def hamiltonian(grid, params, mixture, t, p, xi, b):
    """``Lg(t, p; xi, b) = -lambda g + alpha e^{r(T-t)} g (theta - eta)
    kappa + gamma(t, p, xi, b)``."""

    probs = p.probs if isinstance(p, FilterState) else numpy.asarray(p)
    system = FocSystem(params, t, grid.moment_provider(t, probs))
    return grid.g(t, probs) * _generator_rate(params, system, xi, b)


def _solve_slice(params, mixture, spec, interpolator, values, nodes, t, pool):
    def solve(probs):
        provider = _provider_for_slice(
            params, mixture, spec, interpolator, values, probs
        )
        system = FocSystem(params, t, provider, spec.residual_tol)
        solution = solve_system(system)
        rate = _generator_rate(
            params, system, solution.xi_star, solution.b_star
        )
        return solution, rate

    if pool is None:
        return [solve(p) for p in nodes]
    return list(pool.map(solve, nodes))


def value_iteration(params, mixture, spec=None):
    """Backward value iteration for ``g`` on the time x simplex grid.

    Parameters
    ----------
    params : ModelParams
    mixture : ClaimMixture
        ``m <= 4`` candidate claim laws.
    spec : GridSpec, optional

    Returns
    -------
    ValueGrid

    Raises
    ------
    StepTooLarge
        When a step makes ``g`` nonpositive or exceeds ``K_1``.
    InvalidGridSpec
        When ``m > 4``.
    """

    spec = spec or GridSpec()
    if mixture.m > MAX_FAMILIES:
        raise InvalidGridSpec(
            "value iteration supports at most {} families, got {}".format(
                MAX_FAMILIES, mixture.m
            )
        )
    check_admissible(params, mixture)
    n = spec.time_steps
    times = numpy.linspace(0.0, params.horizon, n + 1)
    dt = params.horizon / n
    divisions = spec.simplex_divisions if mixture.m > 1 else 1
    nodes = simplex_lattice(mixture.m, divisions)
    interpolator = SimplexInterpolator(nodes)
    log_k1 = log_value_bound(params, mixture)

    shape = (n + 1, nodes.shape[0])
    values = numpy.empty(shape)
    xi = numpy.empty(shape)
    b = numpy.empty(shape)
    regimes = numpy.empty(shape, dtype=numpy.int8)
    values[n] = 1.0

    pool = ThreadPoolExecutor(spec.workers) if spec.workers > 1 else None
    report_every = max(1, n // 10)
    try:
        for i in range(n, -1, -1):
            results = _solve_slice(
                params, mixture, spec, interpolator, values[i], nodes,
                times[i], pool
            )
            for j, (solution, _) in enumerate(results):
                xi[i, j] = solution.xi_star
                b[i, j] = solution.b_star
                regimes[i, j] = _REGIMES.index(solution.regime)
            if i == 0:
                break
            rates = numpy.array([rate for _, rate in results])
            if spec.scheme == "euler":
                step = values[i] * (1.0 + dt * rates)
            else:
                step = values[i] * numpy.exp(dt * rates)
            if not numpy.all(numpy.isfinite(step)) or numpy.any(step <= 0):
                raise StepTooLarge(
                    "g lost positivity at t={}; reduce the time step "
                    "dt={}".format(times[i - 1], dt)
                )
            if numpy.log(step.max()) > log_k1:
                raise StepTooLarge(
                    "g exceeds the bound K_1=exp({}) at t={}".format(
                        log_k1, times[i - 1]
                    )
                )
            values[i - 1] = step
            done = n - i + 1
            if done % report_every == 0 or done == n:
                logger.info("{} out of {} time steps solved.".format(done, n))
    finally:
        if pool is not None:
            pool.shutdown()

    grid = ValueGrid(
        params, mixture, spec, times, nodes, values, xi, b, regimes, log_k1
    )
    second = grid.edge_second_differences()
    if second > spec.tolerance:
        logger.warning(
            "g is not concave along a simplex edge: second difference "
            "{} exceeds {}".format(second, spec.tolerance)
        )
    return grid


@dataclass(frozen=True)
class AprioriBounds(object):
    """Filter-free investment bounds ``r1_max <= xi* <= r1_min`` at a
    fixed retention ``b``."""

    t: float
    b: float
    r1_max: float
    r1_min: float


def apriori_bounds(params, mixture, t, b=None):
    """Roots of ``v1_min`` and ``v1_max`` built from the stochastically
    smallest family ``F_1`` and largest family ``F_m``.

    Parameters
    ----------
    b : float, optional
        Retention at which both scalar equations are solved; defaults to
        the complete-information retention of ``F_1``.
    """

    if not mixture.stochastically_ordered:
        raise ValueError(
            "a-priori bounds need a mixture flagged as stochastically "
            "ordered"
        )
    first, last = mixture[0], mixture[mixture.m - 1]
    if b is None:
        b = solve_foc_full(params, first, t).b_star
    r1_min = FocSystem(
        params, t, FamilyMoments(first, params.threshold)
    ).solve_xi(b)
    r1_max = FocSystem(
        params, t, FamilyMoments(last, params.threshold)
    ).solve_xi(b)
    return AprioriBounds(t=t, b=b, r1_max=r1_max, r1_min=r1_min)


@dataclass(frozen=True)
class MeanModelBound(object):
    """Complete-information strategy for the predictive law ``sum_k p_k
    F_k`` and whether the comparison premise holds at the Bayesian
    strategy."""

    xi_bound: float
    b_bound: float
    regime: Regime
    bayes_xi: float
    bayes_b: float
    premise: bool

    @property
    def holds(self):
        return self.bayes_xi <= self.xi_bound


def mean_model_upper_bound(grid, params, mixture, t, p, b_tol=1e-6):
    """Upper bound ``xi*_t <= xi*_{F_p}(t)`` valid when the Bayesian
    investment is positive and both retentions agree."""

    probs = p.probs if isinstance(p, FilterState) else numpy.asarray(p)
    bound = solve_foc_full(params, mixture.collapse(probs), t)
    bayes = solve_foc_bayes(grid, params, mixture, t, probs)
    premise = bayes.xi_star > 0 and abs(bayes.b_star - bound.b_star) <= b_tol
    return MeanModelBound(
        xi_bound=bound.xi_star,
        b_bound=bound.b_star,
        regime=bound.regime,
        bayes_xi=bayes.xi_star,
        bayes_b=bayes.b_star,
        premise=bool(premise),
    )


@dataclass
class ConvergenceReport(object):
    """Successive differences of ``g(0, .)`` on the coarse lattice under
    halving of ``dt`` and ``h``."""

    frame: pandas.DataFrame
    orders: list = field(default_factory=list)


def convergence_study(params, mixture, spec=None, levels=3):
    """Empirical order of the scheme from ``levels`` successive
    refinements; reported, never asserted."""

    spec = spec or GridSpec()
    if levels < 3:
        raise InvalidGridSpec("a convergence study needs at least 3 levels")
    sample_points = simplex_lattice(
        mixture.m, spec.simplex_divisions if mixture.m > 1 else 1
    )
    rows, previous, diffs = [], None, []
    current = spec
    for level in range(levels):
        grid = value_iteration(params, mixture, current)
        g0 = grid.g(0.0, sample_points)
        diff = math.nan
        if previous is not None:
            diff = float(numpy.abs(g0 - previous).max())
            diffs.append(diff)
        rows.append(
            {
                "level": level,
                "time_steps": current.time_steps,
                "simplex_divisions": current.simplex_divisions,
                "g0_mean": float(numpy.mean(g0)),
                "max_difference": diff,
            }
        )
        logger.info(
            "{} out of {} refinement levels solved.".format(level + 1, levels)
        )
        previous = g0
        current = current.refined()

    orders = []
    for coarse, fine in zip(diffs[:-1], diffs[1:]):
        orders.append(
            math.log2(coarse / fine) if coarse > 0 and fine > 0 else math.nan
        )
    frame = pandas.DataFrame(rows)
    frame["order"] = [math.nan, math.nan] + orders
    return ConvergenceReport(frame=frame, orders=orders)
