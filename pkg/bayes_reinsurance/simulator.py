from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy
import pandas
from scipy import integrate

from .distributions import ABOVE, BELOW, ClaimFamily, ClaimMixture
from .filter import (
    FilterState,
    filter_path,
    jump_update_many,
    posterior_at,
)
from .foc_full import solve_foc_full, independent_case_strategy
from .market import discount_factor
from .utils import RunningMoments

logger = logging.getLogger(__name__)

STEPS_PER_YEAR = 500
BATCH_SIZE = 10000


class Strategy(object):
    """A feedback rule ``(t, p_{t-}) -> (xi, b)``.

    ``decide`` is vectorized: ``t`` is a scalar or one time per row of the
    ``(n, m)`` filter array, and two length-``n`` arrays are returned.
    """

    def decide(self, t, probs):
        raise NotImplementedError


class ConstantStrategy(Strategy):
    def __init__(self, xi, b):
        if not 0.0 <= b <= 1.0:
            raise ValueError("retention must lie in [0, 1], got {}".format(b))
        self.xi = float(xi)
        self.b = float(b)

    def __repr__(self):
        return "ConstantStrategy(xi={}, b={})".format(self.xi, self.b)

    def decide(self, t, probs):
        n = numpy.atleast_2d(probs).shape[0]
        return numpy.full(n, self.xi), numpy.full(n, self.b)


class DeterministicStrategy(Strategy):
    """A strategy that depends on time only, linear between the tabulated
    times."""

    def __init__(self, times, xi, b):
        self.times = numpy.asarray(times, dtype=float)
        self.xi = numpy.asarray(xi, dtype=float)
        self.b = numpy.clip(numpy.asarray(b, dtype=float), 0.0, 1.0)
        if not self.times.shape == self.xi.shape == self.b.shape:
            raise ValueError("times, xi and b must have the same length")

    @classmethod
    def full_information(cls, params, family, times=None):
        """The complete-information optimal strategy for ``family``."""

        if times is None:
            times = numpy.linspace(0.0, params.horizon, 21)
        solutions = [solve_foc_full(params, family, t) for t in times]
        return cls(
            times,
            [s.xi_star for s in solutions],
            [s.b_star for s in solutions],
        )

    @classmethod
    def independent_case(cls, params, mixture, p, times=None):
        """The strategy that is optimal when the stock never drops with
        claims, frozen at the filter ``p``."""

        if times is None:
            times = numpy.linspace(0.0, params.horizon, 21)
        points = [
            independent_case_strategy(params, mixture, t, p) for t in times
        ]
        return cls(times, [s.xi for s in points], [s.b for s in points])

    def decide(self, t, probs):
        n = numpy.atleast_2d(probs).shape[0]
        t = numpy.broadcast_to(numpy.asarray(t, dtype=float), (n,))
        return (
            numpy.interp(t, self.times, self.xi),
            numpy.interp(t, self.times, self.b),
        )


class PerturbedStrategy(Strategy):
    """``base`` with the investment scaled by ``xi_factor`` and the
    retention shifted by ``b_shift`` (clamped to ``[0, 1]``)."""

    def __init__(self, base, xi_factor=1.0, b_shift=0.0):
        self.base = base
        self.xi_factor = xi_factor
        self.b_shift = b_shift

    def decide(self, t, probs):
        xi, b = self.base.decide(t, probs)
        return xi * self.xi_factor, numpy.clip(b + self.b_shift, 0.0, 1.0)


@dataclass
class PathRecord(object):
    """One simulated path.

    ``times``, ``wealth``, ``filters``, ``xi``, ``b`` and ``increments``
    are sampled at every uniform step and claim time; a claim time appears
    twice, before and after the jump. ``claims_seen`` counts the claims
    each row's filter has absorbed. ``jumps`` holds the wealth change at
    each claim. ``jump_filters`` is the :func:`filter_path` frame of the
    claims, set by :func:`simulate_path`.
    """

    theta: int
    claim_times: numpy.ndarray
    claims: numpy.ndarray
    marks: numpy.ndarray
    times: numpy.ndarray
    wealth: numpy.ndarray
    filters: numpy.ndarray
    xi: numpy.ndarray
    b: numpy.ndarray
    increments: numpy.ndarray
    jumps: numpy.ndarray
    claims_seen: numpy.ndarray
    jump_filters: Optional[pandas.DataFrame] = None

    @property
    def terminal_wealth(self):
        return float(self.wealth[-1])

    def filter_at(self, t):
        """Filter after every claim up to and including ``t``."""

        if self.jump_filters is None:
            raise ValueError("path has no filter frame")
        return posterior_at(self.jump_filters, t)

    def to_frame(self):
        frame = pandas.DataFrame(
            self.filters,
            columns=[
                "p_{}".format(k + 1) for k in range(self.filters.shape[1])
            ],
        )
        frame.insert(0, "X_t", self.wealth)
        frame.insert(0, "t", self.times)
        frame["xi"] = self.xi
        frame["b"] = self.b
        return frame


@dataclass(frozen=True)
class UtilityEstimate(object):
    """Sample mean and standard error of a Monte Carlo functional.

    ``kind`` is ``utility`` for ``E[-exp(-alpha X_T)]``, ``g`` for the
    exponent functional and ``difference`` for paired comparisons.
    """

    mean: float
    std_error: float
    n_paths: int
    seed: int
    kind: str = "utility"

    def __post_init__(self):
        if self.kind == "utility" and self.mean > 0:
            raise ValueError(
                "exponential utility is negative, got mean {}".format(
                    self.mean
                )
            )

    def as_record(self):
        return {
            "mean": self.mean,
            "std_error": self.std_error,
            "n_paths": self.n_paths,
            "seed": self.seed,
        }


@dataclass
class _Inputs(object):
    step_times: numpy.ndarray
    theta: numpy.ndarray
    counts: numpy.ndarray
    claim_times: numpy.ndarray
    claims: numpy.ndarray
    marks: numpy.ndarray
    step_normals: numpy.ndarray
    claim_normals: numpy.ndarray

    @property
    def n(self):
        return self.theta.size

    @property
    def n_steps(self):
        return self.step_times.size - 1


def _as_mixture(model, prior=None):
    if isinstance(model, ClaimFamily):
        return ClaimMixture([model]), numpy.ones(1)
    if prior is None:
        return model, numpy.full(model.m, 1.0 / model.m)
    probs = prior.probs if isinstance(prior, FilterState) else prior
    return model, FilterState(probs).probs


def _step_times(params, start, steps_per_year):
    span = params.horizon - start
    n_steps = max(1, int(math.ceil(span * steps_per_year))) if span > 0 else 0
    return numpy.linspace(start, params.horizon, n_steps + 1)


def _draw_inputs(params, mixture, probs, step_times, rng, n):
    """Every random input of ``n`` paths, drawn in a fixed order that
    does not depend on the strategy."""

    start = step_times[0]
    span = params.horizon - start
    theta = rng.choice(mixture.m, size=n, p=probs)
    counts = rng.poisson(params.intensity * span, size=n)
    width = int(counts.max()) if n else 0
    u = rng.uniform(size=(n, width))
    u[numpy.arange(width)[None, :] >= counts[:, None]] = numpy.inf
    # padding sorts last and stays infinite
    claim_times = start + span * numpy.sort(u, axis=1)
    claims = numpy.ones((n, width))
    for k, family in enumerate(mixture):
        rows = theta == k
        if width and rows.any():
            claims[rows] = family.sample(rng, (int(rows.sum()), width))
    marks = params.jump_law.sample(rng, (n, width))
    step_normals = rng.standard_normal((n, step_times.size - 1))
    claim_normals = rng.standard_normal((n, width))
    return _Inputs(
        step_times, theta, counts, claim_times, claims, marks, step_normals,
        claim_normals
    )


def _antithetic(inputs):
    def twice(a):
        return numpy.concatenate([a, a])

    return _Inputs(
        inputs.step_times,
        twice(inputs.theta),
        twice(inputs.counts),
        twice(inputs.claim_times),
        twice(inputs.claims),
        twice(inputs.marks),
        numpy.concatenate([inputs.step_normals, -inputs.step_normals]),
        numpy.concatenate([inputs.claim_normals, -inputs.claim_normals]),
    )


def _advance(params, x, xi, b, dt, normal):
    """Exact solution of ``dX = (r X + (mu - r) xi + c(b)) dt + xi sigma
    dW`` over ``dt`` with constant controls."""

    drift = params.excess_return * xi + (
        params.premium_rate - (1.0 - b) * params.reinsurance_price
    )
    r = params.r
    if r == 0.0:
        growth, mean_factor, variance = 1.0, dt, dt
    else:
        growth = numpy.exp(r * dt)
        mean_factor = numpy.expm1(r * dt) / r
        variance = numpy.expm1(2.0 * r * dt) / (2.0 * r)
    return (
        x * growth
        + drift * mean_factor
        + params.sigma * xi * numpy.sqrt(variance) * normal
    )


def _run(params, mixture, inputs, strategy, x0, p0, record=False):
    """Terminal wealth of every path; with ``record`` also the sampled
    trajectory of path zero."""

    n = inputs.n
    rows = numpy.arange(n)
    width = inputs.claim_times.shape[1]
    wealth = numpy.full(n, float(x0))
    probs = numpy.tile(numpy.asarray(p0, dtype=float), (n, 1))
    pointer = numpy.zeros(n, dtype=int)
    trace = [] if record else None
    jumps = []

    def log_row(t, x, p, xi, b, dw):
        trace.append((t, x, p.copy(), xi, b, dw, int(pointer[0])))

    for k in range(inputs.n_steps):
        tau = numpy.full(n, inputs.step_times[k])
        end = inputs.step_times[k + 1]
        normal = inputs.step_normals[:, k].copy()
        active = numpy.ones(n, dtype=bool)
        while active.any():
            if width:
                pending = pointer < inputs.counts
                upcoming = inputs.claim_times[
                    rows, numpy.minimum(pointer, width - 1)
                ]
                upcoming = numpy.where(pending, upcoming, numpy.inf)
            else:
                upcoming = numpy.full(n, numpy.inf)
            hit = active & (upcoming <= end)
            stop = numpy.where(hit, upcoming, end)

            index = numpy.flatnonzero(active)
            xi, b = strategy.decide(tau[index], probs[index])
            dt = stop[index] - tau[index]
            tracing = record and index[0] == 0
            if tracing and not trace:
                log_row(tau[0], wealth[0], probs[0], xi[0], b[0], 0.0)
            wealth[index] = _advance(
                params, wealth[index], xi, b, dt, normal[index]
            )
            if tracing:
                log_row(
                    stop[0], wealth[0], probs[0], xi[0], b[0],
                    math.sqrt(dt[0]) * normal[0]
                )

            claimed = numpy.flatnonzero(hit)
            if claimed.size:
                pos = numpy.searchsorted(index, claimed)
                j = pointer[claimed]
                y = inputs.claims[claimed, j]
                z = inputs.marks[claimed, j]
                loss = b[pos] * y + xi[pos] * z * (y > params.threshold)
                wealth[claimed] -= loss
                probs[claimed] = jump_update_many(probs[claimed], y, mixture)
                pointer[claimed] += 1
                if tracing and claimed[0] == 0:
                    jumps.append(-loss[0])
                    log_row(
                        stop[0], wealth[0], probs[0], xi[0], b[0], 0.0
                    )
                tau[claimed] = upcoming[claimed]
                normal[claimed] = inputs.claim_normals[claimed, j]
            active = hit

    if not record:
        return wealth, None
    if not trace:
        trace.append(
            (
                inputs.step_times[0], wealth[0], probs[0].copy(), 0.0, 1.0,
                0.0, 0
            )
        )
    columns = list(zip(*trace))
    count = int(inputs.counts[0])
    path = PathRecord(
        theta=int(inputs.theta[0]),
        claim_times=inputs.claim_times[0, :count].copy(),
        claims=inputs.claims[0, :count].copy(),
        marks=inputs.marks[0, :count].copy(),
        times=numpy.array(columns[0], dtype=float),
        wealth=numpy.array(columns[1], dtype=float),
        filters=numpy.array(columns[2], dtype=float),
        xi=numpy.array(columns[3], dtype=float),
        b=numpy.array(columns[4], dtype=float),
        increments=numpy.array(columns[5], dtype=float),
        jumps=numpy.array(jumps, dtype=float),
        claims_seen=numpy.array(columns[6], dtype=int),
    )
    return wealth, path


def simulate_path(
    params, model, prior, strategy, seed, steps_per_year=STEPS_PER_YEAR
):
    """Simulate one path of claims, stock drops, filter and wealth.

    Parameters
    ----------
    params : ModelParams
    model : ClaimMixture or ClaimFamily
        With a mixture the family index is drawn from ``prior`` first;
        a single family fixes the claim law.
    prior : PriorSpec or array-like, optional
    strategy : Strategy
    seed : int
    steps_per_year : int, default 500
        Uniform diffusion steps; claim times are added as grid points.

    Returns
    -------
    PathRecord
    """

    mixture, probs = _as_mixture(model, prior)
    rng = numpy.random.default_rng(seed)
    step_times = _step_times(params, 0.0, steps_per_year)
    inputs = _draw_inputs(params, mixture, probs, step_times, rng, 1)
    _, path = _run(
        params, mixture, inputs, strategy, params.x0, probs, record=True
    )
    path.jump_filters = filter_path(
        FilterState(probs), path.claim_times, path.claims, mixture
    )
    return path


def _collect(n_paths, seed, batch_size, workers, sampler):
    """Merge the samples of independent batches in batch order."""

    if n_paths < 2:
        raise ValueError("at least 2 paths are needed, got {}".format(n_paths))
    sizes = [batch_size] * (n_paths // batch_size)
    if n_paths % batch_size:
        sizes.append(n_paths % batch_size)
    children = numpy.random.SeedSequence(seed).spawn(len(sizes))

    def run(item):
        child, size = item
        return RunningMoments.from_samples(
            sampler(numpy.random.default_rng(child), size)
        )

    jobs = list(zip(children, sizes))
    total = RunningMoments()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = map(run, jobs)
    for done, moments in enumerate(results, start=1):
        total = total.merge(moments)
        logger.info(
            "{} out of {} path batches simulated.".format(done, len(sizes))
        )
    return total


def _check_antithetic(n_paths, batch_size, antithetic):
    if antithetic and (n_paths % 2 or batch_size % 2):
        raise ValueError(
            "antithetic sampling needs even n_paths and batch_size"
        )


def _terminal_samples(
    params, mixture, probs, strategy, start, x0, steps_per_year, antithetic,
    functional
):
    step_times = _step_times(params, start, steps_per_year)

    def sampler(rng, size):
        drawn = size // 2 if antithetic else size
        inputs = _draw_inputs(params, mixture, probs, step_times, rng, drawn)
        if antithetic:
            inputs = _antithetic(inputs)
        wealth, _ = _run(params, mixture, inputs, strategy, x0, probs)
        values = functional(wealth)
        if antithetic:
            half = size // 2
            values = 0.5 * (values[:half] + values[half:])
        return values

    return sampler


def _estimate(moments, n_paths, seed, kind):
    return UtilityEstimate(
        mean=moments.mean,
        std_error=moments.std_error,
        n_paths=n_paths,
        seed=seed,
        kind=kind,
    )


def estimate_utility(
    params,
    model,
    strategy,
    n_paths,
    seed,
    prior=None,
    antithetic=False,
    batch_size=BATCH_SIZE,
    steps_per_year=STEPS_PER_YEAR,
    workers=1,
):
    """Monte Carlo estimate of ``E[-exp(-alpha X_T)]`` from ``x0`` at time
    zero.

    With ``antithetic`` the Brownian inputs come in sign-flipped pairs and
    the standard error is computed from pair averages.
    """

    _check_antithetic(n_paths, batch_size, antithetic)
    mixture, probs = _as_mixture(model, prior)
    alpha = params.alpha
    sampler = _terminal_samples(
        params, mixture, probs, strategy, 0.0, params.x0, steps_per_year,
        antithetic, lambda x: -numpy.exp(-alpha * x)
    )
    moments = _collect(n_paths, seed, batch_size, workers, sampler)
    return _estimate(moments, n_paths, seed, "utility")


def estimate_g(
    params,
    mixture,
    strategy,
    t,
    p,
    n_paths,
    seed,
    antithetic=False,
    batch_size=BATCH_SIZE,
    steps_per_year=STEPS_PER_YEAR,
    workers=1,
):
    """Monte Carlo estimate of ``g^{xi,b}(t, p)``.

    Starting from zero wealth at ``t`` with the family index drawn from
    ``p``, ``exp(-alpha X_T)`` is exactly the exponent of the defining
    expectation, because the wealth update integrates the drift between
    events exactly.
    """

    _check_antithetic(n_paths, batch_size, antithetic)
    mixture, probs = _as_mixture(mixture, p)
    alpha = params.alpha
    sampler = _terminal_samples(
        params, mixture, probs, strategy, t, 0.0, steps_per_year, antithetic,
        lambda x: numpy.exp(-alpha * x)
    )
    moments = _collect(n_paths, seed, batch_size, workers, sampler)
    return _estimate(moments, n_paths, seed, "g")


def compare_strategies(
    params,
    model,
    prior,
    first,
    second,
    n_paths,
    seed,
    batch_size=BATCH_SIZE,
    steps_per_year=STEPS_PER_YEAR,
    workers=1,
):
    """Paired estimate of ``E[U(X_T^first) - U(X_T^second)]`` with common
    random numbers."""

    mixture, probs = _as_mixture(model, prior)
    alpha = params.alpha
    step_times = _step_times(params, 0.0, steps_per_year)

    def sampler(rng, size):
        inputs = _draw_inputs(params, mixture, probs, step_times, rng, size)
        a, _ = _run(params, mixture, inputs, first, params.x0, probs)
        b, _ = _run(params, mixture, inputs, second, params.x0, probs)
        return numpy.exp(-alpha * b) - numpy.exp(-alpha * a)

    moments = _collect(n_paths, seed, batch_size, workers, sampler)
    return _estimate(moments, n_paths, seed, "difference")


def constant_strategy_g(params, mixture, t, p, xi, b):
    """Exact ``g^{xi,b}(t, p)`` of a constant strategy.

    Given the family index, claims form a compound Poisson process, so
    the expectation is ``exp`` of a time integral; the filter enters
    linearly.
    """

    mixture, probs = _as_mixture(mixture, p)
    horizon = params.horizon
    if t >= horizon:
        return 1.0
    premium = params.premium_rate - (1.0 - b) * params.reinsurance_price
    drift = params.excess_return * xi + premium

    def exponent_rate(s, family):
        a = params.alpha * discount_factor(params, s)
        jump = family.tilted_moment(
            a * b, params.threshold, BELOW, 0
        ) + params.jump_law.mgf(a * xi) * family.tilted_moment(
            a * b, params.threshold, ABOVE, 0
        )
        return (
            -a * drift
            + 0.5 * (a * params.sigma * xi) ** 2
            + params.intensity * (jump - 1.0)
        )

    total = 0.0
    for p_k, family in zip(probs, mixture):
        if p_k <= 0:
            continue
        if params.r == 0.0:
            exponent = exponent_rate(t, family) * (horizon - t)
        else:
            exponent, _ = integrate.quad(
                exponent_rate, t, horizon, args=(family,), epsrel=1e-12
            )
        total += p_k * math.exp(exponent)
    return total


def dump_paths(params, model, prior, strategy, n, seed, path):
    """Write ``n`` simulated paths to a CSV with a ``path`` column."""

    children = numpy.random.SeedSequence(seed).spawn(n)
    frames = []
    for index, child in enumerate(children):
        record = simulate_path(
            params, model, prior, strategy, numpy.random.default_rng(child)
        )
        frame = record.to_frame()
        frame.insert(0, "path", index)
        frames.append(frame)
    pandas.concat(frames, ignore_index=True).to_csv(
        path, index=False, float_format="%.10g"
    )
    return path
