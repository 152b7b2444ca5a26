from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy
import pandas
from scipy.special import logsumexp

from .errors import InvalidFilterState, ZeroLikelihood
from .utils import to_simplex

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FilterState(object):
    """Posterior probabilities of the unknown claim family index.

    ``probs`` is validated on construction, renormalized to sum to one
    and made read-only.
    """

    probs: numpy.ndarray

    def __post_init__(self):
        probs = to_simplex(self.probs, name=type(self).__name__)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def corner(cls, m, j):
        """The point mass on family ``j`` (zero-based)."""

        if not 0 <= j < m:
            raise InvalidFilterState(
                "corner index {} out of range for m={}".format(j, m)
            )
        probs = numpy.zeros(m)
        probs[j] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, m):
        return cls(numpy.full(m, 1.0 / m))

    @property
    def m(self):
        return self.probs.size

    @property
    def corner_index(self):
        """Index of the supporting family when ``self`` is a corner,
        otherwise ``None``."""

        support = numpy.flatnonzero(self.probs > 0)
        return int(support[0]) if support.size == 1 else None

    def __eq__(self, other):
        return isinstance(other, FilterState) and numpy.array_equal(
            self.probs, other.probs
        )

    def __hash__(self):
        return hash(self.probs.tobytes())


class PriorSpec(FilterState):
    """Initial distribution of the family index."""

    pass


def _check_claims(claims):
    claims = numpy.atleast_1d(numpy.asarray(claims, dtype=float))
    if numpy.any(~(claims > 0)):
        raise ValueError("claim sizes must be positive")
    return claims


def _check_dimension(p, mixture):
    if p.m != mixture.m:
        raise InvalidFilterState(
            "filter has {} entries but the mixture has {} families".format(
                p.m, mixture.m
            )
        )


def jump_update(p, y, mixture):
    """The filter after observing a claim of size ``y``.

    Parameters
    ----------
    p : FilterState
        Filter just before the claim.
    y : float
        Claim size.
    mixture : ClaimMixture

    Returns
    -------
    FilterState
        ``J(p, y)``; corners are fixed points.

    Raises
    ------
    ZeroLikelihood
        When every family with positive weight has zero density at ``y``.
    """

    _check_dimension(p, mixture)
    y = _check_claims(y)
    if y.size != 1:
        raise ValueError("jump_update takes a single claim")
    weighted = p.probs * mixture.densities(y)[0]
    total = weighted.sum()
    if not total > 0:
        raise ZeroLikelihood(
            "no family with positive weight explains claim {}".format(y[0])
        )
    return FilterState(weighted / total)


def jump_update_many(probs, claims, mixture):
    """Row-wise ``J(p_i, y_i)`` for an ``(n, m)`` array of filters."""

    probs = numpy.asarray(probs, dtype=float)
    claims = _check_claims(claims)
    weighted = probs * mixture.densities(claims)
    totals = weighted.sum(axis=1)
    if numpy.any(~(totals > 0)):
        bad = claims[~(totals > 0)]
        raise ZeroLikelihood(
            "no family with positive weight explains claims {}".format(
                bad[:5].tolist()
            )
        )
    return weighted / totals[:, None]


def batch_posterior(prior, claims, mixture):
    """Posterior of the family index given all ``claims`` at once.

    Log-likelihoods are accumulated and normalized with the max-log
    trick, so long claim records do not underflow.
    """

    _check_dimension(prior, mixture)
    claims = _check_claims(claims) if len(claims) else numpy.empty(0)
    if claims.size == 0:
        return FilterState(prior.probs)
    with numpy.errstate(divide="ignore"):
        log_lik = numpy.log(mixture.densities(claims)).sum(axis=0)
        log_post = numpy.log(prior.probs) + log_lik
    if not numpy.isfinite(log_post).any():
        raise ZeroLikelihood(
            "no family with positive prior weight explains all {} "
            "claims".format(claims.size)
        )
    return FilterState(numpy.exp(log_post - logsumexp(log_post)))


def predictive_density(p, y, mixture):
    """``sum_k p_k f_k(y)``, the density of the next claim."""

    _check_dimension(p, mixture)
    y = numpy.asarray(y, dtype=float)
    value = mixture.densities(y) @ p.probs
    return float(value[0]) if y.ndim == 0 else value


def filter_path(prior, claim_times, claims, mixture):
    """The piecewise constant filter keyed by jump times.

    Returns
    -------
    pandas.DataFrame
        One row for time zero and one per claim with columns ``time``,
        ``claim`` and ``p_1 .. p_m``; each row holds the filter from its
        time until the next row.
    """

    claim_times = numpy.asarray(claim_times, dtype=float)
    claims = numpy.asarray(claims, dtype=float)
    if claim_times.shape != claims.shape:
        raise ValueError("claim_times and claims must have the same length")
    if numpy.any(numpy.diff(claim_times) <= 0):
        raise ValueError("claim times must be strictly increasing")

    states = [FilterState(prior.probs)]
    for y in claims:
        states.append(jump_update(states[-1], y, mixture))

    frame = pandas.DataFrame(
        numpy.array([s.probs for s in states]),
        columns=["p_{}".format(k + 1) for k in range(mixture.m)],
    )
    frame.insert(0, "claim", numpy.concatenate([[numpy.nan], claims]))
    frame.insert(0, "time", numpy.concatenate([[0.0], claim_times]))
    return frame


def posterior_at(path, t):
    """Filter value at time ``t`` from a :func:`filter_path` frame."""

    index = numpy.searchsorted(path["time"].to_numpy(), t, side="right") - 1
    index = max(int(index), 0)
    columns = [c for c in path.columns if c.startswith("p_")]
    return FilterState(path.iloc[index][columns].to_numpy(float))
