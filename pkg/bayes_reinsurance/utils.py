from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy
from numpy.polynomial.laguerre import laggauss
from numpy.polynomial.legendre import leggauss

from .errors import InvalidFilterState

SIMPLEX_TOL = 1e-12


def to_simplex(values, m=None, name="probability vector"):
    """Validate ``values`` as a point of the simplex and renormalize it.

    Parameters
    ----------
    values : array-like
        Candidate probabilities.
    m : int, optional
        Expected dimension.
    name : str
        Used in error messages.

    Returns
    -------
    probs : numpy.ndarray
        Nonnegative float vector summing to one.
    """

    probs = numpy.asarray(values, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise InvalidFilterState(
            "{} must be a non-empty vector, got shape {}".format(
                name, probs.shape
            )
        )
    if m is not None and probs.size != m:
        raise InvalidFilterState(
            "{} has {} entries but {} families are defined".format(
                name, probs.size, m
            )
        )
    if not numpy.all(numpy.isfinite(probs)):
        raise InvalidFilterState("{} contains non-finite entries".format(name))
    if numpy.any(probs < -SIMPLEX_TOL) or numpy.any(probs > 1 + SIMPLEX_TOL):
        raise InvalidFilterState(
            "{} has entries outside [0, 1]: {}".format(name, probs.tolist())
        )
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise InvalidFilterState(
            "{} sums to {} instead of 1".format(name, total)
        )
    probs = numpy.clip(probs, 0.0, 1.0)
    return probs / probs.sum()


def simplex_lattice(m, divisions):
    """All points of the simplex whose coordinates are multiples of
    ``1 / divisions``, ordered lexicographically by the first coordinate
    descending."""

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for head in range(total, -1, -1):
            for tail in compositions(total - head, parts - 1):
                yield (head,) + tail

    counts = numpy.array(list(compositions(divisions, m)), dtype=float)
    return counts / divisions


@lru_cache(maxsize=32)
def _legendre(n):
    return leggauss(n)


@lru_cache(maxsize=32)
def _laguerre(n):
    return laggauss(n)


def gauss_legendre(lower, upper, n, panels=1):
    """Composite Gauss-Legendre nodes and weights on ``[lower, upper]``."""

    if upper <= lower:
        return numpy.empty(0), numpy.empty(0)
    x, w = _legendre(n)
    edges = numpy.linspace(lower, upper, panels + 1)
    half = 0.5 * numpy.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def gauss_laguerre(n):
    """Nodes and weights for ``int_0^inf phi(u) exp(-u) du``."""

    return _laguerre(n)


@dataclass
class RunningMoments(object):
    """Count, mean and centered second moment of a stream of samples.

    Batches are merged with the pairwise update of Chan et al., so the
    result only depends on the order in which batches are merged.
    """

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def from_samples(cls, samples):
        samples = numpy.asarray(samples, dtype=float)
        if samples.size == 0:
            return cls()
        mean = float(samples.mean())
        return cls(
            count=int(samples.size),
            mean=mean,
            m2=float(numpy.sum((samples - mean) ** 2)),
        )

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            return RunningMoments(other.count, other.mean, other.m2)
        count = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / count
        m2 = self.m2 + other.m2 + delta ** 2 * self.count * other.count / count
        return RunningMoments(count, mean, m2)

    @property
    def variance(self):
        if self.count < 2:
            return 0.0
        return self.m2 / (self.count - 1)

    @property
    def std_error(self):
        if self.count < 2:
            return 0.0
        return math.sqrt(self.variance / self.count)
