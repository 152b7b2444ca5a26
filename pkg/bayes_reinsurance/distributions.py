from __future__ import annotations

import logging
import math

import numpy
import pandas
from scipy import integrate, special

from .errors import DivergentIntegral, InvalidClaimFamily, InvalidJumpLaw
from .utils import gauss_laguerre, gauss_legendre, to_simplex

logger = logging.getLogger(__name__)

BELOW = "below_L"
ABOVE = "above_L"
ALL = "all"
REGIONS = (BELOW, ABOVE, ALL)

QUAD_EPSREL = 1e-10
NORMALIZATION_TOL = 1e-8

# nodes per region of the fixed rules used for g-ratio integrals
QUADRATURE_NODES = 64
_LEGENDRE_PANELS = 4
_SEGMENT_NODES = 8
# exp(-50) relative to the mass at zero
_EXP_CUTOFF = 50.0
_SERIES_RADIUS = 1.0
_SERIES_TERMS = 24


def _check_region(region):
    if region not in REGIONS:
        raise ValueError(
            "region must be one of {}, got '{}'".format(REGIONS, region)
        )


def _check_order(order):
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2, got {}".format(order))


def _region_bounds(region, threshold, lower, upper):
    if region == BELOW:
        return lower, min(threshold, upper)
    if region == ABOVE:
        return max(threshold, lower), upper
    return lower, upper


def load_tabulated_csv(path):
    """Read a two-column ``(y, f(y))`` CSV file.

    A header row is accepted and skipped. Returns two float arrays.
    """

    frame = pandas.read_csv(path, header=None)
    if frame.shape[1] != 2:
        raise InvalidClaimFamily(
            "'{}' must have exactly two columns, found {}".format(
                path, frame.shape[1]
            )
        )
    frame = frame.apply(pandas.to_numeric, errors="coerce")
    if frame.iloc[0].isna().any():
        frame = frame.iloc[1:]
    if frame.isna().any().any():
        raise InvalidClaimFamily(
            "'{}' contains non-numeric entries".format(path)
        )
    return frame.iloc[:, 0].to_numpy(float), frame.iloc[:, 1].to_numpy(float)


class _PiecewiseLinearDensity(object):
    """A density given by linear interpolation of tabulated points and
    vanishing outside the tabulated range."""

    def __init__(self, x, f, error_cls, normalize=False, support=None):
        x = numpy.asarray(x, dtype=float)
        f = numpy.asarray(f, dtype=float)
        if x.ndim != 1 or x.shape != f.shape or x.size < 2:
            raise error_cls(
                "tabulated density needs two equally long columns with "
                "at least two rows"
            )
        if not (numpy.all(numpy.isfinite(x)) and numpy.all(numpy.isfinite(f))):
            raise error_cls("tabulated density contains non-finite values")
        if numpy.any(numpy.diff(x) <= 0):
            raise error_cls("tabulated grid must be strictly increasing")
        if numpy.any(f < 0):
            raise error_cls("tabulated density must be nonnegative")
        if support is not None:
            lo, hi = support
            if x[0] < lo or x[-1] > hi:
                raise error_cls(
                    "tabulated grid [{}, {}] leaves the support "
                    "[{}, {}]".format(x[0], x[-1], lo, hi)
                )

        total = integrate.trapezoid(f, x)
        if normalize:
            if total <= 0:
                raise error_cls("tabulated density has zero mass")
            f = f / total
        elif abs(total - 1.0) > NORMALIZATION_TOL:
            raise error_cls(
                "tabulated density integrates to {!r}, not 1".format(total)
            )

        self.x = x
        self.f = f
        self.slopes = numpy.diff(f) / numpy.diff(x)
        segment_mass = 0.5 * (f[:-1] + f[1:]) * numpy.diff(x)
        self.cdf_nodes = numpy.concatenate([[0.0], numpy.cumsum(segment_mass)])
        self.error_cls = error_cls

    @property
    def lower(self):
        return self.x[0]

    @property
    def upper(self):
        return self.x[-1]

    def density(self, y):
        return numpy.interp(y, self.x, self.f, left=0.0, right=0.0)

    def cdf(self, y):
        y = numpy.asarray(y, dtype=float)
        clipped = numpy.clip(y, self.x[0], self.x[-1])
        idx = numpy.clip(
            numpy.searchsorted(self.x, clipped, side="right") - 1,
            0,
            self.x.size - 2,
        )
        u = clipped - self.x[idx]
        value = (
            self.cdf_nodes[idx]
            + self.f[idx] * u
            + 0.5 * self.slopes[idx] * u ** 2
        )
        value = numpy.where(y <= self.x[0], 0.0, value)
        value = numpy.where(y >= self.x[-1], self.cdf_nodes[-1], value)
        return numpy.clip(value, 0.0, 1.0)

    def integrate(self, s, lower, upper, order):
        """``int_lower^upper y**order exp(s y) f(y) dy`` by adaptive
        quadrature."""

        lo = max(lower, self.x[0])
        hi = min(upper, self.x[-1])
        if hi <= lo:
            return 0.0
        points = self.x[(self.x > lo) & (self.x < hi)]

        def integrand(y):
            return y ** order * math.exp(s * y) * float(self.density(y))

        try:
            value, abserr, info, *rest = integrate.quad(
                integrand,
                lo,
                hi,
                points=points if points.size else None,
                epsabs=0.0,
                epsrel=QUAD_EPSREL,
                limit=max(50, 2 * points.size + 50),
                full_output=1,
            )
        except OverflowError as err:
            raise DivergentIntegral(
                "tilted integral overflows at s={}".format(s)
            ) from err
        if rest:
            # quad appends a message only when ier > 0
            raise DivergentIntegral(
                "quadrature did not converge on [{}, {}] at s={}: "
                "{}".format(lo, hi, s, rest[0])
            )
        if not math.isfinite(value):
            raise DivergentIntegral(
                "tilted integral is not finite at s={}".format(s)
            )
        logger.debug(
            "quad on [{}, {}] (s={}, order={}) used {} evaluations".format(
                lo, hi, s, order, info["neval"]
            )
        )
        return value

    def fixed_rule(self, s, lower, upper):
        lo = max(lower, self.x[0])
        hi = min(upper, self.x[-1])
        if hi <= lo:
            return numpy.empty(0), numpy.empty(0)
        inner = self.x[(self.x > lo) & (self.x < hi)]
        edges = numpy.concatenate([[lo], inner, [hi]])
        nodes, weights = [], []
        for a, b in zip(edges[:-1], edges[1:]):
            y, w = gauss_legendre(a, b, _SEGMENT_NODES)
            nodes.append(y)
            weights.append(w * numpy.exp(s * y) * self.density(y))
        return numpy.concatenate(nodes), numpy.concatenate(weights)

    def sample(self, rng, size):
        q = rng.uniform(0.0, self.cdf_nodes[-1], size=size)
        idx = numpy.clip(
            numpy.searchsorted(self.cdf_nodes, q, side="right") - 1,
            0,
            self.x.size - 2,
        )
        d = q - self.cdf_nodes[idx]
        f0 = self.f[idx]
        a = 0.5 * self.slopes[idx]
        disc = numpy.sqrt(numpy.maximum(f0 ** 2 + 4.0 * a * d, 0.0))
        denom = f0 + disc
        with numpy.errstate(divide="ignore", invalid="ignore"):
            u = numpy.where(denom > 0, 2.0 * d / denom, 0.0)
        width = self.x[idx + 1] - self.x[idx]
        return self.x[idx] + numpy.clip(u, 0.0, width)


class ClaimFamily(object):
    """An abstract claim-size law on ``(0, inf)``.

    Each family exposes its density, survival function, mean and the
    exponentially tilted moments ``int y**n exp(s y) f(y) dy`` over the
    regions below and above the dependence threshold.

    Methods
    -------
    tilted_moment :
        Tilted moment of order 0, 1 or 2 over a region.
    quadrature :
        Fixed nodes and weights for tilted integrals of a bounded
        function over a region.
    sample :
        Draw claim sizes.
    """

    __kind__ = None

    @property
    def max_tilt(self):
        """Supremum of the tilts ``s`` with a finite moment generating
        function."""

        return math.inf

    def density(self, y):
        raise NotImplementedError

    def cdf(self, y):
        raise NotImplementedError

    def survival(self, y):
        return 1.0 - self.cdf(y)

    @property
    def mean(self):
        return self.tilted_moment(0.0, 0.0, ALL, 1)

    def mgf(self, z):
        return self.tilted_moment(z, 0.0, ALL, 0)

    def tilted_moment(self, s, threshold, region, order):
        raise NotImplementedError

    def quadrature(self, region, s, threshold, n=QUADRATURE_NODES):
        raise NotImplementedError

    def sample(self, rng, size):
        raise NotImplementedError

    def _check_tilt(self, s):
        if not s < self.max_tilt:
            raise DivergentIntegral(
                "tilt {} is not below the moment generating bound {} "
                "of {}".format(s, self.max_tilt, self)
            )


class Exponential(ClaimFamily):
    """Exponentially distributed claims with rate ``rate``.

    Tilted moments use regularized incomplete gamma functions, so the
    parts below and above the threshold are both computed directly.
    """

    __kind__ = "exponential"

    def __init__(self, rate):
        rate = float(rate)
        if not (math.isfinite(rate) and rate > 0):
            raise InvalidClaimFamily(
                "exponential rate must be positive, got {}".format(rate)
            )
        self.rate = rate

    def __str__(self):
        return "Exponential({})".format(self.rate)

    __repr__ = __str__

    def __eq__(self, other):
        return isinstance(other, Exponential) and other.rate == self.rate

    def __hash__(self):
        return hash((self.__kind__, self.rate))

    @property
    def max_tilt(self):
        return self.rate

    @property
    def mean(self):
        return 1.0 / self.rate

    def density(self, y):
        y = numpy.asarray(y, dtype=float)
        return numpy.where(y > 0, self.rate * numpy.exp(-self.rate * y), 0.0)

    def cdf(self, y):
        y = numpy.asarray(y, dtype=float)
        return numpy.where(y > 0, -numpy.expm1(-self.rate * y), 0.0)

    def survival(self, y):
        y = numpy.asarray(y, dtype=float)
        return numpy.where(y > 0, numpy.exp(-self.rate * y), 1.0)

    def tilted_moment(self, s, threshold, region, order):
        _check_region(region)
        _check_order(order)
        self._check_tilt(s)
        beta = self.rate - s
        full = self.rate * math.factorial(order) / beta ** (order + 1)
        if region == ALL:
            return full
        x = beta * threshold
        if region == BELOW:
            return full * float(special.gammainc(order + 1, x))
        return full * float(special.gammaincc(order + 1, x))

    def quadrature(self, region, s, threshold, n=QUADRATURE_NODES):
        _check_region(region)
        self._check_tilt(s)
        beta = self.rate - s
        parts = []
        if region in (BELOW, ALL):
            upper = _EXP_CUTOFF / beta
            if region == BELOW:
                upper = min(threshold, upper)
            y, w = gauss_legendre(
                0.0, upper, max(n // _LEGENDRE_PANELS, 2), _LEGENDRE_PANELS
            )
            parts.append((y, w * self.rate * numpy.exp(-beta * y)))
        if region == ABOVE and math.isfinite(threshold):
            u, w = gauss_laguerre(n)
            scale = self.rate * math.exp(-beta * threshold) / beta
            parts.append((threshold + u / beta, w * scale))
        if not parts:
            return numpy.empty(0), numpy.empty(0)
        return (
            numpy.concatenate([p[0] for p in parts]),
            numpy.concatenate([p[1] for p in parts]),
        )

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size=size)


class TabulatedDensity(ClaimFamily):
    """Claims with a tabulated, piecewise linear density.

    The density vanishes beyond the last grid point, so every tilted
    integral is finite and the upper truncation is exact.
    """

    __kind__ = "tabulated"

    def __init__(self, y, f, normalize=False):
        self._table = _PiecewiseLinearDensity(
            y,
            f,
            InvalidClaimFamily,
            normalize=normalize,
            support=(0.0, math.inf),
        )
        mean = self.mean
        if not (math.isfinite(mean) and mean > 0):
            raise InvalidClaimFamily(
                "tabulated claims must have a positive finite mean"
            )

    def __str__(self):
        return "TabulatedDensity({} points on [{}, {}])".format(
            self._table.x.size, self._table.lower, self._table.upper
        )

    __repr__ = __str__

    @property
    def mean(self):
        return self._table.integrate(0.0, 0.0, math.inf, 1)

    def density(self, y):
        return self._table.density(y)

    def cdf(self, y):
        return self._table.cdf(y)

    def tilted_moment(self, s, threshold, region, order):
        _check_region(region)
        _check_order(order)
        lower, upper = _region_bounds(region, threshold, 0.0, math.inf)
        return self._table.integrate(s, lower, upper, order)

    def quadrature(self, region, s, threshold, n=QUADRATURE_NODES):
        _check_region(region)
        lower, upper = _region_bounds(region, threshold, 0.0, math.inf)
        return self._table.fixed_rule(s, lower, upper)

    def sample(self, rng, size):
        return self._table.sample(rng, size)


class MixedDensity(ClaimFamily):
    """The ``weights``-mixture of several claim families.

    Every integral is the weighted sum of the component integrals.
    """

    __kind__ = "mixture"

    def __init__(self, families, weights):
        self.families = tuple(families)
        self.weights = to_simplex(weights, len(self.families), "weights")

    def __str__(self):
        return "MixedDensity({})".format(
            ", ".join(
                "{:.4g}*{}".format(w, f)
                for w, f in zip(self.weights, self.families)
            )
        )

    __repr__ = __str__

    def _active(self):
        return [
            (w, f) for w, f in zip(self.weights, self.families) if w > 0
        ]

    @property
    def max_tilt(self):
        return min(f.max_tilt for _, f in self._active())

    @property
    def mean(self):
        return sum(w * f.mean for w, f in self._active())

    def density(self, y):
        return sum(w * f.density(y) for w, f in self._active())

    def cdf(self, y):
        return sum(w * f.cdf(y) for w, f in self._active())

    def tilted_moment(self, s, threshold, region, order):
        return sum(
            w * f.tilted_moment(s, threshold, region, order)
            for w, f in self._active()
        )

    def quadrature(self, region, s, threshold, n=QUADRATURE_NODES):
        nodes, weights = [], []
        for w, f in self._active():
            y, v = f.quadrature(region, s, threshold, n)
            nodes.append(y)
            weights.append(w * v)
        return numpy.concatenate(nodes), numpy.concatenate(weights)

    def sample(self, rng, size):
        index = rng.choice(len(self.families), size=size, p=self.weights)
        out = numpy.empty(size)
        for k, family in enumerate(self.families):
            mask = index == k
            if mask.any():
                out[mask] = family.sample(rng, int(mask.sum()))
        return out


class ClaimMixture(object):
    """The finite family ``F_1, ..., F_m`` of candidate claim laws.

    Parameters
    ----------
    families : sequence of ClaimFamily
        The candidates, indexed ``1..m`` in order.
    stochastically_ordered : bool, default False
        Assert ``F_1(x) >= F_2(x) >= ... >= F_m(x)``; verified on a grid
        at construction.
    """

    _ORDER_TOL = 1e-12

    def __init__(self, families, stochastically_ordered=False):
        self.families = tuple(families)
        if not self.families:
            raise InvalidClaimFamily("at least one claim family is required")
        for family in self.families:
            if not isinstance(family, ClaimFamily):
                raise InvalidClaimFamily(
                    "{!r} is not a claim family".format(family)
                )
        self.stochastically_ordered = bool(stochastically_ordered)
        if self.stochastically_ordered and not (
            self.is_stochastically_ordered()
        ):
            raise InvalidClaimFamily(
                "families are not ordered F_1 >= ... >= F_m "
                "(smallest claims first)"
            )

    def __len__(self):
        return len(self.families)

    def __iter__(self):
        return iter(self.families)

    def __getitem__(self, index):
        return self.families[index]

    @property
    def m(self):
        return len(self.families)

    @property
    def max_tilt(self):
        return min(f.max_tilt for f in self.families)

    def validation_grid(self, size=2001):
        scale = 40.0 * max(f.mean for f in self.families)
        grid = [numpy.linspace(0.0, scale, size)]
        for family in self.families:
            table = getattr(family, "_table", None)
            if table is not None:
                grid.append(table.x)
        return numpy.unique(numpy.concatenate(grid))

    def is_stochastically_ordered(self, grid=None):
        if grid is None:
            grid = self.validation_grid()
        cdfs = numpy.array([f.cdf(grid) for f in self.families])
        return bool(numpy.all(numpy.diff(cdfs, axis=0) <= self._ORDER_TOL))

    def densities(self, y):
        """Matrix of ``f_k(y_i)`` with shape ``(len(y), m)``."""

        y = numpy.atleast_1d(numpy.asarray(y, dtype=float))
        return numpy.stack([f.density(y) for f in self.families], axis=-1)

    def collapse(self, probs):
        """The predictive claim law ``sum_k p_k F_k``."""

        return MixedDensity(self.families, probs)


class JumpLaw(object):
    """An abstract law of the relative stock drop ``Z`` on ``(0, 1)``.

    Methods
    -------
    mgf :
        ``E[Z**order exp(u Z)]``, i.e. ``M_Z`` and its first two
        derivatives.
    sample :
        Draw relative drops.
    """

    __kind__ = None

    def mgf(self, u, order=0):
        raise NotImplementedError

    @property
    def mean(self):
        return float(self.mgf(0.0, 1))

    def sample(self, rng, size):
        raise NotImplementedError


def _uniform_series(u, order):
    # sum_n u**n / (n! (n + order + 1))
    total = numpy.zeros_like(u)
    term = numpy.ones_like(u)
    for n in range(_SERIES_TERMS):
        total = total + term / (n + order + 1)
        term = term * u / (n + 1)
    return total


class UniformOn01(JumpLaw):
    """Relative drops uniformly distributed on ``(0, 1)``."""

    __kind__ = "uniform"

    def __str__(self):
        return "UniformOn01()"

    __repr__ = __str__

    def __eq__(self, other):
        return isinstance(other, UniformOn01)

    def __hash__(self):
        return hash(self.__kind__)

    def mgf(self, u, order=0):
        _check_order(order)
        u = numpy.asarray(u, dtype=float)
        if order == 0:
            # exprel evaluates (e^u - 1)/u through its removable singularity
            value = special.exprel(u)
        else:
            small = numpy.abs(u) < _SERIES_RADIUS
            safe = numpy.where(small, 1.0, u)
            e = numpy.exp(safe)
            if order == 1:
                closed = (e * (safe - 1.0) + 1.0) / safe ** 2
            else:
                closed = (e * (safe ** 2 - 2.0 * safe + 2.0) - 2.0) / safe ** 3
            value = numpy.where(small, _uniform_series(u, order), closed)
        return float(value) if value.ndim == 0 else value

    @property
    def mean(self):
        return 0.5

    def sample(self, rng, size):
        return rng.uniform(0.0, 1.0, size=size)


class TabulatedOn01(JumpLaw):
    """Relative drops with a tabulated, piecewise linear density on
    ``(0, 1)``."""

    __kind__ = "tabulated"

    def __init__(self, z, q, normalize=False):
        self._table = _PiecewiseLinearDensity(
            z, q, InvalidJumpLaw, normalize=normalize, support=(0.0, 1.0)
        )
        mean = self.mean
        if not 0.0 < mean < 1.0:
            raise InvalidJumpLaw(
                "E[Z] must lie in (0, 1), got {}".format(mean)
            )

    def __str__(self):
        return "TabulatedOn01({} points)".format(self._table.x.size)

    __repr__ = __str__

    def mgf(self, u, order=0):
        _check_order(order)
        u = numpy.asarray(u, dtype=float)
        values = numpy.array(
            [
                self._table.integrate(float(v), 0.0, 1.0, order)
                for v in u.ravel()
            ]
        ).reshape(u.shape)
        return float(values) if values.ndim == 0 else values

    def sample(self, rng, size):
        return self._table.sample(rng, size)


def _tabulated_points(spec, error_cls):
    if "points" in spec:
        points = numpy.asarray(spec["points"], dtype=float)
        if points.ndim != 2 or points.shape[1] != 2:
            raise error_cls("'points' must be a list of [x, density] pairs")
        return points[:, 0], points[:, 1]
    if "file" in spec:
        return load_tabulated_csv(spec["file"])
    raise error_cls("tabulated kind needs 'points' or 'file'")


def get_claim_family(spec):
    """Build a claim family from a ``{"kind": ..., ...}`` mapping."""

    kind = str(spec.get("kind", "")).lower().strip()
    if kind == Exponential.__kind__:
        if "rate" not in spec:
            raise InvalidClaimFamily("exponential family needs 'rate'")
        return Exponential(spec["rate"])
    if kind == TabulatedDensity.__kind__:
        y, f = _tabulated_points(spec, InvalidClaimFamily)
        return TabulatedDensity(y, f, normalize=spec.get("normalize", False))
    raise InvalidClaimFamily(
        "Claim family not found for '{}'".format(spec.get("kind"))
    )


def get_jump_law(spec):
    """Build a jump law from a ``{"kind": ..., ...}`` mapping."""

    kind = str(spec.get("kind", "")).lower().strip()
    if kind == UniformOn01.__kind__:
        return UniformOn01()
    if kind == TabulatedOn01.__kind__:
        z, q = _tabulated_points(spec, InvalidJumpLaw)
        return TabulatedOn01(z, q, normalize=spec.get("normalize", False))
    raise InvalidJumpLaw(
        "Jump law not found for '{}'".format(spec.get("kind"))
    )


def tilted_moment(family, s, threshold, region=ALL, order=0):
    """``int y**order exp(s y) f(y) dy`` over ``region``.

    Parameters
    ----------
    family : ClaimFamily
    s : float
        Tilt rate per unit of claim currency.
    threshold : float
        Dependence threshold ``L``.
    region : {"below_L", "above_L", "all"}
    order : {0, 1, 2}

    Raises
    ------
    DivergentIntegral
        When the tilt reaches the moment generating bound or the
        quadrature fails.
    """

    return family.tilted_moment(s, threshold, region, order)


def tilted_tail_mass(family, s, threshold):
    """``int_L^inf exp(s y) f(y) dy``."""

    return family.tilted_moment(s, threshold, ABOVE, 0)


def tilted_mean(family, s, threshold, region=ALL):
    """``int y exp(s y) f(y) dy`` over ``region``."""

    return family.tilted_moment(s, threshold, region, 1)


def jump_mgf(law, u, order=0):
    """``M_Z`` (order 0) and its first two derivatives at ``u``."""

    return law.mgf(u, order)
