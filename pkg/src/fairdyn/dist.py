"""Label-conditioned feature distributions.

A :class:`FeaturePair` bundles the densities ``q_0``/``q_1`` of the feature
among unqualified and qualified agents. Everything downstream talks to it
through ``pdf``, ``cdf``, ``likelihood_ratio`` and
``inverse_likelihood_ratio`` only, so new families need nothing else.

Thresholds are extended reals: ``cdf`` accepts ``-inf``/``+inf`` and the
ratio inversion returns them when no finite solution exists.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .errors import InvalidDistribution, NonConvergence

_SQRT_2PI = math.sqrt(2.0 * math.pi)
_SQRT_2 = math.sqrt(2.0)

# generic inversion
BISECT_WIDTH = 1e-12
BISECT_MAXITER = 200
_MAX_DOUBLINGS = 1100


def _scalar(out, x):
    return float(out) if np.ndim(x) == 0 else out


class FeaturePair:
    """Base class for a pair of feature densities with monotone likelihood ratio.

    Subclasses implement :meth:`pdf` and :meth:`cdf`. The likelihood ratio,
    its inverse and its derivative have generic (numerical) fallbacks.
    """

    family = "abstract"

    def pdf(self, y, x):
        raise NotImplementedError

    def cdf(self, y, x):
        raise NotImplementedError

    def scale(self):
        """Characteristic width of the feature axis, used to size brackets."""
        return 1.0

    def likelihood_ratio(self, x):
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return self.pdf(1, x) / self.pdf(0, x)

    def likelihood_ratio_derivative(self, x, h=1e-6):
        x = float(x)
        return (self.likelihood_ratio(x + h) - self.likelihood_ratio(x - h)) / (2 * h)

    def inverse_likelihood_ratio(self, r):
        """Solve ``q1(x)/q0(x) = r`` for x by bracket doubling and bisection.

        Returns ``-inf`` when r is below the ratio's infimum and ``+inf`` when
        it is above the supremum.
        """
        r = float(r)
        if not r > 0:
            if r == 0:
                return -math.inf
            raise ValueError(f"likelihood ratio must be positive, got {r}")
        if math.isinf(r):
            return math.inf

        def f(x):
            return self.likelihood_ratio(x) - r

        f0 = f(0.0)
        if f0 == 0:
            return 0.0
        # expand away from 0 in the direction of the root
        step = 1.0
        lo = hi = 0.0
        for _ in range(_MAX_DOUBLINGS):
            if f0 < 0:
                lo, hi = hi, step
                if not math.isfinite(hi):
                    return math.inf
                if f(hi) >= 0:
                    break
            else:
                lo, hi = -step, lo
                if not math.isfinite(lo):
                    return -math.inf
                if f(lo) <= 0:
                    break
            step *= 2.0
        else:
            return math.inf if f0 < 0 else -math.inf

        for _ in range(BISECT_MAXITER):
            mid = 0.5 * (lo + hi)
            if hi - lo <= BISECT_WIDTH or mid in (lo, hi):
                return mid
            if f(mid) < 0:
                lo = mid
            else:
                hi = mid
        raise NonConvergence(
            f"ratio inversion for r={r} did not reach width {BISECT_WIDTH} "
            f"in {BISECT_MAXITER} bisections"
        )

    def validate_mlr(self, grid):
        """True iff the likelihood ratio strictly increases along ``grid``."""
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1 or grid.size < 2:
            raise ValueError("grid needs at least two points")
        if np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be strictly increasing")
        lr = np.asarray(self.likelihood_ratio(grid), dtype=float)
        return bool(np.all(np.diff(lr) > 0))

    def check_mlr(self):
        grid = np.linspace(-6.0, 6.0, 241) * self.scale()
        if not self.validate_mlr(grid):
            raise InvalidDistribution(f"{self.family}: likelihood ratio is not increasing")
        return self


@dataclass(frozen=True)
class GaussianPair(FeaturePair):
    """Normal feature densities with shared standard deviation.

    The likelihood ratio is ``exp((m1 - m0)(2x - m0 - m1) / (2 sigma^2))``,
    increasing iff ``mean1 > mean0``. Construction only checks ``sigma``;
    call :meth:`validate_mlr` or :meth:`check_mlr` for the ordering.
    """

    mean0: float = -1.0
    mean1: float = 1.0
    sigma: float = 1.0
    family = "gaussian"

    def __post_init__(self):
        for name in ("mean0", "mean1", "sigma"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidDistribution(f"{name} must be a finite real, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.sigma <= 0:
            raise InvalidDistribution(f"sigma must be positive, got {self.sigma}")

    def check_mlr(self):
        if not self.mean1 > self.mean0:
            raise InvalidDistribution(
                "likelihood ratio q1/q0 must increase: need mean1 > mean0 "
                f"(got mean0={self.mean0}, mean1={self.mean1})"
            )
        return self

    def _mean(self, y):
        if y == 0:
            return self.mean0
        if y == 1:
            return self.mean1
        raise ValueError(f"label must be 0 or 1, got {y!r}")

    def scale(self):
        return self.sigma

    def pdf(self, y, x):
        z = (np.asarray(x, dtype=float) - self._mean(y)) / self.sigma
        return _scalar(np.exp(-0.5 * z * z) / (self.sigma * _SQRT_2PI), x)

    def cdf(self, y, x):
        if type(x) is float:
            # scalar fast path; erfc is accurate in both tails
            return 0.5 * math.erfc((self._mean(y) - x) / (self.sigma * _SQRT_2))
        z = (np.asarray(x, dtype=float) - self._mean(y)) / self.sigma
        return _scalar(ndtr(z), x)

    def _slope(self):
        return (self.mean1 - self.mean0) / self.sigma**2

    def likelihood_ratio(self, x):
        mid = 0.5 * (self.mean0 + self.mean1)
        with np.errstate(over="ignore"):
            out = np.exp(self._slope() * (np.asarray(x, dtype=float) - mid))
        return _scalar(out, x)

    def likelihood_ratio_derivative(self, x, h=None):
        return self._slope() * self.likelihood_ratio(x)

    def inverse_likelihood_ratio(self, r):
        r = float(r)
        if r < 0 or math.isnan(r):
            raise ValueError(f"likelihood ratio must be positive, got {r}")
        if r == 0:
            return -math.inf
        if math.isinf(r):
            return math.inf
        return 0.5 * (self.mean0 + self.mean1) + math.log(r) / self._slope()


FAMILIES = {"gaussian": GaussianPair}


def make_pair(family="gaussian", **params):
    """Build a FeaturePair from a family tag and its parameters."""
    try:
        cls = FAMILIES[family]
    except KeyError:
        raise InvalidDistribution(
            f"unknown distribution family {family!r}; known: {sorted(FAMILIES)}"
        ) from None
    try:
        pair = cls(**params)
    except TypeError as exc:
        raise InvalidDistribution(f"bad parameters for {family}: {exc}") from None
    return pair.check_mlr()
