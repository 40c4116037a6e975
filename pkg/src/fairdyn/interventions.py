"""Threshold policies a classifier may adopt, including fairness interventions.

Every generator maps the current state to a float array of per-group
thresholds. :func:`policy` dispatches on an :class:`InterventionSpec`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .classifier import acceptance_rate, solve_threshold, utility
from .errors import ConfigError, NonConvergence
from .state import mean_qualification

log = logging.getLogger(__name__)

TAGS = (
    "group_independent",
    "laissez_faire",
    "demographic_parity",
    "universal_subsidy",
    "feedback_control",
    "capacity_capped",
)

_FIELDS = {
    "group_independent": set(),
    "laissez_faire": set(),
    "demographic_parity": set(),
    "universal_subsidy": {"delta"},
    "feedback_control": {"epsilon"},
    "capacity_capped": {"cap", "inner"},
}
_OPTIONAL = {"universal_subsidy": {"inner"}}

DP_GRID = 64
DP_RATE_TOL = 1e-10
CAP_TOL = 1e-9
_ROOT_XTOL = 1e-13


@dataclass(frozen=True)
class InterventionSpec:
    tag: str = "group_independent"
    epsilon: float | None = None
    delta: float | None = None
    cap: float | None = None
    inner: InterventionSpec | None = None

    def __post_init__(self):
        if self.tag not in TAGS:
            raise ConfigError(f"unknown intervention {self.tag!r}; known: {list(TAGS)}", key="tag")
        present = {k for k in ("epsilon", "delta", "cap", "inner") if getattr(self, k) is not None}
        required = _FIELDS[self.tag]
        allowed = required | _OPTIONAL.get(self.tag, set())
        missing = required - present
        extra = present - allowed
        if missing:
            raise ConfigError(f"intervention {self.tag} requires {sorted(missing)}", key=sorted(missing)[0])
        if extra:
            raise ConfigError(f"intervention {self.tag} does not take {sorted(extra)}", key=sorted(extra)[0])
        for name in ("epsilon", "delta"):
            v = getattr(self, name)
            if v is not None and not math.isfinite(v):
                raise ConfigError(f"{name} must be finite", key=name)
        if self.cap is not None and not 0 < self.cap < 1:
            raise ConfigError(f"cap must lie in (0, 1), got {self.cap}", key="cap")

    @property
    def label(self):
        if self.tag == "feedback_control":
            return f"feedback_control(eps={self.epsilon:g})"
        if self.tag == "universal_subsidy":
            base = "" if self.inner is None else f",{self.inner.label}"
            return f"universal_subsidy(delta={self.delta:g}{base})"
        if self.tag == "capacity_capped":
            return f"capacity_capped(cap={self.cap:g},{self.inner.label})"
        return self.tag

    @property
    def shares_threshold(self):
        """Whether the generated policy always applies one threshold to every group."""
        if self.tag in ("group_independent",):
            return True
        if self.tag in ("universal_subsidy", "capacity_capped"):
            return self.inner is None or self.inner.shares_threshold
        return False


def group_independent_policy(d, V, mu, s):
    phi = solve_threshold(d, V, mean_qualification(mu, s))
    return np.full(len(s), phi)


def laissez_faire_policy(d, V, mu, s):
    """Each group gets the threshold that is optimal given its own qualification rate."""
    return np.array([solve_threshold(d, V, sg) for sg in np.asarray(s, dtype=float)])


def universal_subsidy(base, delta):
    """Lower every threshold by ``delta`` (a penalty when negative)."""
    return np.asarray(base, dtype=float) - delta


def feedback_control_delta(mu, s, epsilon):
    """Group-specific threshold perturbation that shrinks every sequential distance.

    ``dphi_g = -eps / (s_g (1 - s_g)) * (sum_{h>=g} alpha_h D_h + sum_{h<g} beta_h D_h)``
    with ``alpha_h = mu_{h+1} + ... + mu_n`` and ``beta_h = -(mu_1 + ... + mu_h)``.
    Groups whose rate has rounded onto 0 or 1 get no perturbation.
    """
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    n = s.size
    D = s[:-1] - s[1:]
    head = np.cumsum(mu)[:-1]
    alpha = 1.0 - head
    beta = -head
    out = np.empty(n)
    for g in range(n):
        out[g] = np.dot(alpha[g:], D[g:]) + np.dot(beta[:g], D[:g])
    var = s * (1.0 - s)
    # a group that rounded onto 0 or 1 is a fixed point; leave it alone
    safe = var > 0
    return np.where(safe, -epsilon * out / np.where(safe, var, 1.0), 0.0)


def feedback_control_policy(d, V, mu, s, epsilon):
    return group_independent_policy(d, V, mu, s) + feedback_control_delta(mu, s, epsilon)


def threshold_for_rate(d, s_g, a):
    """Threshold at which a group with qualification ``s_g`` is accepted at rate ``a``."""
    s_g, a = float(s_g), float(a)
    if a <= 0.0:
        return math.inf
    if a >= 1.0:
        return -math.inf

    def f(x):
        return acceptance_rate(d, float(x), s_g) - a

    w = d.scale()
    lo, hi = -w, w
    for _ in range(200):
        if f(lo) > 0:
            break
        lo -= 2 * (hi - lo)
    for _ in range(200):
        if f(hi) < 0:
            break
        hi += 2 * (hi - lo)
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if not (flo > 0 > fhi):
        # rate indistinguishable from 0 or 1 at float resolution
        return -math.inf if flo <= 0 else math.inf
    return optimize.brentq(f, lo, hi, xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200)


def equal_rate_policy(d, s, a):
    """Per-group thresholds accepting every group at the common rate ``a``."""
    return np.array([threshold_for_rate(d, sg, a) for sg in np.asarray(s, dtype=float)])


class ParitySolution(NamedTuple):
    phi: np.ndarray
    rate: float
    utility: float
    at_boundary: bool


def solve_demographic_parity(d, V, mu, s, *, grid=DP_GRID, tol=DP_RATE_TOL):
    """Utility-maximizing thresholds subject to equal acceptance rates.

    The feasible set is parameterized by the common acceptance rate ``a``;
    utility along it is scanned on ``grid`` interior points, then refined by
    golden-section search on the bracket around the best grid point until
    the bracket is narrower than ``tol``. The search is then polished by
    solving ``du/da = 0``, because utility is flat to rounding error over
    roughly 1e-8 in ``a`` around the optimum.
    """
    s = np.asarray(s, dtype=float)
    mu = np.asarray(mu, dtype=float)

    cache = {}

    def u(a):
        if a not in cache:
            cache[a] = utility(d, V, equal_rate_policy(d, s, a), mu, s)
        return cache[a]

    rates = (np.arange(grid) + 0.5) / grid
    values = [u(a) for a in rates]
    k = int(np.argmax(values))
    lo = 0.0 if k == 0 else rates[k - 1]
    hi = 1.0 if k == grid - 1 else rates[k + 1]

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = u(x1), u(x2)
    for _ in range(200):
        if hi - lo <= tol:
            break
        if f1 >= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = u(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = u(x2)
    else:
        raise NonConvergence("golden-section search on the parity rate did not converge")

    # best evaluated rate, so the result never falls below a scanned point
    best = max(cache, key=cache.get)
    # utility is flat to rounding near the optimum, so polish with the
    # first-order condition; keep the root unless it is worse beyond rounding
    root = _polish_rate(d, V, mu, s, max(lo - tol, 0.0), min(hi + tol, 1.0))
    if root is not None and u(root) >= cache[best] - 8 * np.finfo(float).eps * max(1.0, abs(cache[best])):
        best = root
    at_boundary = best <= tol or best >= 1.0 - tol
    if at_boundary:
        log.warning("demographic parity optimum is a trivial policy (rate %.3g)", best)
    return ParitySolution(equal_rate_policy(d, s, best), float(best), cache[best], at_boundary)


def parity_rate_derivative(d, V, mu, s, a):
    """d u(Phi(a)) / da along the equal-acceptance family."""
    phi = equal_rate_policy(d, s, a)
    if not np.all(np.isfinite(phi)):
        return math.nan
    v = V.v
    q0, q1 = d.pdf(0, phi), d.pdf(1, phi)
    gain = (1.0 - s) * q0 * (v[0, 0] - v[0, 1]) - s * q1 * (v[1, 1] - v[1, 0])
    slope = s * q1 + (1.0 - s) * q0
    return float(-np.dot(mu, gain / slope))


def _polish_rate(d, V, mu, s, lo, hi):
    def g(a):
        return parity_rate_derivative(d, V, mu, s, a)

    # widen the golden-section bracket until the derivative changes sign
    width = max(hi - lo, 1e-9)
    for _ in range(8):
        a, b = max(lo - width, 1e-12), min(hi + width, 1.0 - 1e-12)
        ga, gb = g(a), g(b)
        if not (math.isfinite(ga) and math.isfinite(gb)):
            return None
        if ga > 0 > gb:
            return optimize.brentq(g, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
        width *= 4
    return None


def demographic_parity_policy(d, V, mu, s, **opts):
    return solve_demographic_parity(d, V, mu, s, **opts).phi


def global_acceptance(d, mu, phi, s):
    return float(np.dot(mu, acceptance_rate(d, phi, s)))


def capacity_capped(d, mu, s, phi, cap):
    """Raise all thresholds by a common shift until global acceptance is at most ``cap``.

    Thresholds at ``-inf`` are first moved to a finite floor where acceptance
    is already 1 in floating point, so accept-all policies can be capped.
    """
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(s, dtype=float)
    if global_acceptance(d, mu, phi, s) <= cap:
        return phi
    w = d.scale()
    finite = phi[np.isfinite(phi)]
    floor = (finite.min() if finite.size else 0.0) - w
    while d.cdf(0, floor) > 0 or d.cdf(1, floor) > 0:
        floor -= 2 * w + abs(floor)
    base = np.where(phi == -math.inf, floor, phi)

    def excess(t):
        return global_acceptance(d, mu, base + t, s) - cap

    hi = w
    while excess(hi) > 0:
        hi *= 2
        if hi > 1e300:
            raise NonConvergence("could not find a threshold shift meeting the cap")
    t = optimize.brentq(excess, 0.0, hi, xtol=_ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=400)
    out = base + t
    if abs(excess(t)) > CAP_TOL:
        raise NonConvergence(f"capped acceptance misses {cap} by {excess(t):.3e}")
    return out


def policy(spec, d, V, mu, s):
    """Thresholds chosen by the classifier under ``spec`` at state ``s``."""
    tag = spec.tag
    if tag == "group_independent":
        return group_independent_policy(d, V, mu, s)
    if tag == "laissez_faire":
        return laissez_faire_policy(d, V, mu, s)
    if tag == "demographic_parity":
        return demographic_parity_policy(d, V, mu, s)
    if tag == "feedback_control":
        return feedback_control_policy(d, V, mu, s, spec.epsilon)
    if tag == "universal_subsidy":
        inner = spec.inner or InterventionSpec()
        return universal_subsidy(policy(inner, d, V, mu, s), spec.delta)
    if tag == "capacity_capped":
        return capacity_capped(d, mu, s, policy(spec.inner, d, V, mu, s), spec.cap)
    raise ConfigError(f"unknown intervention {tag!r}")
