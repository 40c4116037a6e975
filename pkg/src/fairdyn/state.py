"""Population state and the (D, s_bar) coordinate system.

States are plain float arrays of per-group qualification rates. ``D`` holds
the signed distances between sequential groups, ``D[g] = s[g] - s[g+1]``;
together with the mean qualification ``s_bar`` it is a (non-orthogonal)
basis for the state space.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import ConfigError, LengthMismatch, OutOfSimplex

MU_SUM_TOL = 1e-12


def group_profile(mu):
    """Validate relative group sizes and return them as a read-only array."""
    mu = np.array(mu, dtype=float)
    if mu.ndim != 1 or mu.size < 2:
        raise ConfigError(f"mu needs at least two groups, got {mu.tolist()}")
    if np.any(mu <= 0) or np.any(mu >= 1):
        raise ConfigError(f"each mu_g must lie in (0, 1), got {mu.tolist()}")
    if abs(mu.sum() - 1.0) > MU_SUM_TOL:
        raise ConfigError(f"mu must sum to 1, sums to {mu.sum()!r}")
    mu.setflags(write=False)
    return mu


def population_state(s, n=None):
    """Validate an interior state: every rate strictly inside (0, 1)."""
    s = np.array(s, dtype=float)
    if s.ndim != 1:
        raise ConfigError("state must be a vector of qualification rates")
    if n is not None and s.size != n:
        raise LengthMismatch(f"state has {s.size} groups, expected {n}")
    if np.any(s <= 0) or np.any(s >= 1) or not np.all(np.isfinite(s)):
        raise OutOfSimplex(f"interior state required, every s_g in (0, 1); got {s.tolist()}")
    return s


def boundary_state(s):
    """A state on the boundary of the unit cube (e.g. a trivial equilibrium)."""
    s = np.array(s, dtype=float)
    if s.ndim != 1 or np.any(s < 0) or np.any(s > 1):
        raise OutOfSimplex(f"every s_g must lie in [0, 1]; got {s.tolist()}")
    return s


class CoordState(NamedTuple):
    D: np.ndarray
    s_bar: float


def _check_lengths(mu, s):
    if len(mu) != len(s):
        raise LengthMismatch(f"mu has {len(mu)} groups but state has {len(s)}")


def mean_qualification(mu, s):
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    _check_lengths(mu, s)
    return float(np.dot(mu, s))


def distance(s, g, h):
    """Signed qualification distance s_g - s_h (0-based group indices)."""
    return float(s[g] - s[h])


def to_coords(mu, s):
    s = np.asarray(s, dtype=float)
    s_bar = mean_qualification(mu, s)
    return CoordState(D=s[:-1] - s[1:], s_bar=s_bar)


def from_coords(mu, c, *, check=True):
    """Invert :func:`to_coords`.

    ``s_g = s_bar + sum_{h>=g} D_h - sum_h (mu_1 + ... + mu_h) D_h``.
    """
    mu = np.asarray(mu, dtype=float)
    D = np.asarray(c.D, dtype=float)
    if D.size != mu.size - 1:
        raise LengthMismatch(f"D must have {mu.size - 1} components for {mu.size} groups")
    # tail[g] = sum_{h >= g} D_h, with tail[n-1] = 0
    tail = np.append(np.cumsum(D[::-1])[::-1], 0.0)
    offset = np.dot(np.cumsum(mu)[:-1], D)
    s = c.s_bar + tail - offset
    if check and (np.any(s < 0) or np.any(s > 1)):
        raise OutOfSimplex(f"coordinates map outside [0, 1]^n: {s.tolist()}")
    return s


def disparity_norm(D, p=1.0):
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(np.asarray(D, dtype=float))
    top = a.max(initial=0.0)
    if top == 0:
        return 0.0
    # rescale so tiny components do not underflow when raised to the p-th power
    return float(top * np.linalg.norm(a / top, ord=p))
