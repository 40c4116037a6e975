"""Bayes-optimal threshold classifiers.

The classifier accepts an agent iff its feature exceeds a threshold. A
policy is a float array ``phi`` with one (possibly infinite) threshold per
group; a group-independent policy has all entries equal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import InvalidPayoffs, LengthMismatch


def _as_2x2(name, v):
    try:
        arr = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise InvalidPayoffs(f"{name} must be a 2x2 matrix of numbers") from None
    if arr.shape != (2, 2):
        raise InvalidPayoffs(f"{name} must be a 2x2 matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidPayoffs(f"{name} entries must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ClassifierPayoffs:
    """Classifier utility per outcome, ``v[y, yhat]``."""

    v: np.ndarray

    def __post_init__(self):
        v = _as_2x2("V", self.v)
        object.__setattr__(self, "v", v)
        if not (v[0, 0] > v[0, 1] and v[1, 1] > v[1, 0]):
            raise InvalidPayoffs(
                "V must reward correct predictions: need V00 > V01 and V11 > V10"
            )
        xi = (v[0, 0] - v[0, 1]) / (v[1, 1] - v[1, 0])
        if not (0 < xi < math.inf):
            raise InvalidPayoffs(f"xi must lie in (0, inf), got {xi}")

    @property
    def xi(self):
        v = self.v
        return float((v[0, 0] - v[0, 1]) / (v[1, 1] - v[1, 0]))

    @property
    def theta(self):
        """Posterior probability of qualification at which acceptance breaks even."""
        xi = self.xi
        return xi / (1.0 + xi)


def xi(V):
    return V.xi


def theta(V):
    return V.theta


def solve_threshold(d, V, s_bar):
    """Feature threshold maximizing utility when the mean qualification is ``s_bar``.

    Solves ``q1(phi)/q0(phi) = xi (1 - s_bar) / s_bar``. Returns ``-inf`` at
    ``s_bar = 1`` and ``+inf`` at ``s_bar = 0``.
    """
    s_bar = float(s_bar)
    if not 0.0 <= s_bar <= 1.0:
        raise ValueError(f"mean qualification must lie in [0, 1], got {s_bar}")
    if s_bar == 0.0:
        return math.inf
    return d.inverse_likelihood_ratio(V.xi * (1.0 - s_bar) / s_bar)


def acceptance_rate(d, phi, s):
    """Pr(accept | group) for threshold(s) ``phi`` and qualification rate(s) ``s``."""
    if type(phi) is float and type(s) is float:
        return s * (1.0 - d.cdf(1, phi)) + (1.0 - s) * (1.0 - d.cdf(0, phi))
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(s, dtype=float)
    out = s * (1.0 - d.cdf(1, phi)) + (1.0 - s) * (1.0 - d.cdf(0, phi))
    return float(out) if out.ndim == 0 else out


class Confusion(NamedTuple):
    """Joint outcome fractions Pr(Y=y, Yhat=yhat | G=g) plus error rates.

    Fields broadcast over groups when given arrays.
    """

    tn: np.ndarray  # y=0, yhat=0
    fp: np.ndarray  # y=0, yhat=1
    fn: np.ndarray  # y=1, yhat=0
    tp: np.ndarray  # y=1, yhat=1
    fpr: np.ndarray
    fnr: np.ndarray

    def matrix(self):
        """Outcome fractions indexed ``[y, yhat]`` (leading axes), groups last."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])


def confusion(d, phi, s):
    phi = np.asarray(phi, dtype=float)
    s = np.asarray(s, dtype=float)
    q0 = np.asarray(d.cdf(0, phi))
    q1 = np.asarray(d.cdf(1, phi))
    fpr = 1.0 - q0
    fnr = q1
    return Confusion(
        tn=(1.0 - s) * q0,
        fp=(1.0 - s) * fpr,
        fn=s * fnr,
        tp=s * (1.0 - q1),
        fpr=fpr,
        fnr=fnr,
    )


def utility(d, V, phi, mu, s):
    """Expected classifier utility of per-group thresholds ``phi``."""
    phi = np.asarray(phi, dtype=float)
    mu = np.asarray(mu, dtype=float)
    s = np.asarray(s, dtype=float)
    if not (phi.shape == mu.shape == s.shape):
        raise LengthMismatch(
            f"policy, group sizes and state differ in shape: {phi.shape}, {mu.shape}, {s.shape}"
        )
    c = confusion(d, phi, s)
    v = V.v
    per_group = v[0, 0] * c.tn + v[0, 1] * c.fp + v[1, 0] * c.fn + v[1, 1] * c.tp
    return float(np.dot(mu, per_group))


def uniform_policy(phi, n):
    return np.full(n, float(phi))
