"""Population response to a threshold policy.

The main model is the discrete-time replicator equation: within each group
the share of qualified agents grows in proportion to the fitness of
qualification relative to the group's mean fitness. Two comparison models
are also provided: a Markov transition model, where outcomes set the
chance of being qualified next round, and a best-response model, where
agents qualify when their private cost is below the gain in acceptance
probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .classifier import _as_2x2, confusion
from .errors import ConfigError, DegenerateFitness, InvalidPayoffs, NegativeFitness

NEGATIVE_FITNESS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class AgentSuccess:
    """Average success ``u[y, yhat]`` of strategy y under outcome yhat.

    ``U00 == U01`` is tolerated: it makes the fitness of non-qualification
    constant, which still yields a well-defined (monotone) fitness gap.
    """

    u: np.ndarray

    def __post_init__(self):
        u = _as_2x2("U", self.u)
        object.__setattr__(self, "u", u)
        if np.any(u < 0):
            raise InvalidPayoffs("U entries must be nonnegative")
        if not u[1, 1] > u[1, 0]:
            raise InvalidPayoffs("U11 must exceed U10")


class FitnessPair(NamedTuple):
    w0: float
    w1: float


def fitness(d, U, phi):
    """Fitness of non-qualification and qualification under threshold ``phi``.

    ``W_y = U[y,1] + (U[y,0] - U[y,1]) Q_y(phi)``, evaluated as the convex
    combination ``U[y,0] Q + U[y,1] (1 - Q)`` so the limits are exact. Works
    elementwise when ``phi`` is an array.
    """
    u = U.u
    w = []
    for y in (0, 1):
        q = np.asarray(d.cdf(y, phi))
        wy = u[y, 0] * q + u[y, 1] * (1.0 - q)
        if np.any(wy < -NEGATIVE_FITNESS_TOL):
            raise NegativeFitness(f"W{y} = {wy} is negative at phi = {phi}")
        wy = np.maximum(wy, 0.0)
        w.append(float(wy) if wy.ndim == 0 else wy)
    return FitnessPair(*w)


def replicator_step(mu, s, phi, d, U):
    """One replicator update with each group's fitness taken at its own threshold."""
    s = np.asarray(s, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), s.shape)
    w0, w1 = fitness(d, U, phi)
    w_bar = s * w1 + (1.0 - s) * w0
    if np.any(w_bar == 0):
        raise DegenerateFitness("mean fitness vanished; replicator update undefined")
    return s * w1 / w_bar


def markov_step(mu, s, phi, d, T):
    """``s' = sum_{y,yhat} Pr(y, yhat | g) T[y, yhat]``."""
    s = np.asarray(s, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), s.shape)
    c = confusion(d, phi, s)
    T = np.asarray(T, dtype=float)
    return c.tn * T[0, 0] + c.fp * T[0, 1] + c.fn * T[1, 0] + c.tp * T[1, 1]


@dataclass(frozen=True)
class CostDistribution:
    """Distribution of the private cost of qualifying (support on [0, inf))."""

    family: str = "uniform"
    lo: float = 0.0
    hi: float = 1.0
    rate: float = 1.0

    def __post_init__(self):
        if self.family == "uniform":
            if not (0 <= self.lo < self.hi < math.inf):
                raise ConfigError(f"uniform cost needs 0 <= lo < hi, got lo={self.lo}, hi={self.hi}")
        elif self.family == "exponential":
            if not (0 < self.rate < math.inf):
                raise ConfigError(f"exponential cost needs rate > 0, got {self.rate}")
        else:
            raise ConfigError(f"unknown cost family {self.family!r}; use uniform or exponential")

    def cdf(self, c):
        c = np.asarray(c, dtype=float)
        if self.family == "uniform":
            return np.clip((c - self.lo) / (self.hi - self.lo), 0.0, 1.0)
        return np.where(c > 0, -np.expm1(-self.rate * np.maximum(c, 0.0)), 0.0)


def best_response_step(mu, s, phi, d, omega, cost):
    """Share of agents whose cost is below ``omega * (Q0(phi) - Q1(phi))``.

    The gain is the increase in acceptance probability from being qualified.
    The result does not depend on ``s``.
    """
    s = np.asarray(s, dtype=float)
    phi = np.broadcast_to(np.asarray(phi, dtype=float), s.shape)
    gain = np.asarray(d.cdf(0, phi)) - np.asarray(d.cdf(1, phi))
    return np.asarray(cost.cdf(omega * gain), dtype=float)


MODELS = ("replicator", "markov", "best_response")


@dataclass(frozen=True, eq=False)
class DynamicsModel:
    model: str = "replicator"
    T: np.ndarray | None = None
    omega: float | None = None
    cost: CostDistribution | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown dynamics model {self.model!r}; known: {list(MODELS)}")
        if self.model == "markov":
            if self.T is None:
                raise ConfigError("markov dynamics require a transition matrix T")
            T = np.array(self.T, dtype=float)
            if T.shape != (2, 2):
                raise ConfigError(f"T must be 2x2, got shape {T.shape}")
            if np.any(T < 0) or np.any(T > 1):
                raise ConfigError("T entries must lie in [0, 1]")
            T.setflags(write=False)
            object.__setattr__(self, "T", T)
        elif self.T is not None:
            raise ConfigError(f"T is only valid for markov dynamics, not {self.model}")
        if self.model == "best_response":
            if self.omega is None or not self.omega > 0:
                raise ConfigError("best_response dynamics require omega > 0")
            if self.cost is None:
                object.__setattr__(self, "cost", CostDistribution())
        elif self.omega is not None or self.cost is not None:
            raise ConfigError(f"omega/cost are only valid for best_response, not {self.model}")


def advance(model, mu, s, phi, d, U=None):
    """Dispatch one step of the given dynamics model."""
    if model.model == "replicator":
        return replicator_step(mu, s, phi, d, U)
    if model.model == "markov":
        return markov_step(mu, s, phi, d, model.T)
    return best_response_step(mu, s, phi, d, model.omega, model.cost)
