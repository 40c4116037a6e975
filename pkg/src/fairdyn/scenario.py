"""Scenario definition and the single-step map policy -> classify -> respond."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import ClassifierPayoffs
from .dist import FeaturePair, GaussianPair
from .dynamics import AgentSuccess, DynamicsModel, advance
from .errors import ConfigError
from .interventions import InterventionSpec, policy
from .state import group_profile


@dataclass(frozen=True, eq=False)
class Scenario:
    """Immutable problem definition.

    ``U`` may be omitted only for dynamics other than the replicator.
    """

    mu: np.ndarray
    V: ClassifierPayoffs
    U: AgentSuccess | None = None
    d: FeaturePair = field(default_factory=GaussianPair)
    dynamics: DynamicsModel = field(default_factory=DynamicsModel)
    intervention: InterventionSpec = field(default_factory=InterventionSpec)

    def __post_init__(self):
        object.__setattr__(self, "mu", group_profile(self.mu))
        if self.dynamics.model == "replicator" and self.U is None:
            raise ConfigError("replicator dynamics require agent successes U", key="U")

    @property
    def n(self):
        return len(self.mu)

    def with_intervention(self, spec):
        return Scenario(self.mu, self.V, self.U, self.d, self.dynamics, spec)


def policy_for(sc, s):
    return policy(sc.intervention, sc.d, sc.V, sc.mu, s)


def step(sc, s, phi):
    """Population response to thresholds ``phi`` under the scenario's dynamics."""
    return advance(sc.dynamics, sc.mu, s, phi, sc.d, sc.U)


def transition(sc, s):
    """Policy computed from ``s`` and the state it produces: ``(phi, s_next)``."""
    phi = policy_for(sc, s)
    return phi, step(sc, s, phi)
