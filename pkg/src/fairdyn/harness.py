"""Trajectories, convergence detection, phase-portrait sweeps and intervention comparison."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .analysis import equilibrium_report, fitness_gap
from .classifier import acceptance_rate, confusion
from .errors import ConfigError
from .scenario import policy_for, step
from .state import disparity_norm, mean_qualification, population_state

DEFAULT_STEPS = 10_000
DEFAULT_WINDOW = 100
DEFAULT_TOL = 1e-10
PARITY_TOL = 1e-9
HYPERPLANE_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    t: int
    s: np.ndarray
    phi: np.ndarray
    s_bar: float
    disparity_l1: float
    acc: np.ndarray
    fpr: np.ndarray
    fnr: np.ndarray
    gap: float | None  # fitness gap at the shared threshold, if there is one

    @property
    def eo_satisfied(self):
        return bool(np.ptp(self.fpr) <= PARITY_TOL and np.ptp(self.fnr) <= PARITY_TOL)

    @property
    def dp_satisfied(self):
        return bool(np.ptp(self.acc) <= PARITY_TOL)


def make_record(sc, t, s, phi):
    c = confusion(sc.d, phi, s)
    gap = None
    if sc.U is not None and np.all(phi == phi[0]):
        gap = float(fitness_gap(sc.d, sc.U, phi[0]))
    return TrajectoryRecord(
        t=t,
        s=s,
        phi=phi,
        s_bar=mean_qualification(sc.mu, s),
        disparity_l1=disparity_norm(s[:-1] - s[1:], 1),
        acc=np.asarray(acceptance_rate(sc.d, phi, s)),
        fpr=np.asarray(c.fpr),
        fnr=np.asarray(c.fnr),
        gap=gap,
    )


def run_trajectory(sc, s0, steps=DEFAULT_STEPS, record_every=1, *, stop_after=None):
    """Iterate the scenario from ``s0`` for ``steps`` updates.

    Records ``t = 0, stride, 2*stride, ...`` and always the final step; the
    policy stored at ``t`` is the one computed from ``s[t]``. With
    ``stop_after=(window, tol)`` the run ends early once ``window``
    consecutive updates each moved the state by at most ``tol`` (sup norm).
    """
    if steps < 1 or record_every < 1:
        raise ValueError("steps and record_every must be positive")
    s = population_state(s0, sc.n)
    records = []
    quiet = 0
    for t in range(steps + 1):
        phi = np.asarray(policy_for(sc, s), dtype=float)
        last = t == steps
        if stop_after is not None and quiet >= stop_after[0]:
            last = True
        if last or t % record_every == 0:
            records.append(make_record(sc, t, s, phi))
        if last:
            break
        nxt = step(sc, s, phi)
        if stop_after is not None:
            quiet = quiet + 1 if np.max(np.abs(nxt - s)) <= stop_after[1] else 0
        s = nxt
    return records


class ConvergenceReport(NamedTuple):
    converged: bool
    steps_to_convergence: int | None
    limit_state: np.ndarray
    s_bar: float
    disparity_l1: float
    nearest: str  # internal_hyperplane | trivial_vertex | none
    hyperplane: str | None  # plus | minus when nearest is an internal hyperplane


def detect_convergence(records, window=DEFAULT_WINDOW, tol=DEFAULT_TOL, sc=None):
    """Decide whether a trajectory has settled and what it settled on.

    Converged iff each of the last ``window`` record-to-record moves has sup
    norm at most ``tol``. Records should be consecutive steps. Pass the
    scenario to compare the limit against its equilibrium hyperplanes.
    """
    if window > len(records):
        raise ValueError(f"window {window} exceeds the {len(records)} recorded states")
    states = np.array([r.s for r in records])
    moves = np.max(np.abs(np.diff(states, axis=0)), axis=1) if len(states) > 1 else np.zeros(0)
    tail = moves[-window:] if window else moves[:0]
    converged = bool(np.all(tail <= tol))
    steps_to = None
    if converged:
        big = np.nonzero(moves > tol)[0]
        idx = int(big[-1]) + 1 if big.size else 0
        steps_to = records[idx].t
    last = records[-1]
    limit = last.s
    nearest, which = "none", None
    if np.all(np.minimum(limit, 1.0 - limit) <= tol):
        nearest = "trivial_vertex"
    elif sc is not None and sc.U is not None and sc.dynamics.model == "replicator":
        rep = equilibrium_report(sc.mu, sc.d, sc.U, sc.V)
        dists = [
            (abs(last.s_bar - sb), label)
            for label, _, sb, _, _ in rep.hyperplanes
        ]
        if dists:
            dist, label = min(dists)
            if dist < HYPERPLANE_TOL:
                nearest, which = "internal_hyperplane", label
    return ConvergenceReport(converged, steps_to, limit, last.s_bar, last.disparity_l1, nearest, which)


def thread_count(threads=None):
    if threads is None:
        threads = int(os.environ.get("FAIRDYN_THREADS", "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


@dataclass(frozen=True, eq=False)
class SweepResult:
    s1: np.ndarray
    s2: np.ndarray
    ds: np.ndarray  # (len(s1), len(s2), 2)
    acc1: np.ndarray
    fpr1: np.ndarray
    fnr1: np.ndarray

    def rows(self):
        """Cells in row-major order (s1 outer): ``(s1, s2, ds1, ds2, acc1, fpr1, fnr1)``."""
        for i, a in enumerate(self.s1):
            for j, b in enumerate(self.s2):
                yield (
                    float(a), float(b),
                    float(self.ds[i, j, 0]), float(self.ds[i, j, 1]),
                    float(self.acc1[i, j]), float(self.fpr1[i, j]), float(self.fnr1[i, j]),
                )


def _cell(sc, s):
    phi = np.asarray(policy_for(sc, s), dtype=float)
    ds = step(sc, s, phi) - s
    c = confusion(sc.d, phi[0], s[0])
    return ds, acceptance_rate(sc.d, phi[0], s[0]), float(c.fpr), float(c.fnr)


def sweep_grid(sc, resolution, threads=None):
    """One-step displacement and group-1 metrics on a grid of cell centres."""
    if sc.n != 2:
        raise ConfigError(f"sweeps need exactly two groups, scenario has {sc.n}", key="mu")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    axis = (np.arange(resolution) + 0.5) / resolution
    cells = [np.array([a, b]) for a in axis for b in axis]
    workers = thread_count(threads)
    if workers == 1:
        out = [_cell(sc, s) for s in cells]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(lambda s: _cell(sc, s), cells))
    shape = (resolution, resolution)
    return SweepResult(
        s1=axis,
        s2=axis.copy(),
        ds=np.array([o[0] for o in out]).reshape(resolution, resolution, 2),
        acc1=np.array([o[1] for o in out]).reshape(shape),
        fpr1=np.array([o[2] for o in out]).reshape(shape),
        fnr1=np.array([o[3] for o in out]).reshape(shape),
    )


class ComparisonRow(NamedTuple):
    intervention: str
    terminal_s_bar: float
    terminal_disparity_l1: float
    steps_to_convergence: int | None
    eo_satisfied: bool
    dp_satisfied: bool


def compare(sc, specs, s0, steps=DEFAULT_STEPS, window=DEFAULT_WINDOW, tol=DEFAULT_TOL):
    """Run one trajectory per intervention from the same start and summarize.

    The EO and DP columns hold only if the criterion was met at every step.
    """
    rows = []
    for spec in specs:
        sub = sc.with_intervention(spec)
        recs = run_trajectory(sub, s0, steps, 1, stop_after=(window, tol))
        conv = detect_convergence(recs, min(window, len(recs)), tol)
        rows.append(
            ComparisonRow(
                intervention=spec.label,
                terminal_s_bar=recs[-1].s_bar,
                terminal_disparity_l1=recs[-1].disparity_l1,
                steps_to_convergence=conv.steps_to_convergence,
                eo_satisfied=all(r.eo_satisfied for r in recs),
                dp_satisfied=all(r.dp_satisfied for r in recs),
            )
        )
    return rows
