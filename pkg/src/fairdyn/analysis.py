"""Equilibria and linear stability of the classifier/replicator system.

Internal equilibria are the zeros of the fitness gap ``W1(phi) - W0(phi)``.
The gap is strictly quasi-concave in ``phi`` with a single maximum at
``phi_star``, so it has at most two zeros: ``phi_plus`` on the rising flank
and ``phi_minus`` on the falling flank. Each zero fixes a mean
qualification rate through the threshold equation, i.e. a hyperplane of
equilibrium states. At such a state the Jacobian of the one-step
displacement in (D, s_bar) coordinates has rank one, and its single
nontrivial eigenvalue decides stability.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import optimize

from .classifier import solve_threshold
from .dynamics import fitness
from .errors import DegenerateFitness, NonConvergence, NotAtEquilibrium, OutOfSimplex
from .state import from_coords, mean_qualification, to_coords, CoordState

ON_HYPERPLANE_TOL = 1e-8
ROOT_TOL = 1e-10
ROOT_MAXITER = 400
MARGINAL_TOL = 1e-10
BRACKET_WIDTHS = 20.0


def fitness_gap(d, U, phi):
    w0, w1 = fitness(d, U, phi)
    return w1 - w0


def gap_slope(d, U, phi):
    """Analytic derivative of the fitness gap with respect to the threshold."""
    u = U.u
    return d.pdf(1, phi) * (u[1, 0] - u[1, 1]) - d.pdf(0, phi) * (u[0, 0] - u[0, 1])


def phi_star(d, U):
    """Location of the fitness gap's maximum.

    The slope vanishes where ``q1/q0 = (U00 - U01) / (U10 - U11)``. When that
    ratio is not positive the gap is monotone and the extremum sits at an
    infinite threshold.
    """
    u = U.u
    ratio = (u[0, 0] - u[0, 1]) / (u[1, 0] - u[1, 1])
    if ratio > 0:
        return d.inverse_likelihood_ratio(ratio)
    # monotone gap: the supremum is approached at -inf if decreasing
    return -math.inf if gap_slope(d, U, 0.0) < 0 else math.inf


def _flank_root(f, a, b, width, tol, maxiter):
    """Root of a monotone f on the extended interval (a, b), or None."""
    fa, fb = f(a), f(b)
    if not fa * fb < 0:
        return None
    center = a if math.isfinite(a) else (b if math.isfinite(b) else 0.0)
    lo = a if math.isfinite(a) else center - width
    hi = b if math.isfinite(b) else center + width
    for _ in range(80):
        flo, fhi = f(lo), f(hi)
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        lo_ok = (flo < 0) == (fa < 0)
        hi_ok = (fhi < 0) == (fb < 0)
        if lo_ok and hi_ok:
            break
        if not lo_ok:
            lo = center - 2.0 * (center - lo) - width
        if not hi_ok:
            hi = center + 2.0 * (hi - center) + width
    else:
        raise NonConvergence("could not bracket a fitness-gap zero")
    try:
        return optimize.bisect(f, lo, hi, xtol=tol, maxiter=maxiter)
    except RuntimeError as exc:
        raise NonConvergence(str(exc)) from None


def find_equilibrium_thresholds(d, U, *, width=None, tol=ROOT_TOL, maxiter=ROOT_MAXITER):
    """Zeros of the fitness gap as ``(phi_minus, phi_plus)``; missing ones are None.

    Each flank of the maximum is monotone, so each is bisected separately,
    using the analytic limits at +/-inf to decide whether a zero exists.
    """
    if width is None:
        width = BRACKET_WIDTHS * d.scale()
    top = phi_star(d, U)

    def f(x):
        return fitness_gap(d, U, x)

    phi_plus = None if top == -math.inf else _flank_root(f, -math.inf, top, width, tol, maxiter)
    phi_minus = None if top == math.inf else _flank_root(f, top, math.inf, width, tol, maxiter)
    return phi_minus, phi_plus


def hyperplane_qualification(d, V, phi):
    """The mean qualification rate at which the optimal threshold equals ``phi``."""
    xi = V.xi
    return xi / (xi + d.likelihood_ratio(phi))


def dphi_dsbar(d, V, phi):
    """Sensitivity of the optimal threshold to the mean qualification rate (< 0)."""
    s_bar = hyperplane_qualification(d, V, phi)
    return -V.xi / (s_bar**2 * d.likelihood_ratio_derivative(phi))


def _equilibrium_terms(mu, s, d, U, V, tol):
    s = np.asarray(s, dtype=float)
    s_bar = mean_qualification(mu, s)
    phi = solve_threshold(d, V, s_bar)
    if not math.isfinite(phi):
        raise NotAtEquilibrium(f"threshold is infinite at s_bar={s_bar}")
    w0, w1 = fitness(d, U, phi)
    if abs(w1 - w0) >= tol:
        raise NotAtEquilibrium(f"fitness gap {w1 - w0:.3e} at s_bar={s_bar} exceeds {tol:.0e}")
    w_eq = 0.5 * (w0 + w1)
    if w_eq <= 0:
        raise DegenerateFitness("equilibrium fitness is zero")
    scale = dphi_dsbar(d, V, phi) * gap_slope(d, U, phi) / w_eq
    var = float(np.dot(mu, s * (1.0 - s)))
    v = np.append((s[:-1] - s[1:]) * (1.0 - s[:-1] - s[1:]), var)
    return scale, v


def jacobian_eigen(mu, s, d, U, V, *, tol=ON_HYPERPLANE_TOL):
    """Nontrivial eigenvalue and eigenvector of the Jacobian at an internal equilibrium.

    Returns ``(lam, v)``; ``v``'s last entry is ``sum_g mu_g s_g (1 - s_g)``
    and the others are ``D_g (1 - s_g - s_{g+1})``.
    """
    scale, v = _equilibrium_terms(mu, s, d, U, V, tol)
    return scale * v[-1], v


def analytic_jacobian(mu, s, d, U, V, *, tol=ON_HYPERPLANE_TOL):
    """Full Jacobian in (D, s_bar) coordinates: zeros except the last column."""
    scale, v = _equilibrium_terms(mu, s, d, U, V, tol)
    J = np.zeros((v.size, v.size))
    J[:, -1] = scale * v
    return J


def numeric_jacobian(sc, s, h=1e-6):
    """Central-difference Jacobian of ``r -> r[t+1] - r[t]`` in (D, s_bar) coordinates.

    ``sc`` is a :class:`~fairdyn.scenario.Scenario`; its intervention sets the
    policy at every evaluated state.
    """
    from .scenario import transition

    if not 1e-7 <= h <= 1e-4:
        raise ValueError(f"step h must lie in [1e-7, 1e-4], got {h}")
    mu = sc.mu
    c0 = to_coords(mu, s)
    r0 = np.append(c0.D, c0.s_bar)

    def displacement(r):
        state = from_coords(mu, CoordState(r[:-1], r[-1]), check=False)
        if np.any(state <= 0) or np.any(state >= 1):
            raise OutOfSimplex(f"perturbed state {state.tolist()} left the open unit cube")
        _, nxt = transition(sc, state)
        c = to_coords(mu, nxt)
        return np.append(c.D, c.s_bar) - r

    J = np.empty((r0.size, r0.size))
    for j in range(r0.size):
        e = np.zeros(r0.size)
        e[j] = h
        J[:, j] = (displacement(r0 + e) - displacement(r0 - e)) / (2 * h)
    return J


def classify_stability(lam):
    if abs(lam) < MARGINAL_TOL:
        return "marginal"
    if lam > 0:
        return "unstable"
    if lam > -2:
        return "stable"
    return "overcorrecting"


@dataclass(frozen=True)
class EquilibriumReport:
    phi_star: float
    phi_plus: float | None = None
    phi_minus: float | None = None
    s_bar_plus: float | None = None
    s_bar_minus: float | None = None
    lambda_plus: float | None = None
    lambda_minus: float | None = None
    stability_plus: str | None = None
    stability_minus: str | None = None

    @property
    def hyperplanes(self):
        """``(label, phi, s_bar, lambda, stability)`` for each internal hyperplane."""
        out = []
        if self.phi_plus is not None:
            out.append(("plus", self.phi_plus, self.s_bar_plus, self.lambda_plus, self.stability_plus))
        if self.phi_minus is not None:
            out.append(("minus", self.phi_minus, self.s_bar_minus, self.lambda_minus, self.stability_minus))
        return out

    def to_dict(self):
        return asdict(self)


def equilibrium_report(mu, d, U, V, **root_opts):
    """Locate both hyperplanes and classify each at its disparity-free state."""
    phi_minus, phi_plus = find_equilibrium_thresholds(d, U, **root_opts)
    fields = {"phi_star": phi_star(d, U), "phi_plus": phi_plus, "phi_minus": phi_minus}
    for label, phi in (("plus", phi_plus), ("minus", phi_minus)):
        if phi is None:
            continue
        s_bar = hyperplane_qualification(d, V, phi)
        s = np.full(len(mu), s_bar)
        lam, _ = jacobian_eigen(mu, s, d, U, V)
        fields[f"s_bar_{label}"] = s_bar
        fields[f"lambda_{label}"] = float(lam)
        fields[f"stability_{label}"] = classify_stability(lam)
    return EquilibriumReport(**fields)
