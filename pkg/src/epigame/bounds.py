"""Lyapunov levels, decay checking, and anytime overshoot bounds.

The central objects are the epidemic storage function (a convex,
nonnegative level that vanishes only at the designed endemic point) and
the overshoot program: the largest infectious fraction, relative to the
endemic one, attainable anywhere inside a storage sublevel set. The
program is quasi-convex and solved by bisection over the ratio with an
exact inner minimization; a dense-grid oracle cross-checks it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignTarget, endemic_point, optimal_target
from .errors import (
    DissipationViolation,
    NonPositiveInfectious,
    PreconditionViolated,
    TargetBelowFloor,
)
from .model import EpidemicParams, StrategyProfile, SystemState
from .protocols import IPCProtocol, SmithProtocol, best_response, ipc_storage

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def epidemic_storage(params: EpidemicParams, design: DesignTarget,
                     upsilon: float, cI: float, cR: float, B: float) -> float:
    """Convex storage of the rate-scaled epidemic state.

    Zero exactly at the designed endemic point ``(cI*, cR*, beta*)``;
    grows with the infection tracking error (relative-entropy style in
    ``cI``), the recovered tracking error, and the rate deviation
    weighted by ``upsilon**2``.
    """
    if cI <= 0:
        raise NonPositiveInfectious(f"scaled infectious {cI} must be positive")
    depletion = B - params.sigma
    cI_hat = params.eta * depletion
    cR_hat = (1.0 - params.eta) * depletion
    d = cI / cI_hat - 1.0
    return (cI_hat * (d - math.log1p(d))
            + (cR - cR_hat) ** 2 / (2.0 * params.gamma)
            + 0.5 * upsilon ** 2 * (B - design.beta_star) ** 2)


@dataclass(frozen=True)
class LyapunovLevel:
    total: float
    flow_storage: float
    epidemic_storage: float


def lyapunov_level(protocol: IPCProtocol, profile: StrategyProfile,
                   params: EpidemicParams, design: DesignTarget,
                   upsilon: float, state: SystemState) -> LyapunovLevel:
    """Total Lyapunov level at ``state``: flow storage plus epidemic
    storage, evaluated at the unsaturated payoff."""
    p = state.q * profile.beta + design.r_o
    flow = ipc_storage(protocol, state.x, p)
    B = profile.transmission_rate(state.x)
    epi = epidemic_storage(params, design, upsilon,
                           B * state.I, B * state.R, B)
    return LyapunovLevel(flow + epi, flow, epi)


@dataclass(frozen=True)
class DissipationReport:
    worst_margin: float
    worst_time: float
    interior_samples: int


def check_dissipation(traj, params: EpidemicParams, *, tol: float = 1e-6,
                      raise_on_violation: bool = True) -> DissipationReport:
    """Check the Lyapunov decay inequality along a sampled trajectory.

    Differentiates the recorded level by central differences and
    requires it to decay at least as fast as the recorded dissipation
    plus the squared epidemic tracking errors, up to ``tol``.
    """
    t, L = traj.times, traj.L
    if np.any(~np.isfinite(L)):
        raise ValueError("trajectory carries no storage diagnostics "
                         "(non-IPC protocol?)")
    cI, cI_hat = traj.B * traj.I, traj.B * traj.I_hat
    cR, cR_hat = traj.B * traj.R, traj.B * traj.R_hat
    dL = (L[2:] - L[:-2]) / (t[2:] - t[:-2])
    rhs = (-traj.P_dissipation[1:-1]
           - (cI - cI_hat)[1:-1] ** 2
           - (params.omega / params.gamma) * (cR - cR_hat)[1:-1] ** 2)
    margin = dL - rhs
    worst = int(np.argmax(margin))
    report = DissipationReport(float(margin[worst]), float(t[1 + worst]),
                               margin.size)
    if raise_on_violation and report.worst_margin > tol:
        raise DissipationViolation(report.worst_time, report.worst_margin)
    return report


def _storage_parts(params, design, upsilon, v, B):
    """Exact min of the epidemic storage over {cI >= v*B, feasible cR}
    at fixed rate ``B``. Separable: the infection term is minimized at
    the reference (or the boundary cI = v*B beyond it) and the recovered
    term only activates through the cap cR <= B - cI.
    """
    depletion = B - params.sigma
    cI_hat = params.eta * depletion
    cR_hat = (1.0 - params.eta) * depletion
    quad = 0.5 * upsilon ** 2 * (B - design.beta_star) ** 2
    if cI_hat >= v * B:
        return quad
    cI = v * B
    d = cI / cI_hat - 1.0
    s = cI_hat * (d - math.log1p(d))
    overflow = cI - (B - cR_hat)  # recovered cap shortfall
    if overflow > 0.0:
        s += overflow ** 2 / (2.0 * params.gamma)
    return quad + s


def _golden_min(f, a, b, tol=1e-11):
    if b - a <= tol:
        return f(0.5 * (a + b))
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    return min(fc, fd)


def pi_star(profile: StrategyProfile, params: EpidemicParams,
            design: DesignTarget, upsilon: float, alpha: float,
            tol: float = 1e-4) -> float:
    """Largest infectious-to-endemic ratio inside a storage sublevel set.

    Bisects the candidate ratio; each feasibility test is an exact inner
    minimization over the recovered/infection coordinates and a convex
    line search over the rate. Exact at ``alpha == 0`` (only the endemic
    point qualifies); accurate to ``tol`` otherwise.
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if alpha == 0.0:
        return 1.0
    b_lo, b_hi = profile.beta[0], profile.beta[-1]

    def feasible(v):
        val = _golden_min(
            lambda B: _storage_parts(params, design, upsilon, v, B),
            b_lo, b_hi)
        return val <= alpha

    lo, hi = design.I_star, 1.0
    if feasible(hi):
        return hi / design.I_star
    gap = tol * design.I_star
    while hi - lo > gap:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi) / design.I_star


def _entropy_band(a: float) -> tuple[float, float]:
    """Solve (u - 1) - ln(u) == a on both sides of u == 1."""
    if a <= 0.0:
        return 1.0, 1.0

    def g(u):
        return (u - 1.0) - math.log(u)

    hi = 2.0
    while g(hi) < a:
        hi *= 2.0
    lo = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < a:
            lo = mid
        else:
            hi = mid
    u_hi = 0.5 * (lo + hi)
    lo = min(0.5, math.exp(-(a + 1.0)))  # g(e^{-(a+1)}) = a + e^{-(a+1)} > a
    hi = 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > a:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), u_hi


@dataclass(frozen=True)
class PiStarOracle:
    value: float
    resolution: float  # worst-case ratio underestimate from gridding


def pi_star_oracle(profile: StrategyProfile, params: EpidemicParams,
                   design: DesignTarget, upsilon: float, alpha: float,
                   grid: int = 400) -> PiStarOracle:
    """Dense-grid lower bound for :func:`pi_star`.

    Grids the box certified to contain the whole sublevel set (each
    storage term is nonnegative, so each must individually stay under
    ``alpha``) and returns the best feasible ratio found. Pure lower
    bound: accurate to about ``resolution``.
    """
    if grid < 400:
        raise ValueError("oracle grid must be at least 400 per axis")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    eta, sigma, gamma = params.eta, params.sigma, params.gamma
    I_star = design.I_star

    if upsilon > 0 and alpha > 0:
        half = math.sqrt(2.0 * alpha) / upsilon
    else:
        half = math.inf if alpha > 0 else 0.0
    B_lo = max(profile.beta[0], design.beta_star - half)
    B_hi = min(profile.beta[-1], design.beta_star + half)
    u_lo, u_hi = _entropy_band(alpha / (eta * (B_lo - sigma)))
    w = math.sqrt(2.0 * gamma * alpha)

    B_grid = np.linspace(B_lo, B_hi, grid) if B_hi > B_lo else np.array([B_lo])
    u_grid = np.linspace(u_lo, u_hi, grid) if u_hi > u_lo else np.array([1.0])

    best = 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        for B in B_grid:
            depletion = B - sigma
            cI_hat = eta * depletion
            cR_hat = (1.0 - eta) * depletion
            quad = 0.5 * upsilon ** 2 * (B - design.beta_star) ** 2
            cI = cI_hat * u_grid
            entropy = cI_hat * ((u_grid - 1.0) - np.log(u_grid))
            cR = (np.linspace(max(0.0, cR_hat - w), cR_hat + w, grid)
                  if w > 0 else np.array([cR_hat]))
            s = quad + entropy[:, None] + (cR[None, :] - cR_hat) ** 2 \
                / (2.0 * gamma)
            ok = (s <= alpha) & (cI[:, None] + cR[None, :] <= B) \
                & (cI[:, None] <= B)
            feas = ok.any(axis=1)
            if feas.any():
                best = max(best, float(cI[feas].max()) / B)

    I_hat_hi = eta * (1.0 - sigma / B_hi)
    du = (u_hi - u_lo) / max(grid - 1, 1)
    dB = (B_hi - B_lo) / max(grid - 1, 1)
    res = (du * I_hat_hi + u_hi * eta * sigma / B_lo ** 2 * dB) / I_star
    return PiStarOracle(best / I_star, res)


def overshoot_floor(profile: StrategyProfile, params: EpidemicParams,
                    design: DesignTarget, beta_o: float) -> float:
    """Provable floor of the certified overshoot ratio for endemic
    starts at rate ``beta_o``: no weight can certify less."""
    beta_bar = min(abs(beta_o - design.beta_star) + design.beta_star,
                   profile.beta[-1])
    return params.eta * (1.0 - params.sigma / beta_bar) / design.I_star


@dataclass(frozen=True)
class AnytimeBound:
    pi_ratio: float          # certified ceiling for I(t) / I_star
    alpha: float             # initial Lyapunov level
    beta_tilde: float        # initial rate minus designed rate
    rate_band: float         # |B(t) - beta_star| never exceeds this
    rate_ceiling: float | None  # B(t) stays below the initial rate, if above target


def anytime_bound(profile: StrategyProfile, params: EpidemicParams,
                  design: DesignTarget, upsilon: float,
                  initial: SystemState, *, protocol: IPCProtocol | None = None,
                  pi_tol: float = 1e-4, endemic_tol: float = 1e-9,
                  storage_tol: float = 1e-12) -> AnytimeBound:
    """Certified anytime ceiling on the infectious overshoot.

    Requires the run to start at an endemic rest point with zero payoff
    state and zero flow storage (population supported on best responses
    to the stationary payoff); these are exactly the hypotheses under
    which the initial Lyapunov level reduces to the rate-gap term.
    """
    beta_o = profile.transmission_rate(initial.x)
    I_hat, R_hat = endemic_point(params, beta_o)
    if abs(initial.I - I_hat) > endemic_tol or abs(initial.R - R_hat) > endemic_tol:
        raise PreconditionViolated(
            f"initial (I, R)=({initial.I}, {initial.R}) is not the endemic "
            f"point ({I_hat}, {R_hat}) of the initial rate {beta_o}")
    if abs(initial.q) > storage_tol:
        raise PreconditionViolated(f"initial payoff state {initial.q} != 0")
    if protocol is not None:
        s0 = ipc_storage(protocol, initial.x, design.r_o)
        if s0 > storage_tol:
            raise PreconditionViolated(
                f"initial flow storage {s0:.3e} exceeds {storage_tol:.0e}")
    else:
        support = np.flatnonzero(initial.x > 0)
        if not np.isin(support, best_response(design.r_o)).all():
            raise PreconditionViolated(
                "initial mix is not supported on best responses to the "
                "stationary payoff; pass the protocol to evaluate the "
                "initial storage exactly")
    beta_tilde = beta_o - design.beta_star
    alpha = 0.5 * (upsilon * beta_tilde) ** 2
    pi = pi_star(profile, params, design, upsilon, alpha, tol=pi_tol)
    return AnytimeBound(
        pi_ratio=pi, alpha=alpha, beta_tilde=beta_tilde,
        rate_band=abs(beta_tilde),
        rate_ceiling=beta_o if design.beta_star < beta_o else None)


@dataclass(frozen=True)
class InitialLevel:
    alpha: float
    flow_storage: float
    beta_tilde: float
    alpha_simplified: float | None = None
    flow_storage_simplified: float | None = None


def initial_level(protocol: IPCProtocol, profile: StrategyProfile,
                  design: DesignTarget, upsilon: float,
                  x0: np.ndarray) -> InitialLevel:
    """Initial Lyapunov level for an endemic start at mix ``x0``.

    Adds the exact flow storage at the stationary payoff to the
    rate-gap term; the storage vanishes when ``x0`` is supported inside
    the target's support. For Smith protocols a simplified storage
    variant (cap-kinked, no offset) is reported alongside for
    comparison.
    """
    x0 = np.asarray(x0, dtype=float)
    beta_tilde = float(profile.beta @ x0) - design.beta_star
    base = 0.5 * (upsilon * beta_tilde) ** 2
    storage = ipc_storage(protocol, x0, design.r_o)
    simplified = None
    if isinstance(protocol, SmithProtocol):
        gaps = np.maximum(design.r_o[None, :] - design.r_o[:, None], 0.0)
        simplified = float(
            x0 @ protocol.phi_integral_simplified(gaps).sum(axis=1))
    return InitialLevel(
        alpha=base + storage, flow_storage=storage, beta_tilde=beta_tilde,
        alpha_simplified=None if simplified is None else base + simplified,
        flow_storage_simplified=simplified)


def select_upsilon(profile: StrategyProfile, params: EpidemicParams,
                   c_star: float, rho_star: float, beta_o: float,
                   overshoot_target: float, *, tol: float = 1e-3,
                   upsilon_max: float = 4.0, pi_tol: float = 1e-4) -> float:
    """Largest rate-gap weight whose certified overshoot stays under
    ``overshoot_target`` for endemic starts at rate ``beta_o``.

    The certified overshoot is non-decreasing in the weight, so a
    bisection suffices; the search is capped at ``upsilon_max``.
    """
    design = optimal_target(profile, params, c_star, rho_star)
    floor = overshoot_floor(profile, params, design, beta_o)
    if overshoot_target <= floor:
        raise TargetBelowFloor(overshoot_target, floor)
    beta_tilde = beta_o - design.beta_star

    def certified(upsilon):
        alpha = 0.5 * (upsilon * beta_tilde) ** 2
        return pi_star(profile, params, design, upsilon, alpha, tol=pi_tol)

    if certified(upsilon_max) <= overshoot_target:
        return upsilon_max
    lo, hi = 0.0, upsilon_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if certified(mid) <= overshoot_target:
            lo = mid
        else:
            hi = mid
    return lo
