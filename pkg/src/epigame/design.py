"""Design-time computations: target mix, endemic point, stationary rewards.

Given a strategy profile, epidemic rates and a cost budget, the planner's
target is the cheapest-transmission population mix affordable within the
budget. Everything here is closed-form; ``lp_oracle_beta_star`` provides
an independent brute-force check used by the test suite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import Assumption1Violated, BudgetOutOfRange, InvalidRho
from .model import EpidemicParams, StrategyProfile

# Absolute tolerance deciding whether the budget sits exactly on a cost
# level (boundary targets are measure-zero; the tolerance makes the
# choice deterministic).
CASE_TOL = 1e-9


class Case(enum.Enum):
    """Interior target (I) vs single-vertex boundary target (II)."""

    I = "I"
    II = "II"


@dataclass(frozen=True)
class CaseClassification:
    kind: Case
    pivot: int  # 0-based index into beta/cost; in range(n - 1)


@dataclass(frozen=True)
class DesignTarget:
    """Everything the closed loop needs from the planner's optimization."""

    classification: CaseClassification
    c_star: float
    rho_star: float
    beta_star: float
    x_star: np.ndarray
    I_star: float
    R_star: float
    r_star: np.ndarray  # stationary reward vector
    r_o: np.ndarray     # stationary payoff offset, r_star - cost
    zeta1: float
    zeta2: float
    q_interval: tuple[float, float]  # limit set of the payoff state


def check_assumption1(profile: StrategyProfile) -> bool:
    """True iff the marginal cost of cutting transmission increases as
    the rate drops (strictly decreasing slopes along the ladder).

    Vacuously true for two strategies.
    """
    if profile.n == 2:
        return True
    slopes = -np.diff(profile.cost) / np.diff(profile.beta)
    return bool(np.all(np.diff(slopes) < 0))


def classify_case(profile: StrategyProfile, c_star: float) -> CaseClassification:
    """Locate the budget between (Case I) or on (Case II) cost levels.

    Budgets within ``CASE_TOL`` of an interior cost level classify as
    Case II when ``n >= 3``. A budget that close to the top level
    ``ctilde_1`` still classifies as Case I (the vertex target there
    would put the optimum at the lowest transmission rate, for which
    the boundary reward interval is unbounded).
    """
    ct = profile.ctilde
    if not 0.0 < c_star < ct[0]:
        raise BudgetOutOfRange(
            f"budget {c_star} outside (0, {ct[0]})")
    if profile.n >= 3:
        # interior levels only: ctilde[1..n-2]
        for i in range(1, profile.n - 1):
            if abs(c_star - ct[i]) <= CASE_TOL:
                return CaseClassification(Case.II, pivot=i)
    # ct is strictly decreasing with ct[-1] = 0, so the bracket exists
    pivot = int(np.searchsorted(-ct, -c_star, side="right") - 1)
    return CaseClassification(Case.I, pivot=pivot)


def validate_rho(profile: StrategyProfile,
                 classification: CaseClassification,
                 beta_star: float, rho_star: float) -> bool:
    """Check the penalty scalar against the target's requirements.

    With two strategies the penalty never enters the reward, so any
    value passes. Interior targets need only positivity; a boundary
    (vertex) target needs the penalty to dominate the largest rate gap
    to the target from either end of the ladder.
    """
    if profile.n == 2:
        return True
    if classification.kind is Case.I:
        return rho_star > 0
    need = float(max(profile.beta[-1] - beta_star,
                     beta_star - profile.beta[0]))
    return bool(rho_star >= need)


def endemic_point(params: EpidemicParams, beta_star: float) -> tuple[float, float]:
    """Nontrivial SIRS rest point for aggregate rate ``beta_star``."""
    depletion = 1.0 - params.sigma / beta_star
    return params.eta * depletion, (1.0 - params.eta) * depletion


def optimal_target(profile: StrategyProfile, params: EpidemicParams,
                   c_star: float, rho_star: float) -> DesignTarget:
    """Compute the optimal mix, endemic point and stationary rewards.

    The budget-constrained minimization of the aggregate transmission
    rate over the simplex has a unique solution under the slope
    condition of :func:`check_assumption1`: a two-strategy blend
    between adjacent ladder entries (Case I) or a single vertex
    (Case II). Strategies outside the target's support get their reward
    docked by ``rho_star``.
    """
    if not check_assumption1(profile):
        raise Assumption1Violated(
            "cost/rate slopes are not strictly decreasing; the "
            "budget-constrained optimum is not the adjacent-pair blend")
    cls = classify_case(profile, c_star)
    n = profile.n
    ct = profile.ctilde
    x_star = np.zeros(n)
    if cls.kind is Case.I:
        i = cls.pivot
        share = (c_star - ct[i + 1]) / (ct[i] - ct[i + 1])
        x_star[i] = share
        x_star[i + 1] = 1.0 - share
    else:
        x_star[cls.pivot] = 1.0
    if not validate_rho(profile, cls, float(profile.beta @ x_star), rho_star):
        raise InvalidRho(
            f"rho_star={rho_star} too small for the boundary target")
    beta_star = float(profile.beta @ x_star)
    I_star, R_star = endemic_point(params, beta_star)
    r_star = np.where(x_star == 0.0, ct - rho_star, ct)
    zeta1 = float(rho_star / (profile.beta[-1] - beta_star))
    zeta2 = float(rho_star / (beta_star - profile.beta[0]))
    q_interval = (0.0, 0.0) if cls.kind is Case.I else (-zeta2, zeta1)
    x_star.setflags(write=False)
    r_star.setflags(write=False)
    r_o = r_star - profile.cost
    r_o.setflags(write=False)
    return DesignTarget(
        classification=cls, c_star=c_star, rho_star=rho_star,
        beta_star=beta_star, x_star=x_star, I_star=I_star, R_star=R_star,
        r_star=r_star, r_o=r_o, zeta1=zeta1, zeta2=zeta2,
        q_interval=q_interval)


def lp_oracle_beta_star(profile: StrategyProfile, c_star: float,
                        grid_resolution: int = 1000) -> float:
    """Brute-force the target rate over a dense simplex lattice.

    Enumerates every population mix with shares that are multiples of
    ``1/grid_resolution``, keeps those within budget and returns the
    smallest aggregate rate found. Supports up to four strategies;
    meant for validating :func:`optimal_target`, not production use.
    Accuracy is one lattice spacing: the result can exceed the true
    optimum by at most ``O(n * (beta_n - beta_1) / grid_resolution)``
    and can never undercut it.
    """
    n = profile.n
    if n > 4:
        raise ValueError("lattice oracle supports n <= 4")
    N = int(grid_resolution)
    if N < 1000:
        raise ValueError("grid_resolution must be at least 1000")
    beta, ct = profile.beta, profile.ctilde
    budget = c_star * N + 1e-12 * max(1.0, c_star * N)

    if n == 2:
        k = np.arange(N + 1, dtype=float)
        cost = ct[0] * k  # ct[1] == 0
        obj = beta[0] * k + beta[1] * (N - k)
        return float(obj[cost <= budget].min() / N)

    if n == 3:
        k1, k2 = np.meshgrid(np.arange(N + 1, dtype=float),
                             np.arange(N + 1, dtype=float), indexing="ij")
        k3 = N - k1 - k2
        ok = k3 >= 0
        cost = ct[0] * k1 + ct[1] * k2  # ct[2] == 0
        obj = beta[0] * k1 + beta[1] * k2 + beta[2] * k3
        ok &= cost <= budget
        return float(obj[ok].min() / N)

    # n == 4: loop over the first share; the inner 2-D sweep reuses
    # k1-independent combinations (objective and cost are affine in k1).
    k2, k3 = np.meshgrid(np.arange(N + 1, dtype=float),
                         np.arange(N + 1, dtype=float), indexing="ij")
    s = k2 + k3
    inner_obj = (beta[1] - beta[3]) * k2 + (beta[2] - beta[3]) * k3
    inner_cost = (ct[1] - ct[3]) * k2 + (ct[2] - ct[3]) * k3
    best = np.inf
    for k1 in range(N + 1):
        rest = N - k1
        ok = (s <= rest) & (inner_cost <= budget - ct[0] * k1 - ct[3] * rest)
        if not ok.any():
            continue
        cand = inner_obj[ok].min() + beta[0] * k1 + beta[3] * rest
        best = min(best, cand)
    return float(best / N)
