"""Core value types: strategy profiles, epidemic rate constants, states.

All types are immutable (frozen dataclasses over read-only arrays) and
therefore safe to share between threads. Rates carry units of 1/day; the
time unit throughout the package is one day.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BetaOneNotAboveSigma,
    NonMonotoneBeta,
    NonMonotoneCost,
    ValidationError,
)

SIMPLEX_SUM_TOL = 1e-9
SIMPLEX_NEG_TOL = -1e-12


def _frozen_array(values) -> np.ndarray:
    out = np.array(values, dtype=float)
    out.setflags(write=False)
    return out


def normalize_simplex(x, *, neg_tol: float = SIMPLEX_NEG_TOL,
                      sum_tol: float = SIMPLEX_SUM_TOL) -> np.ndarray:
    """Clamp round-off negatives to zero and renormalize to unit sum.

    Entries below ``neg_tol`` or a total further than ``sum_tol`` from 1
    are genuine violations and raise; anything closer is integration
    round-off and is silently repaired.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise ValidationError("population state must be a 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValidationError("population state has non-finite entries")
    lo = x.min()
    if lo < neg_tol:
        raise ValidationError(
            f"population share {lo:.3e} below tolerance {neg_tol:.0e}")
    total = x.sum()
    if abs(total - 1.0) > sum_tol:
        raise ValidationError(
            f"population shares sum to {total!r}, not 1 within {sum_tol:.0e}")
    x = np.clip(x, 0.0, None)
    return x / x.sum()


@dataclass(frozen=True)
class StrategyProfile:
    """The menu of strategies: transmission contributions and costs.

    ``beta`` must be strictly increasing and ``cost`` strictly
    decreasing: riskier behaviour is cheaper. ``ctilde`` is the cost
    vector shifted so its last entry is zero.
    """

    beta: np.ndarray
    cost: np.ndarray
    ctilde: np.ndarray = field(init=False)

    def __post_init__(self):
        beta = _frozen_array(self.beta)
        cost = _frozen_array(self.cost)
        if beta.ndim != 1 or cost.shape != beta.shape or beta.size < 2:
            raise ValidationError(
                "beta and cost must be 1-D vectors of equal length >= 2")
        if not np.all(np.isfinite(beta)) or not np.all(np.isfinite(cost)):
            raise ValidationError("profile entries must be finite")
        if np.any(np.diff(beta) <= 0) or beta[0] <= 0:
            raise NonMonotoneBeta(
                f"beta must be positive and strictly increasing, got {beta}")
        if np.any(np.diff(cost) >= 0):
            raise NonMonotoneCost(
                f"cost must be strictly decreasing, got {cost}")
        ctilde = _frozen_array(cost - cost[-1])
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "ctilde", ctilde)

    @property
    def n(self) -> int:
        return self.beta.size

    def transmission_rate(self, x: np.ndarray) -> float:
        """Aggregate transmission rate for population state ``x``."""
        return float(self.beta @ np.asarray(x, dtype=float))

    def min_beta_gap(self) -> float:
        return float(np.diff(self.beta).min())


@dataclass(frozen=True)
class EpidemicParams:
    """SIRS rate constants.

    ``g`` is the birth/death rate difference; ``sigma_bar`` the inverse
    mean infectious period; ``omega_bar`` the immunity waning-or-expiry
    rate; ``gamma`` the recovery rate. The effective rates are
    ``sigma = g + sigma_bar`` and ``omega = g + omega_bar``. The split
    ``eta = omega/(omega + gamma)`` fixes the endemic infectious share.
    """

    g: float
    sigma_bar: float
    omega_bar: float
    gamma: float

    def __post_init__(self):
        # gamma <= sigma_bar (difference is the disease death rate, >= 0);
        # equality means a zero disease death rate.
        if self.sigma <= 0 or self.omega <= 0 or self.gamma <= 0:
            raise ValidationError(
                "sigma, omega and gamma must all be positive")
        if self.gamma > self.sigma_bar:
            raise ValidationError(
                f"gamma={self.gamma} must not exceed sigma_bar={self.sigma_bar}")
        if not 0.0 < self.eta < 1.0:
            raise ValidationError("eta must lie strictly in (0, 1)")

    @property
    def sigma(self) -> float:
        return self.g + self.sigma_bar

    @property
    def omega(self) -> float:
        return self.g + self.omega_bar

    @property
    def eta(self) -> float:
        return self.omega / (self.omega + self.gamma)


def validate_profile(beta, cost, params: EpidemicParams) -> StrategyProfile:
    """Build a strategy profile and check compatibility with the rates.

    Beyond the profile's own ordering invariants, the safest strategy
    must still sustain an endemic state: ``beta[0] > sigma``.
    """
    profile = StrategyProfile(beta, cost)
    if profile.beta[0] <= params.sigma:
        raise BetaOneNotAboveSigma(
            f"beta_1={profile.beta[0]} must exceed sigma={params.sigma}")
    return profile


@dataclass(frozen=True)
class PopulationState:
    """A point on the strategy simplex."""

    x: np.ndarray

    def __post_init__(self):
        x = _frozen_array(normalize_simplex(self.x))
        object.__setattr__(self, "x", x)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class SystemState:
    """Full closed-loop state: epidemic fractions, strategy mix, payoff state.

    ``I`` must be strictly positive (its logarithm feeds the payoff
    dynamics); ``R`` must lie in [0, 1-I] up to round-off, which is
    clamped.
    """

    I: float
    R: float
    x: np.ndarray
    q: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.I <= 1.0):
            raise ValidationError(f"I={self.I} must lie in (0, 1]")
        R = float(self.R)
        if R < -1e-9 or R > 1.0 - self.I + 1e-9:
            raise ValidationError(f"R={R} must lie in [0, 1-I]")
        R = min(max(R, 0.0), 1.0 - self.I)
        if not np.isfinite(self.q):
            raise ValidationError("q must be finite")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "x", _frozen_array(normalize_simplex(self.x)))

    @property
    def S(self) -> float:
        return 1.0 - self.I - self.R


def reparameterize(state: SystemState, profile: StrategyProfile):
    """Rescale (I, R) by the aggregate transmission rate.

    Returns ``(cI, cR, B)`` with ``cI = B*I`` and ``cR = B*R``; the map
    is invertible because ``B >= beta_1 > 0``.
    """
    B = profile.transmission_rate(state.x)
    return B * state.I, B * state.R, B
