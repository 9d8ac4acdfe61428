"""Revision protocols and the mean dynamics they induce.

A protocol gives the rate at which agents playing strategy i switch to
strategy j as a function of the population state and payoff vector. The
induced mean flow moves mass toward higher-payoff strategies. Impartial
pairwise-comparison (IPC) protocols, of which Smith's is the canonical
instance, additionally come with a closed-form storage/dissipation pair
used by the Lyapunov diagnostics.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from .errors import NSViolation
from .model import StrategyProfile

BEST_RESPONSE_TOL = 1e-9


class RevisionProtocol(ABC):
    """Rate map (x, p) -> n-by-n matrix of switch rates in [0, t_bar]."""

    t_bar: float

    @abstractmethod
    def rates(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        """Switch-rate matrix; entry (i, j) is the i -> j rate."""


class IPCProtocol(RevisionProtocol):
    """Protocols whose rates depend only on positive payoff advantages.

    Subclasses supply ``phi`` (elementwise rate curve, ``phi(0) = 0``,
    positive for positive argument, bounded by ``t_bar``) and its exact
    antiderivative ``phi_integral``.
    """

    @abstractmethod
    def phi(self, nu: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def phi_integral(self, nu: np.ndarray) -> np.ndarray:
        """Exact integral of ``phi`` from 0 to ``nu`` (elementwise)."""

    def rates(self, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        advantage = np.maximum(p[None, :] - p[:, None], 0.0)
        return self.phi(advantage)


@dataclass(frozen=True)
class SmithProtocol(IPCProtocol):
    """Switch rate proportional to the payoff advantage, capped.

    ``lam`` is the sensitivity (rate per unit payoff advantage) and
    ``t_bar`` the hard rate cap.
    """

    lam: float
    t_bar: float = field(default=0.1)

    def __post_init__(self):
        if self.lam <= 0 or self.t_bar <= 0:
            raise ValueError("lam and t_bar must be positive")

    def phi(self, nu):
        return np.minimum(self.lam * np.asarray(nu, dtype=float), self.t_bar)

    def phi_integral(self, nu):
        nu = np.asarray(nu, dtype=float)
        knee = self.t_bar / self.lam
        quad = 0.5 * self.lam * nu ** 2
        lin = self.t_bar * nu - 0.5 * self.t_bar ** 2 / self.lam
        return np.where(nu <= knee, quad, lin)

    def phi_integral_simplified(self, nu):
        """Piecewise form with the kink at the cap itself and no offset
        in the linear branch; kept only for side-by-side level
        diagnostics. Coincides with ``phi_integral`` under the cap when
        ``lam == 1``.
        """
        nu = np.maximum(np.asarray(nu, dtype=float), 0.0)
        return np.where(nu <= self.t_bar, 0.5 * nu ** 2, nu * self.t_bar)


def mean_dynamics(protocol: RevisionProtocol, x: np.ndarray,
                  p: np.ndarray) -> np.ndarray:
    """Net flow per strategy: inflow minus outflow under ``protocol``.

    Conserves total mass exactly up to round-off and never drains an
    empty strategy.
    """
    x = np.asarray(x, dtype=float)
    T = protocol.rates(x, p)
    return T.T @ x - x * T.sum(axis=1)


def best_response(p: np.ndarray, tol: float = BEST_RESPONSE_TOL) -> np.ndarray:
    """Indices of payoff-maximizing strategies (ties within ``tol``)."""
    p = np.asarray(p, dtype=float)
    return np.flatnonzero(p >= p.max() - tol)


@dataclass(frozen=True)
class StationarityReport:
    samples: int
    stationary_checked: int
    moving_checked: int
    max_stationary_norm: float
    min_moving_margin: float


def check_nash_stationarity(protocol: IPCProtocol, profile: StrategyProfile,
                            samples: int = 1000, *, seed: int = 0,
                            payoff_scale: float = 1.0,
                            gap_floor: float = 1e-2,
                            mass_floor: float = 1e-2,
                            zero_tol: float = 1e-12) -> StationarityReport:
    """Sample-based check that the flow rests exactly at best responses.

    For each random payoff vector the check asserts two directions:
    the flow vanishes whenever the population is supported on the
    maximizing face, and it provably moves (by at least the mass on
    clearly-dominated strategies times the rate those strategies leak)
    whenever at least ``mass_floor`` sits at payoff gap ``gap_floor``
    or worse. Samples that are near-ties get only the first check.
    """
    rng = np.random.default_rng(seed)
    n = profile.n
    max_zero = 0.0
    min_margin = np.inf
    stationary = moving = 0
    for _ in range(samples):
        p = payoff_scale * rng.uniform(-1.0, 1.0, n)
        x = rng.dirichlet(np.ones(n))
        face = best_response(p)

        on_face = np.zeros(n)
        on_face[face] = x[face] / x[face].sum()
        norm_v = float(np.linalg.norm(mean_dynamics(protocol, on_face, p)))
        stationary += 1
        max_zero = max(max_zero, norm_v)
        if norm_v > zero_tol:
            raise NSViolation(on_face, p, norm_v, expected_zero=True)

        off_mass = float(x[p.max() - p >= gap_floor].sum())
        if off_mass >= mass_floor:
            moving += 1
            floor = off_mass * float(protocol.phi(np.array(gap_floor)))
            norm_v = float(np.linalg.norm(
                mean_dynamics(protocol, x, p), ord=np.inf))
            min_margin = min(min_margin, norm_v - floor)
            if norm_v < floor - 1e-12:
                raise NSViolation(x, p, norm_v, expected_zero=False)
    return StationarityReport(samples, stationary, moving,
                              max_zero, float(min_margin))


def ipc_storage(protocol: IPCProtocol, x: np.ndarray, p: np.ndarray) -> float:
    """Population-weighted accumulated payoff advantage.

    Nonnegative, and zero exactly where the mean flow is zero; its
    gradient in ``p`` equals the flow itself, which is what makes it a
    storage function for the dynamics.
    """
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    levels = protocol.phi_integral(np.maximum(p[None, :] - p[:, None], 0.0))
    return float(x @ levels.sum(axis=1))


def ipc_dissipation(protocol: IPCProtocol, x: np.ndarray,
                    p: np.ndarray) -> float:
    """Decay rate paired with :func:`ipc_storage`; nonnegative and zero
    exactly where the flow is zero."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    levels = protocol.phi_integral(np.maximum(p[None, :] - p[:, None], 0.0))
    row_levels = levels.sum(axis=1)
    T = protocol.phi(np.maximum(p[None, :] - p[:, None], 0.0))
    v = T.T @ x - x * T.sum(axis=1)
    return float(-(v @ row_levels))
