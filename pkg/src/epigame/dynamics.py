"""Closed-loop assembly and integration.

The full system couples the SIRS compartments, the strategy-share flow
under a revision protocol, and a scalar payoff state whose drift steers
the aggregate transmission rate toward the designed target. States are
integrated in the primal coordinates (I, R, x, q); the rate-scaled
variables used by the storage functions are derived diagnostics.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .bounds import epidemic_storage
from .design import DesignTarget, endemic_point
from .errors import InvariantBreach, NonPositiveInfectious, StepSizeUnderflow
from .model import (
    SIMPLEX_NEG_TOL,
    EpidemicParams,
    StrategyProfile,
    SystemState,
)
from .protocols import (
    IPCProtocol,
    RevisionProtocol,
    SmithProtocol,
    ipc_dissipation,
    ipc_storage,
    mean_dynamics,
)


def reference_epidemics(params: EpidemicParams, B: float) -> tuple[float, float]:
    """Reference (I, R) pair the payoff dynamics track for rate ``B``.

    This is the endemic rest point of the SIRS block if the aggregate
    rate were frozen at ``B``; both entries lie in (0, 1) for
    ``B > sigma``.
    """
    return endemic_point(params, B)


def payoff_state_derivative(profile: StrategyProfile, params: EpidemicParams,
                            design: DesignTarget, upsilon: float,
                            I: float, R: float, x: np.ndarray,
                            q: float = 0.0) -> float:
    """Drift of the scalar payoff state.

    Combines the infection tracking error (in level and log), the gap
    between the designed and current aggregate rates weighted by
    ``upsilon**2``, and a recovered-fraction correction. Independent of
    ``q`` itself.
    """
    if I <= 0:
        raise NonPositiveInfectious(f"I={I} must be positive")
    B = profile.transmission_rate(x)
    I_hat, R_hat = reference_epidemics(params, B)
    eta = params.eta
    return ((I_hat - I) + eta * (math.log(I) - math.log(I_hat))
            + upsilon ** 2 * (design.beta_star - B)
            + (B / params.gamma) * (R - R_hat) * (1.0 - eta - R))


def reward_vector(profile: StrategyProfile, design: DesignTarget,
                  q: float) -> np.ndarray:
    """Reward paid per strategy: payoff state times rate ladder plus the
    stationary reward."""
    return q * profile.beta + design.r_star


def payoff_vector(profile: StrategyProfile, design: DesignTarget,
                  q: float) -> np.ndarray:
    """Net payoff per strategy (reward minus intrinsic cost)."""
    return q * profile.beta + design.r_o


def smith_q_bound(protocol: SmithProtocol, profile: StrategyProfile,
                  rho: float) -> float:
    """Symmetric saturation level beyond which the payoff state cannot
    change the Smith flow: past it, every pairwise comparison is either
    rate-capped or hopeless."""
    return (protocol.t_bar / protocol.lam + rho) / profile.min_beta_gap()


def saturate_q(q: float, q_min: float, q_max: float) -> float:
    """Clamp the payoff state into [-q_min, q_max]."""
    return max(-q_min, min(q, q_max))


@dataclass(frozen=True)
class NaiveBaseline:
    """Static reward rule for comparison runs: shifted costs plus a
    proportional pull toward a fixed target mix. No payoff state."""

    mu: float
    x_check: np.ndarray


@dataclass(frozen=True)
class MechanismConfig:
    """Run-time configuration of the payoff mechanism.

    ``saturation`` is ``None`` (off, the default), the string ``"auto"``
    (symmetric Smith bound, with ``rho_for_saturation`` overriding the
    penalty read from the design; two-strategy designs default the
    penalty to zero since it never enters the reward), or an explicit
    ``(q_min, q_max)`` pair.
    """

    design: DesignTarget
    upsilon: float
    saturation: object = None
    rho_for_saturation: float | None = None
    baseline: NaiveBaseline | None = None

    def q_bounds(self, protocol: RevisionProtocol,
                 profile: StrategyProfile) -> tuple[float, float] | None:
        if self.saturation is None:
            return None
        if self.saturation == "auto":
            if not isinstance(protocol, SmithProtocol):
                raise ValueError("auto saturation bounds exist only for "
                                 "the Smith protocol")
            rho = self.rho_for_saturation
            if rho is None:
                rho = 0.0 if profile.n == 2 else self.design.rho_star
            b = smith_q_bound(protocol, profile, rho)
            return (b, b)
        q_min, q_max = self.saturation
        if q_min <= 0 or q_max <= 0:
            raise ValueError("saturation bounds must be positive")
        return (float(q_min), float(q_max))


def closed_loop_rhs(protocol: RevisionProtocol, profile: StrategyProfile,
                    params: EpidemicParams, config: MechanismConfig,
                    state: SystemState):
    """Time derivative (dI, dR, dx, dq) of the closed loop at ``state``."""
    y = np.concatenate(([state.I, state.R], state.x, [state.q]))
    f = _make_rhs(protocol, profile, params, config)
    dy = f(y)
    if np.any(~np.isfinite(dy)):
        raise NonPositiveInfectious(f"I={state.I} too small to evaluate")
    n = profile.n
    return float(dy[0]), float(dy[1]), dy[2:2 + n].copy(), float(dy[-1])


def naive_baseline_rhs(profile: StrategyProfile, params: EpidemicParams,
                       protocol: RevisionProtocol, mu: float,
                       x_check: np.ndarray, state: SystemState):
    """Derivative under the static comparison reward rule."""
    B = profile.transmission_rate(state.x)
    dI = (B * (1.0 - state.I - state.R) - params.sigma) * state.I
    dR = params.gamma * state.I - params.omega * state.R
    r = profile.ctilde + mu * (np.asarray(x_check) - state.x)
    p = r - profile.cost
    dx = mean_dynamics(protocol, state.x, p)
    return dI, dR, dx, 0.0


def _make_rhs(protocol, profile, params, config):
    beta = profile.beta
    n = profile.n
    sigma, omega, gamma, eta = (params.sigma, params.omega,
                                params.gamma, params.eta)
    ups2 = config.upsilon ** 2
    design = config.design
    bstar = design.beta_star
    r_o = design.r_o
    bounds = config.q_bounds(protocol, profile)
    baseline = config.baseline
    nan_dy = np.full(n + 3, np.nan)

    def rhs(y):
        I, R = y[0], y[1]
        if I <= 0.0:
            # transient probe outside the domain: poison the step so the
            # error control rejects it rather than raising mid-stage
            return nan_dy
        x = y[2:2 + n]
        q = y[-1]
        B = float(beta @ x)
        dI = (B * (1.0 - I - R) - sigma) * I
        dR = gamma * I - omega * R
        if baseline is not None:
            p = profile.ctilde + baseline.mu * (baseline.x_check - x) \
                - profile.cost
            dq = 0.0
        else:
            q_eff = q if bounds is None else saturate_q(q, *bounds)
            p = q_eff * beta + r_o
            depletion = 1.0 - sigma / B
            I_hat = eta * depletion
            R_hat = (1.0 - eta) * depletion
            dq = ((I_hat - I) + eta * (math.log(I) - math.log(I_hat))
                  + ups2 * (bstar - B)
                  + (B / gamma) * (R - R_hat) * (1.0 - eta - R))
        dx = mean_dynamics(protocol, x, p)
        out = np.empty(n + 3)
        out[0], out[1] = dI, dR
        out[2:2 + n] = dx
        out[-1] = dq
        return out

    return rhs


@dataclass
class Trajectory:
    """Sampled closed-loop run with per-sample diagnostics.

    Flow storage/dissipation columns are NaN when the protocol is not
    of IPC type (no closed-form storage to evaluate).
    """

    times: np.ndarray
    I: np.ndarray
    R: np.ndarray
    x: np.ndarray          # (len(times), n)
    q: np.ndarray
    B: np.ndarray
    r: np.ndarray          # (len(times), n) reward actually paid
    p: np.ndarray          # (len(times), n) net payoff driving the flow
    reward_cost: np.ndarray
    L: np.ndarray
    sS: np.ndarray
    S_storage: np.ndarray
    P_dissipation: np.ndarray
    I_hat: np.ndarray
    R_hat: np.ndarray
    accepted_steps: int = 0
    rejected_steps: int = 0

    def state_at(self, k: int) -> SystemState:
        return SystemState(I=float(self.I[k]), R=float(self.R[k]),
                           x=self.x[k], q=float(self.q[k]))

    def peak_infection_ratio(self, I_star: float) -> float:
        return float(self.I.max() / I_star)

    def settling_time(self, design: DesignTarget, *, rel: float = 1e-3,
                      hold_days: float = 100.0) -> float | None:
        """Earliest sample time from which the trajectory stays within
        ``rel`` of the target for at least ``hold_days``; None if it
        never does (including when the tail is shorter than the hold
        window)."""
        err = np.maximum.reduce([
            np.abs(self.I - design.I_star) / design.I_star,
            np.abs(self.R - design.R_star) / design.R_star,
            np.abs(self.B - design.beta_star),
        ])
        ok = err < rel
        # suffix scan: inside[k] iff ok holds on [t_k, t_k + hold]
        for k in range(len(self.times)):
            if self.times[-1] - self.times[k] < hold_days:
                return None
            stop = np.searchsorted(self.times, self.times[k] + hold_days,
                                   side="right")
            if ok[k:stop].all():
                return float(self.times[k])
        return None

    def mean_reward_cost(self, t_from: float, t_to: float | None = None) -> float:
        """Time-average of the paid reward rate over [t_from, t_to]."""
        if t_to is None:
            t_to = float(self.times[-1])
        sel = (self.times >= t_from) & (self.times <= t_to)
        t = self.times[sel]
        if t.size < 2:
            raise ValueError("window contains fewer than two samples")
        return float(np.trapz(self.reward_cost[sel], t) / (t[-1] - t[0]))

    def to_csv(self, path) -> None:
        n = self.x.shape[1]
        header = (["t", "I", "R", "S", "B", "q"]
                  + [f"x_{i + 1}" for i in range(n)]
                  + [f"r_{i + 1}" for i in range(n)]
                  + ["reward_cost", "L", "sS", "S_storage",
                     "P_dissipation", "I_hat", "R_hat"])
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(len(self.times)):
                row = ([self.times[k], self.I[k], self.R[k],
                        1.0 - self.I[k] - self.R[k], self.B[k], self.q[k]]
                       + list(self.x[k]) + list(self.r[k])
                       + [self.reward_cost[k], self.L[k], self.sS[k],
                          self.S_storage[k], self.P_dissipation[k],
                          self.I_hat[k], self.R_hat[k]])
                w.writerow([repr(float(v)) for v in row])


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176,
              -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784,
                11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640,
                -92097 / 339200, 187 / 2100, 1 / 40])
_ERR = _B5 - _B4


def integrate(protocol: RevisionProtocol, profile: StrategyProfile,
              params: EpidemicParams, config: MechanismConfig,
              initial: SystemState, t_end: float, *,
              rtol: float = 1e-8, atol: float = 1e-10,
              sample_every: float | None = 1.0,
              max_step: float | None = None,
              t0: float = 0.0) -> Trajectory:
    """Integrate the closed loop with adaptive order-5(4) Runge-Kutta.

    Per-step error control at the given tolerances; steps are clipped so
    that every output sample lands on an accepted step. After each
    accepted step the strategy shares are cleaned of round-off negatives
    and renormalized, and the state invariants (I > 0, R bounded, shares
    on the simplex) are enforced.

    Parameters
    ----------
    sample_every : float or None
        Output sampling interval in days (None records only the
        endpoints).
    max_step : float or None
        Optional hard cap on the step size.
    """
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    f = _make_rhs(protocol, profile, params, config)
    n = profile.n
    y = np.concatenate(([initial.I, initial.R], initial.x, [initial.q]))

    if sample_every is None:
        out_times = [t0, t_end]
    else:
        out_times = list(np.arange(t0, t_end, sample_every)) + [t_end]

    records = []
    bounds = config.q_bounds(protocol, profile)

    def record(t, y_now):
        records.append((t, y_now.copy()))

    t = t0
    record(t, y)
    next_out = 1
    t_done = t_end - 1e-12 * max(1.0, abs(t_end))

    k = np.empty((7, y.size))
    k[0] = f(y)
    h = _initial_step(y, k[0], rtol, atol)
    if max_step is not None:
        h = min(h, max_step)
    accepted = rejected = 0

    while t < t_done:
        h = min(h, t_end - t)
        target = out_times[next_out] if next_out < len(out_times) else t_end
        if target > t:
            h = min(h, target - t)
        if max_step is not None:
            h = min(h, max_step)
        if h < 16 * np.finfo(float).eps * max(1.0, abs(t)):
            raise StepSizeUnderflow(t, y, h)

        for i in range(1, 7):
            k[i] = f(y + h * (_A[i] @ k[:i]))
        y_new = y + h * (_B5 @ k)
        err_vec = h * (_ERR @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        with np.errstate(invalid="ignore"):
            err = math.sqrt(float(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err):
            err = math.inf  # domain excursion: shrink hard and retry

        if err <= 1.0:
            t_new = t + h
            y_new = _enforce_invariants(y_new, n, t_new)
            t, y = t_new, y_new
            accepted += 1
            k[0] = f(y)
            while next_out < len(out_times) and t >= out_times[next_out] - 1e-9:
                record(out_times[next_out], y)
                next_out += 1
            factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
            h *= factor
        else:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2 if np.isfinite(err) else 0.0)

    return _assemble(records, protocol, profile, params, config, bounds,
                     accepted, rejected)


def _initial_step(y, f0, rtol, atol):
    scale = atol + rtol * np.abs(y)
    d0 = math.sqrt(float(np.mean((y / scale) ** 2)))
    d1 = math.sqrt(float(np.mean((f0 / scale) ** 2)))
    if d0 < 1e-5 or d1 < 1e-5:
        return 1e-6
    return 0.01 * d0 / d1


def _enforce_invariants(y, n, t):
    I, R = y[0], y[1]
    if I <= 0.0:
        raise InvariantBreach(t, y, f"I={I!r} not positive")
    if R < -1e-9:
        raise InvariantBreach(t, y, f"R={R!r} negative")
    if I + R > 1.0 + 1e-9:
        raise InvariantBreach(t, y, f"I+R={I + R!r} exceeds 1")
    x = y[2:2 + n]
    lo = x.min()
    if lo < SIMPLEX_NEG_TOL:
        raise InvariantBreach(t, y, f"strategy share {lo!r} negative")
    x = np.clip(x, 0.0, None)
    y = y.copy()
    y[2:2 + n] = x / x.sum()
    return y


def _assemble(records, protocol, profile, params, config, bounds,
              accepted, rejected) -> Trajectory:
    n = profile.n
    design = config.design
    m = len(records)
    times = np.array([r[0] for r in records])
    Y = np.array([r[1] for r in records])
    I, R, q = Y[:, 0], Y[:, 1], Y[:, -1]
    X = Y[:, 2:2 + n]
    B = X @ profile.beta
    is_ipc = isinstance(protocol, IPCProtocol)

    r = np.empty((m, n))
    p = np.empty((m, n))
    sS = np.empty(m)
    S_sto = np.full(m, np.nan)
    P_dis = np.full(m, np.nan)
    for j in range(m):
        if config.baseline is not None:
            r[j] = profile.ctilde + config.baseline.mu * (
                config.baseline.x_check - X[j])
            p[j] = r[j] - profile.cost
        else:
            q_eff = q[j] if bounds is None else saturate_q(q[j], *bounds)
            r[j] = q_eff * profile.beta + design.r_star
            p[j] = q_eff * profile.beta + design.r_o
        sS[j] = epidemic_storage(params, design, config.upsilon,
                                 B[j] * I[j], B[j] * R[j], B[j])
        if is_ipc:
            S_sto[j] = ipc_storage(protocol, X[j], p[j])
            P_dis[j] = ipc_dissipation(protocol, X[j], p[j])

    depletion = 1.0 - params.sigma / B
    I_hat = params.eta * depletion
    R_hat = (1.0 - params.eta) * depletion
    return Trajectory(
        times=times, I=I, R=R, x=X, q=q, B=B, r=r, p=p,
        reward_cost=np.einsum("ij,ij->i", r, X),
        L=S_sto + sS, sS=sS, S_storage=S_sto, P_dissipation=P_dis,
        I_hat=I_hat, R_hat=R_hat,
        accepted_steps=accepted, rejected_steps=rejected)
