"""Exception types raised across the package.

Validation errors subclass ``ValueError`` so they behave sensibly with
generic callers; runtime diagnostics (integration failures, certified
properties found violated) subclass ``RuntimeError``.
"""


class ValidationError(ValueError):
    """A model object or configuration violates one of its invariants."""


class NonMonotoneBeta(ValidationError):
    """Transmission-rate entries are not strictly increasing."""


class NonMonotoneCost(ValidationError):
    """Intrinsic-cost entries are not strictly decreasing."""


class BetaOneNotAboveSigma(ValidationError):
    """Safest strategy's transmission rate does not exceed sigma, so no
    endemic equilibrium exists for any admissible population state."""


class BudgetOutOfRange(ValidationError):
    """Cost budget lies outside the open interval (0, ctilde_1)."""


class Assumption1Violated(ValidationError):
    """Marginal cost of lowering transmission fails to increase as the
    rate decreases (concavity condition on the cost/rate ladder)."""


class InvalidRho(ValidationError):
    """Penalty scalar too small for the boundary (Case II) target."""


class NonPositiveInfectious(ValidationError):
    """Infectious fraction must stay strictly positive."""


class PreconditionViolated(ValidationError):
    """Inputs do not satisfy the hypotheses the requested bound needs."""


class TargetBelowFloor(ValidationError):
    """Requested overshoot target is below the provable floor."""

    def __init__(self, target: float, floor: float):
        self.target = target
        self.floor = floor
        super().__init__(
            f"overshoot target {target:.6g} is below the floor {floor:.6g}; "
            "no weight can certify it"
        )


class IntegrationError(RuntimeError):
    """Base class for closed-loop integration failures."""


class StepSizeUnderflow(IntegrationError):
    """Adaptive step control drove the step below machine feasibility."""

    def __init__(self, t: float, state, step: float):
        self.t = t
        self.state = state
        self.step = step
        super().__init__(f"step size underflow at t={t:.6g} (h={step:.3e})")


class InvariantBreach(IntegrationError):
    """An integrated state left the admissible region."""

    def __init__(self, t: float, state, reason: str):
        self.t = t
        self.state = state
        super().__init__(f"state invariant breached at t={t:.6g}: {reason}")


class NSViolation(RuntimeError):
    """Nash-stationarity check found a witnessing counterexample."""

    def __init__(self, x, p, norm_v: float, expected_zero: bool):
        self.x = x
        self.p = p
        self.norm_v = norm_v
        self.expected_zero = expected_zero
        kind = "nonzero flow at a best response" if expected_zero \
            else "zero flow away from best responses"
        super().__init__(f"{kind}: |V|={norm_v:.3e} at x={x}, p={p}")


class DissipationViolation(RuntimeError):
    """Lyapunov decay inequality failed along a trajectory sample."""

    def __init__(self, t: float, margin: float):
        self.t = t
        self.margin = margin
        super().__init__(
            f"dissipation inequality violated at t={t:.6g} "
            f"(margin {margin:.3e})"
        )
