"""Incentive design and closed-loop simulation for SIRS epidemics whose
transmission rate is set by a population of strategy-revising agents.

The package provides:

- validated domain types (strategy profiles, epidemic rates, states),
- closed-form incentive design (target mix, endemic point, rewards),
- revision protocols with their mean dynamics and storage functions,
- adaptive integration of the coupled epidemic/game/payoff loop,
- Lyapunov-level diagnostics and certified anytime overshoot bounds,
- a command-line front end for scenario files, sweeps and plots.
"""

from .bounds import (
    AnytimeBound,
    DissipationReport,
    InitialLevel,
    LyapunovLevel,
    PiStarOracle,
    anytime_bound,
    check_dissipation,
    epidemic_storage,
    initial_level,
    lyapunov_level,
    overshoot_floor,
    pi_star,
    pi_star_oracle,
    select_upsilon,
)
from .design import (
    Case,
    CaseClassification,
    DesignTarget,
    check_assumption1,
    classify_case,
    endemic_point,
    lp_oracle_beta_star,
    optimal_target,
    validate_rho,
)
from .dynamics import (
    MechanismConfig,
    NaiveBaseline,
    Trajectory,
    closed_loop_rhs,
    integrate,
    naive_baseline_rhs,
    payoff_state_derivative,
    payoff_vector,
    reference_epidemics,
    reward_vector,
    saturate_q,
    smith_q_bound,
)
from .model import (
    EpidemicParams,
    PopulationState,
    StrategyProfile,
    SystemState,
    normalize_simplex,
    reparameterize,
    validate_profile,
)
from .protocols import (
    IPCProtocol,
    RevisionProtocol,
    SmithProtocol,
    StationarityReport,
    best_response,
    check_nash_stationarity,
    ipc_dissipation,
    ipc_storage,
    mean_dynamics,
)

__version__ = "0.1.0"
