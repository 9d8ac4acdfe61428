"""Poke at the revision-protocol layer directly.

Shows the switch-rate matrix, the induced mean flow and its
conservation, rest points at best responses, the storage/dissipation
pair, and how the payoff-state saturation bound leaves the flow
untouched.
"""

import numpy as np

import epigame as eg

protocol = eg.SmithProtocol(lam=0.1, t_bar=0.1)
x = np.array([1.0, 0.0])
p = np.array([0.0, 1.0])

print("rates:\n", protocol.rates(x, p))
v = eg.mean_dynamics(protocol, x, p)
print("mean flow:", v, "(sums to", v.sum(), ")")
print("best response face of p:", eg.best_response(p))
print("flow at the best-response vertex:",
      eg.mean_dynamics(protocol, np.array([0.0, 1.0]), p))

print("storage    :", eg.ipc_storage(protocol, x, p))
print("dissipation:", eg.ipc_dissipation(protocol, x, p))

report = eg.check_nash_stationarity(protocol,
                                    eg.StrategyProfile([0.12, 0.15, 0.19],
                                                       [0.3, 0.1, 0.0]),
                                    samples=2000, seed=7)
print("stationarity sweep:", report)

# Saturation: beyond the bound, moving q cannot change any comparison.
params = eg.EpidemicParams(g=0.0, sigma_bar=0.1, omega_bar=0.005, gamma=0.1)
profile = eg.validate_profile([0.15, 0.19], [0.2, 0.0], params)
design = eg.optimal_target(profile, params, 0.1, 1.0)
q_cap = eg.smith_q_bound(protocol, profile, rho=0.0)
print(f"\nsaturation level: {q_cap}")
for q in (10.0, 30.0, 100.0):
    q_sat = eg.saturate_q(q, q_cap, q_cap)
    a = eg.mean_dynamics(protocol, [0.3, 0.7], q * profile.beta + design.r_o)
    b = eg.mean_dynamics(protocol, [0.3, 0.7],
                         q_sat * profile.beta + design.r_o)
    print(f"q={q:6.1f} -> q_sat={q_sat:5.1f}; flow difference "
          f"{np.abs(a - b).max():.1e}")
