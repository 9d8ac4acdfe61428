"""Walk through the closed-form incentive design on the baseline scenario.

The planner has two strategies available to the population: a cautious
one (low transmission contribution, high cost) and a risky one. Given a
budget on the long-run reward cost, the design picks the cheapest mix
that minimizes the aggregate transmission rate, the endemic point it
induces, and the stationary reward that makes the mix a best response.
"""

import numpy as np

import epigame as eg

params = eg.EpidemicParams(g=0.0, sigma_bar=0.1, omega_bar=0.005, gamma=0.1)
profile = eg.validate_profile(beta=[0.15, 0.19], cost=[0.2, 0.0],
                              params=params)
print(f"infectious exit rate sigma = {params.sigma}, split eta = {params.eta:.6f}")

design = eg.optimal_target(profile, params, c_star=0.1, rho_star=1.0)
print(f"case {design.classification.kind.value}: "
      f"target mix x* = {design.x_star}, rate beta* = {design.beta_star:.6g}")
print(f"endemic point: I* = {design.I_star:.4%}, R* = {design.R_star:.4%}")
print(f"stationary reward r* = {design.r_star} (budget r*'x* = "
      f"{design.r_star @ design.x_star:.4g})")

# Cross-check the closed form against a brute-force lattice search.
oracle = eg.lp_oracle_beta_star(profile, c_star=0.1, grid_resolution=2000)
print(f"lattice oracle rate   = {oracle:.6g} (closed form {design.beta_star:.6g})")

# A three-strategy design with the budget exactly on a cost level: the
# target collapses to a vertex and off-target strategies are penalized.
profile3 = eg.validate_profile(beta=[0.12, 0.15, 0.19],
                               cost=[0.3, 0.1, 0.0], params=params)
design3 = eg.optimal_target(profile3, params, c_star=0.1, rho_star=0.07)
print(f"\nthree strategies, budget on a level: case "
      f"{design3.classification.kind.value}, x* = {design3.x_star}")
print(f"penalized rewards r* = {design3.r_star}")
print(f"payoff-state limit interval = "
      f"[{design3.q_interval[0]:.6g}, {design3.q_interval[1]:.6g}]")
