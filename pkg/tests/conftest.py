import time

import numpy as np
import pytest

import epigame as eg


@pytest.fixture(scope="session")
def example1():
    """Baseline two-strategy setting used throughout the suite."""
    params = eg.EpidemicParams(g=0.0, sigma_bar=0.1, omega_bar=0.005,
                               gamma=0.1)
    profile = eg.validate_profile([0.15, 0.19], [0.2, 0.0], params)
    design = eg.optimal_target(profile, params, c_star=0.1, rho_star=1.0)
    protocol = eg.SmithProtocol(lam=0.1, t_bar=0.1)
    I0, R0 = eg.reference_epidemics(params, 0.15)
    initial = eg.SystemState(I=I0, R=R0, x=[1.0, 0.0], q=0.0)
    return {"params": params, "profile": profile, "design": design,
            "protocol": protocol, "initial": initial, "beta_o": 0.15}


@pytest.fixture(scope="session")
def case2_setting():
    """Three strategies with the budget exactly on a cost level."""
    params = eg.EpidemicParams(g=0.0, sigma_bar=0.1, omega_bar=0.005,
                               gamma=0.1)
    profile = eg.validate_profile([0.12, 0.15, 0.19], [0.3, 0.1, 0.0],
                                  params)
    design = eg.optimal_target(profile, params, c_star=0.1, rho_star=0.07)
    return {"params": params, "profile": profile, "design": design}


@pytest.fixture(scope="session")
def example1_runs(example1):
    """The two 4000-day closed-loop runs shared by the acceptance tests.

    Keyed by weight; each value carries the trajectory and its wall
    time.
    """
    runs = {}
    for upsilon in (0.806, 0.316):
        config = eg.MechanismConfig(design=example1["design"],
                                    upsilon=upsilon)
        start = time.perf_counter()
        traj = eg.integrate(example1["protocol"], example1["profile"],
                            example1["params"], config,
                            example1["initial"], t_end=4000.0,
                            rtol=1e-8, atol=1e-10, sample_every=1.0)
        runs[upsilon] = {"traj": traj,
                         "seconds": time.perf_counter() - start}
    return runs


def random_ladder_profile(rng, n, params):
    """Random profile satisfying the decreasing-slope condition."""
    beta = rng.uniform(0.12, 0.2) + np.concatenate(
        ([0.0], np.cumsum(rng.uniform(0.02, 0.1, n - 1))))
    slopes = np.sort(rng.uniform(0.2, 5.0, n - 1))[::-1]
    cost = np.zeros(n)
    for i in range(n - 2, -1, -1):
        cost[i] = cost[i + 1] + slopes[i] * (beta[i + 1] - beta[i])
    return eg.validate_profile(beta, cost, params)
