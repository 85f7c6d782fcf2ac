"""Shared fixtures and independent test oracles."""

import math

import numpy as np
from threadpoolctl import threadpool_limits

from kronbeam.harness import SimConfig, make_scenario, trial_rng

# single-threaded BLAS: the suite runs many small factorizations where
# thread handoff dominates the arithmetic
threadpool_limits(limits=1)


def scenario_for(trial=0, seed=1, **overrides):
    cfg = SimConfig(**overrides) if overrides else SimConfig()
    return make_scenario(cfg, trial_rng(seed, trial)), cfg.geometry


def mc_second_moments(beamformer, scenario, n_symbols=100_000, seed=0, chunk=5_000):
    """Symbol-level Monte-Carlo estimate of the per-user power components.

    Simulates random symbol/interference/noise draws through the full
    antenna-domain model and measures sample second moments of each
    combiner-output component.  Independent of the analytic power path.
    """
    rng = np.random.default_rng(seed)
    W = np.asarray(beamformer.F_RF) @ np.asarray(beamformer.F_BB)
    G_eff = scenario.effective_channel()
    H = scenario.interference_matrix()
    mn = G_eff.shape[0]
    K, Psi = scenario.K, scenario.Psi
    acc = np.zeros((K, 4))
    done = 0
    while done < n_symbols:
        m = min(chunk, n_symbols - done)
        x = math.sqrt(scenario.P_U / 2) * (rng.standard_normal((K, m))
                                           + 1j * rng.standard_normal((K, m)))
        s = math.sqrt(scenario.P_I / 2) * (rng.standard_normal((Psi, m))
                                           + 1j * rng.standard_normal((Psi, m)))
        z = math.sqrt(scenario.N0 / 2) * (rng.standard_normal((mn, m))
                                          + 1j * rng.standard_normal((mn, m)))
        y_inter = H @ s if Psi else np.zeros((mn, m))
        for k in range(K):
            w = W[:, k]
            y_des = G_eff[:, [k]] @ x[[k], :]
            others = [q for q in range(K) if q != k]
            y_intra = G_eff[:, others] @ x[others, :] if others else np.zeros((mn, m))
            acc[k, 0] += np.sum(np.abs(w.conj() @ y_des) ** 2)
            acc[k, 1] += np.sum(np.abs(w.conj() @ y_intra) ** 2)
            acc[k, 2] += np.sum(np.abs(w.conj() @ y_inter) ** 2)
            acc[k, 3] += np.sum(np.abs(w.conj() @ z) ** 2)
        done += m
    return acc / n_symbols
