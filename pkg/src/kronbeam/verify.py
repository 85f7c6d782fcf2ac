"""Self-check suites behind the `verify` CLI subcommand.

Each suite returns (name, passed, detail).  The suites mirror the core
invariants: ramp reconstruction, factor-swap permutation identities,
interference nulling, exhaustive-over-greedy dominance, and the antenna
configuration rank condition.
"""

from __future__ import annotations

import math

import numpy as np

from . import beamformers
from .beamformers import InfeasibleConfigurationError
from .harness import SimConfig, make_scenario, trial_rng
from .kron import (
    kron_all,
    materialize,
    phase_ramp,
    primitive_decompose_ramp,
    swap_permutation,
)
from .numerics import HermitianMatrix, NotPositiveDefiniteError, cholesky


def verify_reconstruction(seed: int = 0, cases: int = 400):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(cases):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        n = int(rng.choice([2, 4, 8, 12, 16, 128]))
        err = np.max(np.abs(materialize(primitive_decompose_ramp(theta, n))
                            - phase_ramp(theta, n)))
        worst = max(worst, float(err))
    passed = worst <= 1e-12
    return "reconstruction", passed, f"max ramp error {worst:.2e} over {cases} cases"


def verify_permutation(seed: int = 0, cases: int = 400):
    rng = np.random.default_rng(seed)
    ok = True
    for _ in range(cases):
        n_fac = int(rng.integers(2, 5))
        lengths = [int(rng.choice([2, 2, 3])) for _ in range(n_fac)]
        p, q = sorted(rng.choice(n_fac, size=2, replace=False))
        perm = swap_permutation(lengths, int(p), int(q))
        P = perm.materialize()
        if not np.array_equal(P.T @ P, np.eye(perm.n)):
            ok = False
            break
        vecs = [rng.standard_normal(m) + 1j * rng.standard_normal(m) for m in lengths]
        swapped = list(vecs)
        swapped[p], swapped[q] = swapped[q], swapped[p]
        if np.max(np.abs(perm.apply(kron_all(swapped)) - kron_all(vecs))) > 1e-12:
            ok = False
            break
    return "permutation", ok, f"{cases} random factor swaps"


def _corrupt_column(col: beamformers.AnalogColumn) -> np.ndarray:
    """Flip the alternating sign pattern inside every nulling factor."""
    bad_gamma = []
    for f in col.gamma_factors:
        n = len(f)
        bad_gamma.append(f.entries * (-1.0) ** np.arange(n))
    chain = kron_all([*bad_gamma, *(f.entries for f in col.res_factors)])
    return col.permutation.apply(chain)


def verify_nulling(seed: int = 0, scenarios: int = 25, corrupt: bool = False):
    config = SimConfig()
    geom = config.geometry
    worst = 0.0
    for t in range(scenarios):
        scenario = make_scenario(config, trial_rng(seed, t))
        for build in (beamformers.build_dynamic, beamformers.build_los,
                      beamformers.build_successive, beamformers.build_exhaustive):
            bf = build(scenario, geom)
            if corrupt:
                F = np.stack([_corrupt_column(c) for c in bf.columns], axis=1)
                bf = beamformers.HybridBeamformer(F, bf.F_BB)
            res = beamformers.nulling_residuals(bf, scenario, geom)
            worst = max(worst, float(np.max(res)))
    passed = worst <= 1e-12
    return "nulling", passed, f"max relative residual {worst:.2e} over {scenarios} scenarios"


def verify_dominance(seed: int = 0, scenarios: int = 10):
    config = SimConfig()
    geom = config.geometry
    ok = True
    for t in range(scenarios):
        scenario = make_scenario(config, trial_rng(seed, t))
        bf_dyn = beamformers.build_dynamic(scenario, geom)
        bf_ex = beamformers.build_exhaustive(scenario, geom)
        for k, user in enumerate(scenario.users):
            gv = user.G @ user.v
            p_dyn = abs(np.vdot(bf_dyn.F_RF[:, k], gv)) ** 2
            p_ex = abs(np.vdot(bf_ex.F_RF[:, k], gv)) ** 2
            if not (p_ex >= p_dyn >= 0.0):
                ok = False
    return "dominance", ok, f"exhaustive >= greedy desired power, {scenarios} scenarios"


def verify_rank_condition(seed: int = 0, scenarios: int = 200):
    """Boundary antenna configuration keeps the analog stage full rank,
    and the undersized configuration raises the infeasibility error."""
    config = SimConfig(M=4, N=4, Psi=2, Gamma_psi=(1, 1))
    geom = config.geometry
    full_rank = 0
    for t in range(scenarios):
        scenario = make_scenario(config, trial_rng(seed, t))
        bf = beamformers.build_dynamic(scenario, geom)
        F = bf.F_RF / np.linalg.norm(bf.F_RF, axis=0, keepdims=True)
        B = F.conj().T @ F
        shifted = B - (1e-6) ** 2 * np.eye(config.K)
        try:
            cholesky(HermitianMatrix(shifted))
            full_rank += 1
        except NotPositiveDefiniteError:
            pass
    frac = full_rank / scenarios

    small = SimConfig(M=2, N=4, Psi=2, Gamma_psi=(1, 1))
    try:
        beamformers.build_dynamic(make_scenario(small, trial_rng(seed, 0)), small.geometry)
        raised = False
    except InfeasibleConfigurationError:
        raised = True
    passed = frac >= 0.99 and raised
    return "rank_condition", passed, (
        f"full rank in {100 * frac:.1f}% of {scenarios} draws; "
        f"undersized array {'raised' if raised else 'DID NOT raise'}")


def run_suites(seed: int = 0, corrupt: str | None = None, rank_scenarios: int = 200):
    results = [
        verify_reconstruction(seed),
        verify_permutation(seed),
        verify_nulling(seed, corrupt=(corrupt == "nulling")),
        verify_dominance(seed),
        verify_rank_condition(seed, scenarios=rank_scenarios),
    ]
    return results
