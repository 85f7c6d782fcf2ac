import dataclasses
import math

import numpy as np
import pytest

from conftest import mc_second_moments, scenario_for
from kronbeam.beamformers import HybridBeamformer, build_dynamic, build_pure_mmse
from kronbeam.channel import PathAngles, Scenario, UserChannel
from kronbeam.metrics import SinrBreakdown, per_user_rates, sinr_breakdown, sum_rate

ANGLES = PathAngles(0.3, 1.2, 0.1)


def basis_user(mn, idx):
    G = np.zeros((mn, 1), dtype=complex)
    G[idx, 0] = 1.0
    return UserChannel(G, ((1.0 + 0j, ANGLES),), np.ones(1, dtype=complex))


def test_matched_filter_algebra():
    scenario, geom = scenario_for(K=1, Psi=0, Gamma_psi=())
    g = scenario.users[0].G @ scenario.users[0].v
    bf = HybridBeamformer(np.eye(geom.mn, dtype=complex), g.reshape(-1, 1))
    sb = sinr_breakdown(0, bf, scenario)
    assert sb.p_intra == 0.0
    assert sb.p_inter == 0.0
    assert sb.p_desired == pytest.approx(scenario.P_U * np.linalg.norm(g) ** 4, rel=1e-12)
    assert sb.p_noise == pytest.approx(scenario.N0 * np.linalg.norm(g) ** 2, rel=1e-12)


def test_nulling_scheme_inter_power_is_negligible():
    scenario, geom = scenario_for(trial=1)
    bf = build_dynamic(scenario, geom)
    for k in range(scenario.K):
        sb = sinr_breakdown(k, bf, scenario)
        assert sb.p_inter <= 1e-18 * sb.p_desired


def test_powers_match_symbol_level_second_moments():
    scenario, geom = scenario_for(trial=2)
    rng = np.random.default_rng(40)
    F_RF = np.exp(2j * np.pi * rng.uniform(size=(geom.mn, scenario.K)))
    F_BB = rng.standard_normal((scenario.K, scenario.K)) \
        + 1j * rng.standard_normal((scenario.K, scenario.K))
    bf = HybridBeamformer(F_RF, F_BB)
    mc = mc_second_moments(bf, scenario, n_symbols=100_000, seed=7)
    for k in range(scenario.K):
        sb = sinr_breakdown(k, bf, scenario)
        for j, analytic in enumerate((sb.p_desired, sb.p_intra, sb.p_inter, sb.p_noise)):
            assert mc[k, j] == pytest.approx(analytic, rel=0.02)


def test_sum_rate_unit_sinr():
    mn, K = 4, 4
    users = tuple(basis_user(mn, k) for k in range(K))
    scenario = Scenario(users, (), P_U=1.0, P_I=1.0, N0=1.0)
    bf = HybridBeamformer(np.eye(mn, dtype=complex), np.eye(mn, dtype=complex)[:, :K])
    assert sum_rate(bf, scenario) == pytest.approx(4.0, rel=1e-12)


def test_rate_zero_when_no_desired_power():
    scenario = Scenario((basis_user(2, 0),), (), 1.0, 1.0, 0.3)
    f_bb = np.array([[0.0], [1.0]], dtype=complex)  # orthogonal to the channel
    bf = HybridBeamformer(np.eye(2, dtype=complex), f_bb)
    sb = sinr_breakdown(0, bf, scenario)
    assert sb.p_desired == 0.0
    assert sb.rate == 0.0


def test_sum_rate_is_compositional():
    scenario, geom = scenario_for(trial=3)
    bf = build_dynamic(scenario, geom)
    total = sum(math.log2(1.0 + sinr_breakdown(k, bf, scenario).sinr)
                for k in range(scenario.K))
    assert sum_rate(bf, scenario) == pytest.approx(total, rel=1e-12)
    np.testing.assert_allclose(per_user_rates(bf, scenario).sum(), total, rtol=1e-12)


def test_pure_mmse_rate_monotone_in_transmit_power():
    scenario, _ = scenario_for(trial=4)
    rates = []
    for p_u in (0.25, 0.5, 1.0, 2.0, 4.0, 16.0):
        scn = dataclasses.replace(scenario, P_U=p_u)
        rates.append(sum_rate(build_pure_mmse(scn), scn))
    assert all(b >= a - 1e-9 for a, b in zip(rates, rates[1:]))


def test_rate_invariant_to_combiner_column_scaling():
    scenario, geom = scenario_for(trial=5)
    bf = build_dynamic(scenario, geom)
    base = [sinr_breakdown(k, bf, scenario).rate for k in range(scenario.K)]
    for c in (2.0, -0.5, 3j, 0.1 - 0.7j):
        F_BB = bf.F_BB.copy()
        F_BB[:, 1] *= c
        scaled = HybridBeamformer(bf.F_RF, F_BB)
        assert sinr_breakdown(1, scaled, scenario).rate == pytest.approx(base[1], rel=1e-10)


def test_sinr_breakdown_validation():
    with pytest.raises(ValueError):
        SinrBreakdown(-1.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        SinrBreakdown(1.0, 0.0, math.inf, 1.0)
