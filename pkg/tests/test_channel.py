import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kronbeam.channel import (
    ArrayGeometry,
    PathAngles,
    Scenario,
    gen_interference_channel,
    gen_user_channel,
    precoder,
    redraw_nlos_gains,
    ula_steering,
    upa_factor_chain,
    upa_steering,
)
from kronbeam.kron import materialize

GEOM = ArrayGeometry(M=8, N=16, Q=2)


# --- steering vectors ---------------------------------------------------------

def test_ula_steering_broadside():
    v = ula_steering(0.0, ArrayGeometry(M=1, N=1, Q=5))
    np.testing.assert_array_equal(v.entries, np.ones(5))


def test_ula_steering_endfire():
    v = ula_steering(math.pi / 2, ArrayGeometry(M=1, N=1, Q=2))
    np.testing.assert_allclose(v.entries, [1.0, -1.0], atol=1e-12)


def test_ula_steering_direct_formula():
    geom = ArrayGeometry(M=1, N=1, Q=4)
    phi = 0.83
    v = ula_steering(phi, geom)
    expected = np.exp(1j * 2 * np.pi * 0.5 * np.arange(4) * np.sin(phi))
    np.testing.assert_allclose(v.entries, expected, atol=1e-14)


def test_upa_steering_boresight():
    v = upa_steering(0.0, math.pi / 2, GEOM)
    np.testing.assert_allclose(v.entries, np.ones(GEOM.mn), atol=1e-12)


def test_upa_steering_2x2_hand_value():
    geom = ArrayGeometry(M=2, N=2, Q=1)
    v = upa_steering(math.pi / 2, math.pi / 2, geom)
    np.testing.assert_allclose(v.entries, [1.0, 1.0, -1.0, -1.0], atol=1e-12)


def test_upa_steering_is_kron_of_ramps():
    phi, theta = 1.1, 0.7
    horiz = 2 * np.pi * 0.5 * math.sin(theta) * math.sin(phi)
    vert = 2 * np.pi * 0.5 * math.cos(theta)
    a_h = np.exp(1j * horiz * np.arange(GEOM.N))
    a_v = np.exp(1j * vert * np.arange(GEOM.M))
    np.testing.assert_allclose(upa_steering(phi, theta, GEOM).entries,
                               np.kron(a_h, a_v), atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(0.0, 2 * math.pi - 1e-9), theta=st.floats(0.0, math.pi))
def test_upa_factors_through_prime_decomposition(phi, theta):
    a = upa_steering(phi, theta, GEOM).entries
    chain = upa_factor_chain(phi, theta, GEOM)
    assert chain.lengths == (2, 2, 2, 2, 2, 2, 2)
    assert np.max(np.abs(materialize(chain) - a)) <= 1e-12


# --- user channels --------------------------------------------------------------

def test_user_channel_pure_los_limit():
    rng = np.random.default_rng(0)
    user = gen_user_channel(0, GEOM, kappa=1e12, L_k=2, rng=rng)
    alpha0, ang = user.paths[0]
    rank1 = alpha0 * np.outer(upa_steering(ang.phi_r, ang.theta_r, GEOM).entries,
                              ula_steering(ang.phi_t, GEOM).entries.conj())
    assert np.linalg.norm(user.G - rank1) <= 1e-4 * np.linalg.norm(user.G)


def test_user_channel_rank_bounded_by_paths():
    rng = np.random.default_rng(1)
    for L in (1, 2, 3):
        user = gen_user_channel(0, ArrayGeometry(M=4, N=4, Q=4), kappa=3.0, L_k=L, rng=rng)
        assert np.linalg.matrix_rank(user.G) <= L


def test_user_channel_frobenius_energy():
    # E||G||_F^2 = MN*Q*(kappa/(1+kappa) + 1/(1+kappa)) = MN*Q
    rng = np.random.default_rng(2)
    geom = ArrayGeometry(M=4, N=4, Q=2)
    draws = 10_000
    acc = 0.0
    for _ in range(draws):
        acc += np.linalg.norm(gen_user_channel(0, geom, 10 ** 0.5, 2, rng).G) ** 2
    mean = acc / draws
    assert abs(mean - geom.mn * geom.Q) <= 0.03 * geom.mn * geom.Q


def test_user_channel_rejects_zero_paths():
    with pytest.raises(ValueError):
        gen_user_channel(0, GEOM, 3.0, 0, np.random.default_rng(0))


def test_redraw_nlos_keeps_angles_and_los():
    rng = np.random.default_rng(3)
    user = gen_user_channel(0, GEOM, 3.0, 3, rng)
    fresh = redraw_nlos_gains(user, GEOM, 3.0, rng)
    assert fresh.paths[0] == user.paths[0]
    for (a0, ang0), (a1, ang1) in zip(user.paths[1:], fresh.paths[1:]):
        assert ang0 == ang1
        assert a0 != a1
    assert not np.allclose(fresh.G, user.G)


# --- interference channels -------------------------------------------------------

def test_interference_single_path_norm():
    rng = np.random.default_rng(4)
    itf = gen_interference_channel(0, GEOM, 1, rng)
    alpha = itf.paths[0][0]
    assert np.linalg.norm(itf.h) == pytest.approx(abs(alpha) * math.sqrt(GEOM.mn), rel=1e-10)


def test_interference_energy_normalization():
    rng = np.random.default_rng(5)
    geom = ArrayGeometry(M=4, N=4, Q=2)
    draws = 10_000
    acc = sum(np.linalg.norm(gen_interference_channel(0, geom, 3, rng).h) ** 2
              for _ in range(draws))
    assert abs(acc / draws - geom.mn) <= 0.03 * geom.mn


def test_interference_deterministic_given_seed():
    h1 = gen_interference_channel(0, GEOM, 2, np.random.default_rng(99)).h
    h2 = gen_interference_channel(0, GEOM, 2, np.random.default_rng(99)).h
    np.testing.assert_array_equal(h1, h2)


def test_interference_rejects_zero_paths():
    with pytest.raises(ValueError):
        gen_interference_channel(0, GEOM, 0, np.random.default_rng(0))


def test_interference_vertical_angle_in_domain():
    rng = np.random.default_rng(6)
    for _ in range(200):
        itf = gen_interference_channel(0, GEOM, 2, rng)
        for _, ang in itf.paths:
            assert 0.0 <= ang.theta_r <= math.pi


# --- precoder ---------------------------------------------------------------------

def test_precoder_rank_one():
    rng = np.random.default_rng(7)
    a = rng.standard_normal(8) + 1j * rng.standard_normal(8)
    b = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    v = precoder(np.outer(a, b.conj()))
    b_unit = b / np.linalg.norm(b)
    assert abs(abs(np.vdot(v, b_unit)) - 1.0) <= 1e-8


def test_precoder_matches_2x2_closed_form():
    rng = np.random.default_rng(8)
    for _ in range(20):
        G = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
        B = G.conj().T @ G
        a, c = np.real(B[0, 0]), np.real(B[1, 1])
        lam_max = (a + c) / 2 + math.sqrt(((a - c) / 2) ** 2 + abs(B[0, 1]) ** 2)
        v = precoder(G)
        assert np.linalg.norm(G @ v) ** 2 == pytest.approx(lam_max, rel=1e-9)


def test_precoder_degenerate_tie_break():
    # orthogonal equal-norm columns: G^H G = c I; lowest-index direction wins
    q, _ = np.linalg.qr(np.random.default_rng(9).standard_normal((6, 3))
                        + 1j * np.random.default_rng(10).standard_normal((6, 3)))
    v = precoder(2.5 * q)
    assert abs(v[0]) == pytest.approx(1.0, abs=1e-8)
    assert np.imag(v[0]) == pytest.approx(0.0, abs=1e-8)
    assert np.real(v[0]) > 0


def test_precoder_gain_matches_svd_oracle():
    rng = np.random.default_rng(11)
    for _ in range(10):
        G = rng.standard_normal((12, 4)) + 1j * rng.standard_normal((12, 4))
        sigma_max = np.linalg.svd(G, compute_uv=False)[0]
        assert np.linalg.norm(G @ precoder(G)) == pytest.approx(sigma_max, rel=1e-9)


def test_precoder_scale_invariance():
    rng = np.random.default_rng(12)
    G = rng.standard_normal((8, 2)) + 1j * rng.standard_normal((8, 2))
    v1 = precoder(G)
    for c in (2.0, -3.0, 1.7j, 0.2 - 0.9j):
        v2 = precoder(c * G)
        assert abs(abs(np.vdot(v1, v2)) - 1.0) <= 1e-8


def test_precoder_rejects_zero_matrix():
    with pytest.raises(ValueError):
        precoder(np.zeros((4, 2)))


# --- misc invariants ----------------------------------------------------------------

def test_generated_channels_finite_bulk():
    rng = np.random.default_rng(13)
    geom = ArrayGeometry(M=4, N=8, Q=2)
    for _ in range(50_000):
        u = gen_user_channel(0, geom, 10 ** 0.5, 2, rng)
        assert np.all(np.isfinite(u.G)) and np.all(np.isfinite(u.v))
    for _ in range(50_000):
        i = gen_interference_channel(0, geom, 1, rng)
        assert np.all(np.isfinite(i.h))


def test_path_angles_wraps_and_validates():
    ang = PathAngles(7.0, 1.0, -1.0)
    assert 0.0 <= ang.phi_r < 2 * math.pi
    assert 0.0 <= ang.phi_t < 2 * math.pi
    with pytest.raises(ValueError):
        PathAngles(0.0, 4.0, 0.0)


def test_scenario_validation():
    rng = np.random.default_rng(14)
    user = gen_user_channel(0, GEOM, 3.0, 2, rng)
    with pytest.raises(ValueError):
        Scenario((), (), 1.0, 1.0, 0.01)
    with pytest.raises(ValueError):
        Scenario((user,), (), 1.0, 1.0, 0.0)
    scn = Scenario((user,), (), 1.0, 1.0, 0.01)
    assert scn.K == 1 and scn.Psi == 0 and scn.gamma_total == 0
    assert scn.interference_matrix().shape == (GEOM.mn, 0)
