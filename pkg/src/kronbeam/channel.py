"""mmWave channel generation: steering vectors, user and interference channels.

Geometry conventions: the base station uses an M x N uniform planar array
(M rows vertical, N columns horizontal), each user a Q-element uniform
linear array.  Vertical angles are zenith angles in [0, pi]; horizontal
angles live in [0, 2*pi).  All spacings are in wavelengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .kron import (
    KroneckerChain,
    PhaseVector,
    kron,
    phase_ramp,
    primitive_decompose_ramp,
)
from .numerics import HermitianMatrix, top_eigpair

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ArrayGeometry:
    """Antenna layout: M x N planar array at the BS, Q-element ULA per UE."""

    M: int
    N: int
    Q: int
    d_h: float = 0.5
    d_v: float = 0.5
    d_t: float = 0.5

    def __post_init__(self):
        if min(self.M, self.N, self.Q) < 1:
            raise ValueError("antenna counts must be >= 1")
        if min(self.d_h, self.d_v, self.d_t) <= 0:
            raise ValueError("antenna spacings must be > 0")

    @property
    def mn(self) -> int:
        return self.M * self.N


@dataclass(frozen=True)
class PathAngles:
    phi_r: float      # horizontal angle of arrival, [0, 2*pi)
    theta_r: float    # vertical (zenith) angle of arrival, [0, pi]
    phi_t: float      # angle of departure at the UE, [0, 2*pi)

    def __post_init__(self):
        if not (0.0 <= self.theta_r <= math.pi):
            raise ValueError(f"theta_r must lie in [0, pi], got {self.theta_r}")
        object.__setattr__(self, "phi_r", self.phi_r % TWO_PI)
        object.__setattr__(self, "phi_t", self.phi_t % TWO_PI)


@dataclass(frozen=True)
class CellLayout:
    """UE placement model: disc cell, uniform UE heights, NLoS angular spreads."""

    radius_m: float = 100.0
    bs_height_m: float = 10.0
    ue_height_range_m: tuple[float, float] = (1.5, 22.5)
    h_spread_rad: float = math.pi
    v_spread_rad: float = math.pi / 2


@dataclass(frozen=True)
class UserChannel:
    """One UE's MN x Q channel, its paths (path 0 is LoS), and its precoder."""

    G: np.ndarray
    paths: tuple[tuple[complex, PathAngles], ...]
    v: np.ndarray

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ValueError("a user channel needs at least one path")
        if abs(np.linalg.norm(self.v) - 1.0) > 1e-12:
            raise ValueError("precoder must have unit norm")


@dataclass(frozen=True)
class InterferenceChannel:
    """One inter-cell interferer's MN x 1 channel and its paths."""

    h: np.ndarray
    paths: tuple[tuple[complex, PathAngles], ...]

    def __post_init__(self):
        if len(self.paths) < 1:
            raise ValueError("an interference channel needs at least one path")


@dataclass(frozen=True)
class Scenario:
    """One channel realization: K users, Psi interferers, power levels (linear)."""

    users: tuple[UserChannel, ...]
    interferers: tuple[InterferenceChannel, ...]
    P_U: float
    P_I: float
    N0: float

    def __post_init__(self):
        if len(self.users) < 1:
            raise ValueError("scenario needs at least one user")
        if min(self.P_U, self.P_I, self.N0) <= 0:
            raise ValueError("powers must be > 0")

    @property
    def K(self) -> int:
        return len(self.users)

    @property
    def Psi(self) -> int:
        return len(self.interferers)

    @property
    def gamma_total(self) -> int:
        return sum(len(i.paths) for i in self.interferers)

    def effective_channel(self) -> np.ndarray:
        """MN x K matrix with column k equal to G_k v_k."""
        return np.stack([u.G @ u.v for u in self.users], axis=1)

    def interference_matrix(self) -> np.ndarray:
        """MN x Psi matrix of interference channels (MN x 0 when Psi == 0)."""
        if not self.interferers:
            mn = self.users[0].G.shape[0]
            return np.zeros((mn, 0), dtype=complex)
        return np.stack([i.h for i in self.interferers], axis=1)


def ula_steering(phi_t: float, geometry: ArrayGeometry) -> PhaseVector:
    """UE array response: entry q is exp(j*2*pi*q*d_t*sin(phi_t))."""
    return PhaseVector(phase_ramp(TWO_PI * geometry.d_t * math.sin(phi_t), geometry.Q))


def upa_phase_pair(phi_r: float, theta_r: float, geometry: ArrayGeometry) -> tuple[float, float]:
    """Per-element phase steps (horizontal, vertical) of the planar array."""
    horiz = TWO_PI * geometry.d_h * math.sin(theta_r) * math.sin(phi_r)
    vert = TWO_PI * geometry.d_v * math.cos(theta_r)
    return horiz, vert


def upa_steering(phi_r: float, theta_r: float, geometry: ArrayGeometry) -> PhaseVector:
    """BS planar array response: horizontal ramp kron vertical ramp (length MN)."""
    horiz, vert = upa_phase_pair(phi_r, theta_r, geometry)
    return PhaseVector(kron(phase_ramp(horiz, geometry.N), phase_ramp(vert, geometry.M)))


def upa_factor_chain(phi_r: float, theta_r: float, geometry: ArrayGeometry) -> KroneckerChain:
    """Prime-factor chain of the planar array response (horizontal factors first)."""
    horiz, vert = upa_phase_pair(phi_r, theta_r, geometry)
    factors = []
    if geometry.N > 1:
        factors.extend(primitive_decompose_ramp(horiz, geometry.N).factors)
    if geometry.M > 1:
        factors.extend(primitive_decompose_ramp(vert, geometry.M).factors)
    if not factors:
        factors = list(primitive_decompose_ramp(0.0, 1).factors)
    return KroneckerChain(tuple(factors), geometry.mn)


def _cn_sample(rng: np.random.Generator) -> complex:
    re, im = rng.standard_normal(2)
    return complex(re, im) / math.sqrt(2.0)


def _sample_los_geometry(rng: np.random.Generator, layout: CellLayout) -> tuple[float, float, float]:
    """LoS (phi_r, theta_r, phi_t) from a UE position sampled in the cell."""
    bearing = rng.uniform(0.0, TWO_PI)
    r = layout.radius_m * math.sqrt(rng.uniform())
    lo, hi = layout.ue_height_range_m
    dh = rng.uniform(lo, hi) - layout.bs_height_m
    dist = math.hypot(r, dh)
    theta = math.acos(dh / dist) if dist > 1e-12 else math.pi / 2
    return bearing, theta, (bearing + math.pi) % TWO_PI


def _nlos_angles(rng: np.random.Generator, los: tuple[float, float, float],
                 layout: CellLayout) -> PathAngles:
    """LoS angles plus uniform offsets of half the angular spread on each side."""
    phi0, theta0, phit0 = los
    half_h = 0.5 * layout.h_spread_rad
    half_v = 0.5 * layout.v_spread_rad
    phi = phi0 + rng.uniform(-half_h, half_h)
    theta = min(math.pi, max(0.0, theta0 + rng.uniform(-half_v, half_v)))
    phit = phit0 + rng.uniform(-half_h, half_h)
    return PathAngles(phi, theta, phit)


def gen_user_channel(k: int, geometry: ArrayGeometry, kappa: float, L_k: int,
                     rng: np.random.Generator, layout: CellLayout = CellLayout()) -> UserChannel:
    """Draw one UE channel: Rician LoS plus L_k - 1 scattered paths.

    The LoS gain is sqrt(kappa/(1+kappa)) with a uniform random phase; each
    NLoS gain is CN(0, 1/((1+kappa)(L_k-1))).
    """
    if L_k < 1:
        raise ValueError("L_k must be >= 1")
    los = _sample_los_geometry(rng, layout)
    los_gain = math.sqrt(kappa / (1.0 + kappa)) * np.exp(1j * rng.uniform(0.0, TWO_PI))
    paths = [(complex(los_gain), PathAngles(*los))]
    if L_k > 1:
        nlos_scale = math.sqrt(1.0 / ((1.0 + kappa) * (L_k - 1)))
        for _ in range(L_k - 1):
            angles = _nlos_angles(rng, los, layout)
            paths.append((nlos_scale * _cn_sample(rng), angles))
    G = np.zeros((geometry.mn, geometry.Q), dtype=complex)
    for alpha, ang in paths:
        a_r = upa_steering(ang.phi_r, ang.theta_r, geometry).entries
        a_t = ula_steering(ang.phi_t, geometry).entries
        G += alpha * np.outer(a_r, a_t.conj())
    return UserChannel(G, tuple(paths), precoder(G))


def gen_interference_channel(psi: int, geometry: ArrayGeometry, Gamma_psi: int,
                             rng: np.random.Generator) -> InterferenceChannel:
    """Draw one interferer: Gamma_psi paths with gains CN(0, 1/Gamma_psi).

    Horizontal and vertical AoAs are uniform on [0, 2*pi); the vertical
    draw is folded into [0, pi] via theta = pi - (theta mod pi).
    """
    if Gamma_psi < 1:
        raise ValueError("Gamma_psi must be >= 1")
    scale = 1.0 / math.sqrt(Gamma_psi)
    paths = []
    h = np.zeros(geometry.mn, dtype=complex)
    for _ in range(Gamma_psi):
        phi = rng.uniform(0.0, TWO_PI)
        theta = math.pi - (rng.uniform(0.0, TWO_PI) % math.pi)
        alpha = scale * _cn_sample(rng)
        angles = PathAngles(phi, theta, 0.0)
        paths.append((alpha, angles))
        h += alpha * upa_steering(phi, theta, geometry).entries
    return InterferenceChannel(h, tuple(paths))


def redraw_nlos_gains(user: UserChannel, geometry: ArrayGeometry, kappa: float,
                      rng: np.random.Generator) -> UserChannel:
    """Fresh NLoS gains with all angles and the LoS gain kept fixed."""
    L_k = len(user.paths)
    paths = [user.paths[0]]
    if L_k > 1:
        nlos_scale = math.sqrt(1.0 / ((1.0 + kappa) * (L_k - 1)))
        for _, ang in user.paths[1:]:
            paths.append((nlos_scale * _cn_sample(rng), ang))
    G = np.zeros_like(user.G)
    for alpha, ang in paths:
        a_r = upa_steering(ang.phi_r, ang.theta_r, geometry).entries
        a_t = ula_steering(ang.phi_t, geometry).entries
        G += alpha * np.outer(a_r, a_t.conj())
    return UserChannel(G, tuple(paths), precoder(G))


_DEGENERACY_RTOL = 1e-12


def precoder(G: np.ndarray) -> np.ndarray:
    """Unit-norm top right singular vector of G (top eigenvector of G^H G).

    When the top two eigenvalues of G^H G tie within 1e-12 relative, the
    returned vector is the normalized projection of the lowest-index basis
    vector onto the dominant eigenspace, with that coordinate made real
    positive.  Deterministic for reproducible draws.
    """
    G = np.asarray(G, dtype=complex)
    if not np.any(G):
        raise ValueError("precoder requires a nonzero channel matrix")
    B = HermitianMatrix(G.conj().T @ G)
    q = B.dim
    lam1, v1 = top_eigpair(B)
    if q == 1:
        return v1
    # Second eigenvalue: deflation, backed by the trace bound (exact at q=2),
    # which still detects a fully degenerate spectrum when the deflated
    # iteration starts orthogonal to what is left.
    deflated = HermitianMatrix(B.entries - lam1 * np.outer(v1, v1.conj()))
    lam2, _ = top_eigpair(deflated)
    lam2 = max(lam2, (float(np.real(np.trace(B.entries))) - lam1) / (q - 1))
    if lam1 - lam2 > _DEGENERACY_RTOL * abs(lam1):
        return v1
    # Degenerate top eigenspace: restart from basis vectors in index order.
    q = B.dim
    for i in range(q):
        e = np.zeros(q, dtype=complex)
        e[i] = 1.0
        lam_i, v = top_eigpair(B, start=e)
        if lam_i >= lam1 - _DEGENERACY_RTOL * abs(lam1) and abs(v[i]) > 1e-8:
            phase = v[i] / abs(v[i])
            return v * phase.conjugate()
    return v1
