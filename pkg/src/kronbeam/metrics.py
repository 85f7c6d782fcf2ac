"""Per-user SINR decomposition and achievable sum rate."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import Scenario


@dataclass(frozen=True)
class SinrBreakdown:
    """Linear-scale received powers behind one user's SINR."""

    p_desired: float
    p_intra: float
    p_inter: float
    p_noise: float

    def __post_init__(self):
        vals = (self.p_desired, self.p_intra, self.p_inter, self.p_noise)
        if not all(math.isfinite(v) and v >= 0.0 for v in vals):
            raise ValueError("power components must be finite and nonnegative")

    @property
    def sinr(self) -> float:
        return self.p_desired / (self.p_intra + self.p_inter + self.p_noise)

    @property
    def rate(self) -> float:
        return math.log2(1.0 + self.sinr)


def _combiner_matrix(beamformer) -> np.ndarray:
    """Effective MN x K combiner W = F_RF @ F_BB."""
    F_RF = np.asarray(beamformer.F_RF)
    F_BB = np.asarray(beamformer.F_BB)
    n = F_RF.shape[0]
    # fully digital combiners carry an identity analog stage; skip the multiply
    if F_RF.shape == (n, n) and (F_RF == np.eye(n)).all():
        return F_BB
    return F_RF @ F_BB


def sinr_breakdown_all(beamformer, scenario: Scenario) -> list[SinrBreakdown]:
    """Power components for every user under one beamformer."""
    W = _combiner_matrix(beamformer)
    G_eff = scenario.effective_channel()
    A = W.conj().T @ G_eff                       # A[k, q] = w_k^H G_q v_q
    sig = scenario.P_U * np.abs(A) ** 2
    H = scenario.interference_matrix()
    inter = scenario.P_I * np.sum(np.abs(W.conj().T @ H) ** 2, axis=1)
    noise = scenario.N0 * np.sum(np.abs(W) ** 2, axis=0)
    out = []
    for k in range(scenario.K):
        p_des = float(sig[k, k])
        p_intra = float(np.sum(sig[k, :]) - sig[k, k])
        out.append(SinrBreakdown(p_des, max(p_intra, 0.0), float(inter[k]), float(noise[k])))
    return out


def sinr_breakdown(k: int, beamformer, scenario: Scenario) -> SinrBreakdown:
    """Power components for user k: desired, intra-cell, inter-cell, noise."""
    return sinr_breakdown_all(beamformer, scenario)[k]


def per_user_rates(beamformer, scenario: Scenario) -> np.ndarray:
    return np.array([b.rate for b in sinr_breakdown_all(beamformer, scenario)])


def sum_rate(beamformer, scenario: Scenario) -> float:
    """Sum over users of log2(1 + SINR_k), in bits/s/Hz."""
    return float(np.sum(per_user_rates(beamformer, scenario)))
