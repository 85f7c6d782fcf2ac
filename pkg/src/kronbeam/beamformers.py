"""Hybrid beamformer construction.

All Kronecker schemes share one pipeline per user: null each inter-cell
interference path inside a single prime-length factor of the analog
vector, permute the designed factors to the front of the chain, and fill
the remaining block with a phase match to the (permuted) desired signal.
The schemes differ only in how factors are paired with interference
paths: greedy on a measure matrix (full-CSI or LoS-only), fixed natural
order, or exhaustive search.  The digital stage is a small MMSE combiner
on the effective channel.
"""

from __future__ import annotations

import itertools
import math
import weakref
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import ArrayGeometry, Scenario, ula_steering, upa_factor_chain, upa_steering
from .kron import (
    FactorPermutation,
    KroneckerChain,
    PhaseVector,
    _swap_index_map,
    kron_all,
    prime_factors,
)
from .numerics import HermitianMatrix, NotPositiveDefiniteError, hpd_solve

EXHAUSTIVE_GUARD = 1_000_000

_ONES1 = np.ones(1, dtype=complex)
_ONES1.setflags(write=False)


class BeamformingError(Exception):
    """Base class for beamformer construction failures."""


class InfeasibleConfigurationError(BeamformingError):
    """The antenna configuration cannot support the requested scheme."""


@dataclass(frozen=True)
class FactorAssignment:
    """Pairs (factor index d, interference component index e), both all-distinct."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pairs = tuple(sorted((int(d), int(e)) for d, e in self.pairs))
        ds = [d for d, _ in pairs]
        es = [e for _, e in pairs]
        if len(set(ds)) != len(ds) or len(set(es)) != len(es):
            raise ValueError("factor and component indices must each be distinct")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class MeasureMatrix:
    """Nonnegative D x Gamma score table pairing factors with interference paths."""

    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2:
            raise ValueError("measure matrix must be 2-D")
        if u.size and (not np.all(np.isfinite(u)) or np.any(u < 0)):
            raise ValueError("measure matrix entries must be finite and >= 0")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class AnalogColumn:
    """One analog beamforming vector with its factor provenance."""

    f_rf: PhaseVector
    assignment: FactorAssignment
    permutation: FactorPermutation
    gamma_factors: tuple[PhaseVector, ...]
    res_factors: tuple[PhaseVector, ...]

    def __post_init__(self):
        chain = kron_all([f.entries for f in (*self.gamma_factors, *self.res_factors)])
        if np.max(np.abs(self.permutation.apply(chain) - self.f_rf.entries)) > 1e-12:
            raise ValueError("permuted factor product does not reconstruct the analog vector")


@dataclass(frozen=True)
class HybridBeamformer:
    """Analog matrix F_RF cascaded with digital combiner F_BB."""

    F_RF: np.ndarray
    F_BB: np.ndarray
    columns: tuple[AnalogColumn, ...] | None = None

    def __post_init__(self):
        frf = np.asarray(self.F_RF, dtype=complex)
        fbb = np.asarray(self.F_BB, dtype=complex)
        if frf.ndim != 2 or fbb.ndim != 2 or frf.shape[1] != fbb.shape[0]:
            raise ValueError("F_RF (MN x R) and F_BB (R x K) must be conformable")
        object.__setattr__(self, "F_RF", frf)
        object.__setattr__(self, "F_BB", fbb)

    @property
    def n_rf(self) -> int:
        return self.F_RF.shape[1]


def nulling_factor(a_factor: PhaseVector) -> PhaseVector:
    """Unit-modulus vector orthogonal to a prime-length unit-modulus factor.

    diag(a) t with t the n-th roots of unity; t^H 1 = 0 makes the result
    exactly orthogonal to a.  Rejects length-1 factors (nothing to null).
    """
    n = len(a_factor)
    if n < 2:
        raise ValueError("cannot null inside a length-1 factor")
    return PhaseVector(_nulling_entries(a_factor.entries))


def _nulling_entries(a: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    return a * np.exp(2j * np.pi * np.arange(n) / n)


def _factor_lengths(geometry: ArrayGeometry) -> tuple[int, ...]:
    lens = prime_factors(geometry.N) + prime_factors(geometry.M)
    return tuple(lens) if lens else (1,)


def interference_components(scenario: Scenario) -> list:
    """Path angles of every interference component, ordered by (psi, gamma)."""
    return [ang for itf in scenario.interferers for _, ang in itf.paths]


def interference_chains(scenario: Scenario, geometry: ArrayGeometry) -> list[KroneckerChain]:
    return [upa_factor_chain(a.phi_r, a.theta_r, geometry)
            for a in interference_components(scenario)]


def nulling_candidates(scenario: Scenario, geometry: ArrayGeometry) -> list[list[PhaseVector]]:
    """D x Gamma table: candidate factor nulling component e inside position d."""
    chains = interference_chains(scenario, geometry)
    D = len(_factor_lengths(geometry))
    return [[nulling_factor(chain.factors[d]) for chain in chains] for d in range(D)]


def effective_path_gains(user, geometry: ArrayGeometry) -> list[complex]:
    """Per-path complex gains including the transmit-side beamforming factor."""
    return [complex(alpha * np.vdot(ula_steering(ang.phi_t, geometry).entries, user.v))
            for alpha, ang in user.paths]


def measure_matrix_full(k: int, scenario: Scenario, geometry: ArrayGeometry,
                        candidates: list[list[PhaseVector]],
                        data_chains: list[KroneckerChain]) -> MeasureMatrix:
    """Correlation of each candidate factor with the gain-weighted data factors.

    The complex path gain is spread across the D factors through its
    principal D-th root before weighting.
    """
    user = scenario.users[k]
    gains = effective_path_gains(user, geometry)
    D = len(candidates)
    G = len(candidates[0]) if candidates else 0
    roots = [g ** (1.0 / D) for g in gains]
    u = np.zeros((D, G))
    for d in range(D):
        weighted = sum(r * ch.factors[d].entries for r, ch in zip(roots, data_chains))
        for e in range(G):
            u[d, e] = abs(np.vdot(candidates[d][e].entries, weighted))
    return MeasureMatrix(u)


def measure_matrix_los(k: int, candidates: list[list[PhaseVector]],
                       los_chain: KroneckerChain) -> MeasureMatrix:
    """Correlation of each candidate factor with the unweighted LoS factors."""
    D = len(candidates)
    G = len(candidates[0]) if candidates else 0
    u = np.zeros((D, G))
    for d in range(D):
        a = los_chain.factors[d].entries
        for e in range(G):
            u[d, e] = abs(np.vdot(candidates[d][e].entries, a))
    return MeasureMatrix(u)


def allocate_factors(U: MeasureMatrix) -> FactorAssignment:
    """Greedy pairing: repeatedly take the largest remaining score.

    Ties break to the smallest factor index, then the smallest component
    index.  Requires at least as many factors as components.
    """
    D, G = U.u.shape
    if D < G:
        raise InfeasibleConfigurationError(
            f"{G} interference components cannot be nulled with only {D} Kronecker factors")
    rows = list(range(D))
    cols = list(range(G))
    pairs = []
    while cols:
        best = None
        for d in rows:
            for e in cols:
                if best is None or U.u[d, e] > best[0]:
                    best = (U.u[d, e], d, e)
        _, d, e = best
        pairs.append((d, e))
        rows.remove(d)
        cols.remove(e)
    return FactorAssignment(tuple(pairs))


@lru_cache(maxsize=8192)
def _rearrange_plan(lengths: tuple[int, ...], designed: tuple[bool, ...]):
    """Two-pointer factor partition: designed factors first, plus the composite
    permutation mapping the rearranged chain back to the original order."""
    D = len(lengths)
    order = list(range(D))
    cur = list(lengths)
    mask = list(designed)
    comp = np.arange(math.prod(lengths))
    i, j = 0, D - 1
    while j > i:
        if not mask[i] and mask[j]:
            comp = _swap_index_map(tuple(cur), i, j)[comp]
            order[i], order[j] = order[j], order[i]
            cur[i], cur[j] = cur[j], cur[i]
            mask[i], mask[j] = mask[j], mask[i]
        elif mask[i] and mask[j]:
            i += 1
        elif not mask[i] and not mask[j]:
            j -= 1
        else:
            i += 1
            j -= 1
    comp.setflags(write=False)
    return tuple(order), comp


def rearrange(factors: list[PhaseVector], designed_mask: list[bool],
              data_chains: list[KroneckerChain]):
    """Move designed factors to the front; apply the same swaps to the data chains.

    Returns (permutation, reordered factors, reordered chains) with
    materialize(original) == permutation.apply(materialize(reordered)).
    """
    lengths = tuple(len(f) for f in factors)
    order, comp = _rearrange_plan(lengths, tuple(bool(m) for m in designed_mask))
    perm = FactorPermutation(comp)
    reordered = [factors[o] for o in order]
    chains = [KroneckerChain(tuple(ch.factors[o] for o in order), ch.total_len)
              for ch in data_chains]
    return perm, reordered, chains


def enhance_full(k: int, scenario: Scenario, geometry: ArrayGeometry,
                 gamma_factors: list[PhaseVector],
                 rearranged_chains: list[KroneckerChain]) -> PhaseVector:
    """Phase match the residual block to the permuted desired signal.

    The target is the gain-weighted sum over paths of the residual-block
    steering factors, each scaled by the correlation of the nulling block
    with that path's leading factors.  Zero entries get phase 0.
    """
    user = scenario.users[k]
    gains = effective_path_gains(user, geometry)
    g = len(gamma_factors)
    fgam = kron_all([f.entries for f in gamma_factors]) if gamma_factors else _ONES1
    target = None
    for w, chain in zip(gains, rearranged_chains):
        a_gam = kron_all([f.entries for f in chain.factors[:g]]) if g else _ONES1
        a_res = kron_all([f.entries for f in chain.factors[g:]]) if g < len(chain.factors) else _ONES1
        term = (w * np.vdot(fgam, a_gam)) * a_res
        target = term if target is None else target + term
    return PhaseVector(np.exp(1j * np.angle(target)))


class _ColumnWorkspace:
    """Per-user scratch shared by every Kronecker scheme.

    Builds analog columns for arbitrary factor assignments through one
    numeric path, so identical assignments yield bit-identical vectors
    across schemes.  Factor/path correlations and residual-block products
    are cached because the exhaustive search revisits them heavily.
    """

    def __init__(self, lengths, cand_entries, data_entries, weights):
        self.lengths = tuple(lengths)
        self.cand = cand_entries                  # cand[d][e]
        self.data = data_entries                  # data[l][d]
        self.weights = [complex(w) for w in weights]
        self.D = len(self.lengths)
        self.L = len(data_entries)
        ncand = len(cand_entries[0]) if cand_entries else 0
        # correlation of candidate (d, e) with path l's factor d
        self.corr = [[[complex(np.vdot(cand_entries[d][e], data_entries[l][d]))
                       for l in range(self.L)] for e in range(ncand)]
                     for d in range(self.D)]
        self._res_cache: dict = {}

    def _res_products(self, res_order):
        hit = self._res_cache.get(res_order)
        if hit is None:
            if res_order:
                hit = [kron_all([self.data[l][o] for o in res_order]) for l in range(self.L)]
            else:
                hit = [_ONES1] * self.L
            self._res_cache[res_order] = hit
        return hit

    def column(self, pairs):
        """Analog vector for one assignment; see AnalogColumn for the pieces."""
        g = len(pairs)
        designed = [False] * self.D
        fac = [None] * self.D
        for d, e in pairs:
            fac[d] = self.cand[d][e]
            designed[d] = True
        order, comp = _rearrange_plan(self.lengths, tuple(designed))
        gamma_order = order[:g]
        res = self._res_products(order[g:])
        if g:
            gamma_entries = [fac[o] for o in gamma_order]
            fgam = kron_all(gamma_entries)
            eps_at = {d: e for d, e in pairs}
            target = None
            for l in range(self.L):
                c = self.weights[l]
                for o in gamma_order:
                    c = c * self.corr[o][eps_at[o]][l]
                term = c * res[l]
                target = term if target is None else target + term
        else:
            gamma_entries = []
            fgam = _ONES1
            target = None
            for l in range(self.L):
                term = self.weights[l] * res[l]
                target = term if target is None else target + term
        fres = np.exp(1j * np.angle(target))
        f_rf = (fgam[:, None] * fres[None, :]).ravel()[comp]
        return f_rf, gamma_entries, fres, comp

    def analog_column(self, pairs) -> AnalogColumn:
        f_rf, gamma_entries, fres, comp = self.column(pairs)
        return AnalogColumn(
            f_rf=PhaseVector(f_rf),
            assignment=FactorAssignment(tuple(pairs)),
            permutation=FactorPermutation(comp),
            gamma_factors=tuple(PhaseVector(e) for e in gamma_entries),
            res_factors=(PhaseVector(fres),),
        )


def check_feasibility(K: int, gamma_total: int, geometry: ArrayGeometry) -> None:
    """Antenna-configuration rank condition for the Kronecker schemes.

    With the prime factors of MN sorted ascending, the product of the
    D - Gamma smallest must reach K so the residual blocks can keep the K
    analog vectors linearly independent.  For power-of-two arrays this is
    MN >= 2^(Gamma + ceil(log2 K)).
    """
    lengths = sorted(prime_factors(geometry.mn))
    D = len(lengths)
    if D < gamma_total or math.prod(lengths[:D - gamma_total]) < K:
        raise InfeasibleConfigurationError(
            f"MN={geometry.mn} has {D} prime factors; nulling {gamma_total} interference "
            f"paths while separating {K} users needs the product of the remaining "
            f"smallest factors to reach K (power-of-two arrays: MN >= "
            f"2^({gamma_total} + ceil(log2 {K})))")


class _ScenarioTables:
    """Per-scenario factor tables shared across the Kronecker schemes.

    The candidate factors, the users' decomposed steering chains, and the
    per-user column workspaces are all pure functions of one channel draw,
    so they are computed once and reused by every builder on that draw.
    """

    def __init__(self, scenario: Scenario, geometry: ArrayGeometry):
        self.lengths = _factor_lengths(geometry)
        self.cands = nulling_candidates(scenario, geometry)
        self.cand_entries = [[pv.entries for pv in row] for row in self.cands]
        self.chains = [[upa_factor_chain(a.phi_r, a.theta_r, geometry)
                        for _, a in user.paths] for user in scenario.users]
        self.gains = [effective_path_gains(user, geometry) for user in scenario.users]
        self._full: dict[int, _ColumnWorkspace] = {}
        self._los: dict[int, _ColumnWorkspace] = {}

    def workspace(self, k: int) -> "_ColumnWorkspace":
        ws = self._full.get(k)
        if ws is None:
            data = [[f.entries for f in ch.factors] for ch in self.chains[k]]
            ws = _ColumnWorkspace(self.lengths, self.cand_entries, data, self.gains[k])
            self._full[k] = ws
        return ws

    def los_workspace(self, k: int) -> "_ColumnWorkspace":
        ws = self._los.get(k)
        if ws is None:
            data = [[f.entries for f in self.chains[k][0].factors]]
            ws = _ColumnWorkspace(self.lengths, self.cand_entries, data, [1.0 + 0j])
            self._los[k] = ws
        return ws


_tables_memo: dict = {}


def _scenario_tables(scenario: Scenario, geometry: ArrayGeometry) -> _ScenarioTables:
    key = (id(scenario), geometry)
    hit = _tables_memo.get(key)
    if hit is not None and hit[0]() is scenario:
        return hit[1]
    tables = _ScenarioTables(scenario, geometry)
    if len(_tables_memo) >= 32:
        _tables_memo.clear()
    _tables_memo[key] = (weakref.ref(scenario), tables)
    return tables


def _assemble(scenario: Scenario, columns: list[AnalogColumn]) -> HybridBeamformer:
    F_RF = np.stack([c.f_rf.entries for c in columns], axis=1)
    return HybridBeamformer(F_RF, mmse_digital(F_RF, scenario), tuple(columns))


def build_dynamic(scenario: Scenario, geometry: ArrayGeometry) -> HybridBeamformer:
    """Greedy measure-matrix factor allocation on full CSI, then phase matching."""
    check_feasibility(scenario.K, scenario.gamma_total, geometry)
    tb = _scenario_tables(scenario, geometry)
    cols = []
    for k in range(scenario.K):
        assign = allocate_factors(
            measure_matrix_full(k, scenario, geometry, tb.cands, tb.chains[k]))
        cols.append(tb.workspace(k).analog_column(assign.pairs))
    return _assemble(scenario, cols)


def build_los(scenario: Scenario, geometry: ArrayGeometry,
              cached: tuple[AnalogColumn, ...] | None = None,
              aoa_changed: bool = True) -> HybridBeamformer:
    """LoS-only variant with a slow analog stage.

    The analog columns depend only on path angles, so when no angle has
    changed the cached columns are reused verbatim and only the digital
    combiner is recomputed from the current CSI.
    """
    if cached is not None and not aoa_changed:
        cols = list(cached)
    else:
        check_feasibility(scenario.K, scenario.gamma_total, geometry)
        tb = _scenario_tables(scenario, geometry)
        cols = []
        for k in range(scenario.K):
            assign = allocate_factors(measure_matrix_los(k, tb.cands, tb.chains[k][0]))
            cols.append(tb.los_workspace(k).analog_column(assign.pairs))
    return _assemble(scenario, cols)


def build_successive(scenario: Scenario, geometry: ArrayGeometry) -> HybridBeamformer:
    """Factors pair with interference components in natural order (no measure)."""
    gamma = scenario.gamma_total
    lengths = _factor_lengths(geometry)
    if len(lengths) < gamma:
        raise InfeasibleConfigurationError(
            f"{gamma} interference components exceed the {len(lengths)} available factors")
    tb = _scenario_tables(scenario, geometry)
    pairs = tuple((e, e) for e in range(gamma))
    cols = [tb.workspace(k).analog_column(pairs) for k in range(scenario.K)]
    return _assemble(scenario, cols)


def build_exhaustive(scenario: Scenario, geometry: ArrayGeometry) -> HybridBeamformer:
    """Best injective factor assignment per user by enumerating all of them.

    Selection maximizes the realized desired power of the built column, so
    the greedy scheme can never beat it on the same draw.
    """
    gamma = scenario.gamma_total
    lengths = _factor_lengths(geometry)
    D = len(lengths)
    if D < gamma:
        raise InfeasibleConfigurationError(
            f"{gamma} interference components exceed the {D} available factors")
    n_assign = math.perm(D, gamma)
    if n_assign > EXHAUSTIVE_GUARD:
        raise InfeasibleConfigurationError(
            f"exhaustive search over {n_assign} assignments exceeds the "
            f"{EXHAUSTIVE_GUARD} guard")
    tb = _scenario_tables(scenario, geometry)
    cols = []
    for k, user in enumerate(scenario.users):
        ws = tb.workspace(k)
        gv = user.G @ user.v
        best_pairs = None
        best_power = -1.0
        for ds in itertools.permutations(range(D), gamma):
            pairs = tuple((d, e) for e, d in enumerate(ds))
            f_rf, _, _, _ = ws.column(pairs)
            power = abs(np.vdot(f_rf, gv)) ** 2
            if power > best_power:
                best_power = power
                best_pairs = pairs
        cols.append(ws.analog_column(best_pairs))
    return _assemble(scenario, cols)


def build_egc(scenario: Scenario) -> HybridBeamformer:
    """Equal-gain combining: pure phase match to G_k v_k, no nulling."""
    cols = [np.exp(1j * np.angle(u.G @ u.v)) for u in scenario.users]
    F_RF = np.stack(cols, axis=1)
    return HybridBeamformer(F_RF, mmse_digital(F_RF, scenario))


def build_pure_mmse(scenario: Scenario) -> HybridBeamformer:
    """Fully digital benchmark: identity analog stage, MMSE on all antennas."""
    mn = scenario.users[0].G.shape[0]
    F_BB = _mmse_combiner(scenario.effective_channel(), scenario.interference_matrix(),
                          np.eye(mn), scenario)
    return HybridBeamformer(np.eye(mn, dtype=complex), F_BB)


def baseline_pure_mmse(scenario: Scenario) -> np.ndarray:
    """Per-user rates of the fully digital MMSE benchmark."""
    from .metrics import per_user_rates  # local import keeps module deps one-way
    return per_user_rates(build_pure_mmse(scenario), scenario)


def _mmse_combiner(G_hat: np.ndarray, H_hat: np.ndarray, gram: np.ndarray,
                   scenario: Scenario) -> np.ndarray:
    """C^{-1} G_hat P_U with C = P_U G_hat G_hat^H + P_I H_hat H_hat^H + N0 gram."""
    C = scenario.P_U * (G_hat @ G_hat.conj().T) + scenario.N0 * gram
    if H_hat.shape[1]:
        C = C + scenario.P_I * (H_hat @ H_hat.conj().T)
    try:
        return hpd_solve(HermitianMatrix(C), G_hat) * scenario.P_U
    except NotPositiveDefiniteError as exc:
        raise InfeasibleConfigurationError(
            "observation covariance is not positive definite; the analog "
            "beamformer is rank deficient for this antenna configuration") from exc


def mmse_digital(F_RF: np.ndarray, scenario: Scenario) -> np.ndarray:
    """Linear-MMSE digital combiner for the RF-chain observation F_RF^H y.

    F_BB = C^{-1} F_RF^H G_eff P_U with C the observation covariance
    (desired + inter-cell interference + noise terms).  A non-HPD C means
    the analog stage lost rank and is surfaced as an infeasibility.
    """
    F_RF = np.asarray(F_RF, dtype=complex)
    G_hat = F_RF.conj().T @ scenario.effective_channel()
    H_hat = F_RF.conj().T @ scenario.interference_matrix()
    return _mmse_combiner(G_hat, H_hat, F_RF.conj().T @ F_RF, scenario)


def nulling_residuals(beamformer: HybridBeamformer, scenario: Scenario,
                      geometry: ArrayGeometry) -> np.ndarray:
    """|f_rf(k)^H a_r| / MN for every user and interference path (K x Gamma)."""
    comps = interference_components(scenario)
    out = np.zeros((beamformer.F_RF.shape[1], len(comps)))
    for e, ang in enumerate(comps):
        a = upa_steering(ang.phi_r, ang.theta_r, geometry).entries
        out[:, e] = np.abs(beamformer.F_RF.conj().T @ a) / geometry.mn
    return out
