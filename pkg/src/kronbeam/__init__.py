"""kronbeam: Kronecker-structured hybrid beamforming for uplink multi-cell
mmWave massive MIMO, with baselines and a seeded Monte-Carlo harness."""

from .kron import (
    FactorPermutation,
    KroneckerChain,
    PhaseVector,
    kron,
    kron_all,
    materialize,
    primitive_decompose_ramp,
    swap_permutation,
)
from .channel import (
    ArrayGeometry,
    CellLayout,
    InterferenceChannel,
    PathAngles,
    Scenario,
    UserChannel,
    gen_interference_channel,
    gen_user_channel,
    precoder,
    ula_steering,
    upa_factor_chain,
    upa_steering,
)
from .numerics import HermitianMatrix, NonConvergenceError, NotPositiveDefiniteError, \
    hpd_solve, top_eigpair
from .beamformers import (
    AnalogColumn,
    BeamformingError,
    FactorAssignment,
    HybridBeamformer,
    InfeasibleConfigurationError,
    MeasureMatrix,
    allocate_factors,
    baseline_pure_mmse,
    build_dynamic,
    build_egc,
    build_exhaustive,
    build_los,
    build_pure_mmse,
    build_successive,
    enhance_full,
    measure_matrix_full,
    measure_matrix_los,
    mmse_digital,
    nulling_candidates,
    nulling_factor,
    nulling_residuals,
    rearrange,
)
from .metrics import SinrBreakdown, per_user_rates, sinr_breakdown, sum_rate
from .harness import (
    ConfigError,
    SimConfig,
    SweepResult,
    SweepSpec,
    figure_presets,
    make_scenario,
    run_sweep,
    run_trial,
    run_slow_fading_trial,
    trial_rng,
    write_results,
)

__version__ = "0.1.0"
