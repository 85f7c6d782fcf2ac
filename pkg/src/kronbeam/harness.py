"""Seeded Monte-Carlo trials, parameter sweeps, and result persistence.

Every trial owns an RNG stream derived from (master_seed, trial_index),
so results are independent of execution order and identical whether the
trials run serially or across worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import beamformers, metrics
from .beamformers import BeamformingError
from .channel import ArrayGeometry, CellLayout, Scenario, gen_interference_channel, \
    gen_user_channel, redraw_nlos_gains

ALL_SCHEMES = ("mmse", "exhaustive", "dynamic", "los", "successive", "egc")
SWEEP_AXES = ("snr_dB", "isr_dB", "N_columns", "Gamma")

RESULT_COLUMNS = ("axis_name", "axis_value", "scheme", "mean_sum_rate_bps_hz",
                  "stderr", "trials", "seed")


class ConfigError(ValueError):
    """Invalid simulation configuration or config-file contents."""


@dataclass(frozen=True)
class SimConfig:
    """One simulation setup; defaults follow the reference parameter table."""

    K: int = 4
    Q: int = 2
    L_k: int = 2
    M: int = 8
    N: int = 16
    Psi: int = 2
    Gamma_psi: tuple[int, ...] = (1, 1)
    kappa_dB: float = 5.0
    snr_dB: float = 20.0
    isr_dB: float = 0.0
    cell_radius_m: float = 100.0
    bs_height_m: float = 10.0
    ue_height_range_m: tuple[float, float] = (1.5, 22.5)
    h_spread_rad: float = math.pi
    v_spread_rad: float = math.pi / 2
    trials: int = 500
    master_seed: int = 1
    schemes: tuple[str, ...] = ALL_SCHEMES

    def __post_init__(self):
        if self.K < 1 or self.Q < 1 or self.L_k < 1 or self.M < 1 or self.N < 1:
            raise ConfigError("K, Q, L_k, M, N must all be >= 1")
        if self.Psi < 0:
            raise ConfigError("Psi must be >= 0")
        gp = tuple(int(g) for g in self.Gamma_psi)
        if len(gp) == 1 and self.Psi > 1:
            gp = gp * self.Psi
        if len(gp) != self.Psi:
            raise ConfigError(
                f"Gamma_psi has {len(gp)} entries but Psi={self.Psi}")
        if any(g < 1 for g in gp):
            raise ConfigError("every Gamma_psi entry must be >= 1")
        object.__setattr__(self, "Gamma_psi", gp)
        unknown = [s for s in self.schemes if s not in ALL_SCHEMES]
        if unknown:
            raise ConfigError(f"unknown scheme identifiers: {unknown}")
        object.__setattr__(self, "schemes", tuple(self.schemes))
        object.__setattr__(self, "ue_height_range_m",
                           tuple(float(x) for x in self.ue_height_range_m))
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")

    @property
    def geometry(self) -> ArrayGeometry:
        return ArrayGeometry(M=self.M, N=self.N, Q=self.Q)

    @property
    def layout(self) -> CellLayout:
        return CellLayout(self.cell_radius_m, self.bs_height_m,
                          self.ue_height_range_m, self.h_spread_rad, self.v_spread_rad)

    @property
    def kappa(self) -> float:
        return 10.0 ** (self.kappa_dB / 10.0)

    @property
    def powers(self) -> tuple[float, float, float]:
        """(P_U, P_I, N0) on a linear scale with P_U normalized to 1."""
        p_u = 1.0
        return p_u, p_u * 10.0 ** (self.isr_dB / 10.0), p_u / 10.0 ** (self.snr_dB / 10.0)

    def fingerprint(self) -> str:
        payload = json.dumps(dataclasses.asdict(self), sort_keys=True, default=list)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent per-trial stream from a counter-keyed seed sequence."""
    return np.random.default_rng(np.random.SeedSequence((master_seed, trial_index)))


def make_scenario(config: SimConfig, rng: np.random.Generator) -> Scenario:
    geom = config.geometry
    users = tuple(gen_user_channel(k, geom, config.kappa, config.L_k, rng, config.layout)
                  for k in range(config.K))
    interferers = tuple(gen_interference_channel(p, geom, config.Gamma_psi[p], rng)
                        for p in range(config.Psi))
    p_u, p_i, n0 = config.powers
    return Scenario(users, interferers, p_u, p_i, n0)


def _build(scheme: str, scenario: Scenario, geometry: ArrayGeometry):
    if scheme == "mmse":
        return beamformers.build_pure_mmse(scenario)
    if scheme == "exhaustive":
        return beamformers.build_exhaustive(scenario, geometry)
    if scheme == "dynamic":
        return beamformers.build_dynamic(scenario, geometry)
    if scheme == "los":
        return beamformers.build_los(scenario, geometry)
    if scheme == "successive":
        return beamformers.build_successive(scenario, geometry)
    if scheme == "egc":
        return beamformers.build_egc(scenario)
    raise ConfigError(f"unknown scheme {scheme!r}")


def run_trial(config: SimConfig, trial_index: int) -> dict[str, float]:
    """Sum rate of every requested scheme on one seeded channel draw.

    A scheme that is infeasible for the configuration is recorded as NaN
    while the remaining schemes still run.
    """
    rng = trial_rng(config.master_seed, trial_index)
    scenario = make_scenario(config, rng)
    geom = config.geometry
    rates = {}
    for scheme in config.schemes:
        try:
            rates[scheme] = metrics.sum_rate(_build(scheme, scenario, geom), scenario)
        except BeamformingError:
            rates[scheme] = math.nan
    return rates


def run_trial_detailed(config: SimConfig, trial_index: int):
    """Like run_trial but also reports nulling residuals and error messages."""
    rng = trial_rng(config.master_seed, trial_index)
    scenario = make_scenario(config, rng)
    geom = config.geometry
    rates, residuals, errors = {}, {}, {}
    for scheme in config.schemes:
        try:
            bf = _build(scheme, scenario, geom)
            rates[scheme] = metrics.sum_rate(bf, scenario)
            res = beamformers.nulling_residuals(bf, scenario, geom)
            residuals[scheme] = float(np.max(res)) if res.size else 0.0
        except BeamformingError as exc:
            rates[scheme] = math.nan
            errors[scheme] = str(exc)
    return rates, residuals, errors


def run_slow_fading_trial(config: SimConfig, trial_index: int,
                          frames: int) -> list[dict[str, float]]:
    """One angle draw, `frames` small-scale fading redraws of the NLoS gains.

    The slow analog stage ("los" scheme) is built once and its cached
    columns are reused for every frame; only the digital combiner tracks
    the per-frame CSI.  Other requested schemes are rebuilt per frame.
    """
    rng = trial_rng(config.master_seed, trial_index)
    scenario = make_scenario(config, rng)
    geom = config.geometry
    cached = None
    out = []
    for frame in range(frames):
        if frame > 0:
            users = tuple(redraw_nlos_gains(u, geom, config.kappa, rng)
                          for u in scenario.users)
            scenario = dataclasses.replace(scenario, users=users)
        rates = {}
        for scheme in config.schemes:
            try:
                if scheme == "los":
                    bf = beamformers.build_los(scenario, geom, cached=cached,
                                               aoa_changed=(cached is None))
                    cached = bf.columns
                else:
                    bf = _build(scheme, scenario, geom)
                rates[scheme] = metrics.sum_rate(bf, scenario)
            except BeamformingError:
                rates[scheme] = math.nan
        out.append(rates)
    return out


@dataclass(frozen=True)
class SweepSpec:
    """One swept axis over a fixed base configuration."""

    axis: str
    values: tuple
    fixed: SimConfig = field(default_factory=SimConfig)

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"axis must be one of {SWEEP_AXES}, got {self.axis!r}")
        vals = tuple(sorted(self.values))
        if not vals:
            raise ConfigError("sweep values must be nonempty")
        if len(set(vals)) != len(vals):
            raise ConfigError("sweep values must be strictly increasing (no duplicates)")
        object.__setattr__(self, "values", vals)

    def config_at(self, value) -> SimConfig:
        if self.axis == "snr_dB":
            return replace(self.fixed, snr_dB=float(value))
        if self.axis == "isr_dB":
            return replace(self.fixed, isr_dB=float(value))
        if self.axis == "N_columns":
            return replace(self.fixed, N=int(value))
        return replace(self.fixed, Gamma_psi=(int(value),) * self.fixed.Psi)


@dataclass(frozen=True)
class ResultRow:
    axis_name: str
    axis_value: float
    scheme: str
    mean_sum_rate_bps_hz: float
    stderr: float
    trials: int
    seed: int


@dataclass(frozen=True)
class SweepResult:
    axis: str
    rows: tuple[ResultRow, ...]
    config: SimConfig
    fingerprint: str

    def mean(self, axis_value, scheme: str) -> float:
        for r in self.rows:
            if r.axis_value == axis_value and r.scheme == scheme:
                return r.mean_sum_rate_bps_hz
        raise KeyError((axis_value, scheme))

    def curve(self, scheme: str) -> np.ndarray:
        return np.array([r.mean_sum_rate_bps_hz for r in self.rows if r.scheme == scheme])


def _limit_blas_threads():
    # trial-level parallelism; nested BLAS threading only adds handoff latency
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=1)
    except ImportError:
        pass


def _trial_task(args):
    config, index = args
    return run_trial(config, index)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Mean sum rate per (axis value, scheme) over `fixed.trials` seeded trials.

    Infeasible schemes show up as NaN means (gaps).  With workers > 1 the
    trials are distributed over processes; aggregation is indexed by trial
    number, so the result is identical to a serial run.
    """
    cfg = spec.fixed
    rows = []
    for value in spec.values:
        vcfg = spec.config_at(value)
        per_trial = [None] * vcfg.trials
        if workers > 1:
            tasks = [(vcfg, t) for t in range(vcfg.trials)]
            with ProcessPoolExecutor(max_workers=workers,
                                     initializer=_limit_blas_threads) as pool:
                for t, rates in enumerate(pool.map(_trial_task, tasks, chunksize=16)):
                    per_trial[t] = rates
        else:
            for t in range(vcfg.trials):
                per_trial[t] = run_trial(vcfg, t)
        for scheme in vcfg.schemes:
            samples = np.array([r[scheme] for r in per_trial])
            ok = samples[np.isfinite(samples)]
            if ok.size:
                mean = float(np.mean(ok))
                stderr = float(np.std(ok, ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else 0.0
            else:
                mean, stderr = math.nan, math.nan
            rows.append(ResultRow(spec.axis, float(value), scheme, mean, stderr,
                                  int(ok.size), cfg.master_seed))
    return SweepResult(spec.axis, tuple(rows), cfg, cfg.fingerprint())


def write_results(result: SweepResult, path, fmt: str = "csv") -> None:
    """Persist a sweep as CSV rows or a JSON document with rows + config."""
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(RESULT_COLUMNS)
                for r in result.rows:
                    writer.writerow([r.axis_name, r.axis_value, r.scheme,
                                     repr(r.mean_sum_rate_bps_hz), repr(r.stderr),
                                     r.trials, r.seed])
        else:
            doc = {
                "config": dataclasses.asdict(result.config),
                "fingerprint": result.fingerprint,
                "rows": [dataclasses.asdict(r) for r in result.rows],
            }
            with open(path, "w") as fh:
                json.dump(doc, fh, indent=2, default=list)
    except OSError as exc:
        raise ConfigError(f"cannot write results to {path}: {exc}") from exc


def read_results_csv(path) -> list[ResultRow]:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ResultRow(rec["axis_name"], float(rec["axis_value"]),
                                  rec["scheme"], float(rec["mean_sum_rate_bps_hz"]),
                                  float(rec["stderr"]), int(rec["trials"]),
                                  int(rec["seed"])))
    return rows


# --- config files -----------------------------------------------------------
#
# Flat key = value text files; keys match SimConfig field names, plus the
# sweep keys `axis` and `values`.  Lists are comma separated; '#' starts a
# comment.

_TUPLE_INT_KEYS = {"Gamma_psi"}
_TUPLE_FLOAT_KEYS = {"ue_height_range_m"}
_INT_KEYS = {"K", "Q", "L_k", "M", "N", "Psi", "trials", "master_seed"}
_FLOAT_KEYS = {"kappa_dB", "snr_dB", "isr_dB", "cell_radius_m", "bs_height_m",
               "h_spread_rad", "v_spread_rad"}
_SWEEP_KEYS = {"axis", "values"}
KNOWN_KEYS = (_INT_KEYS | _FLOAT_KEYS | _TUPLE_INT_KEYS | _TUPLE_FLOAT_KEYS
              | {"schemes"} | _SWEEP_KEYS)


def _coerce(key: str, raw: str):
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _TUPLE_INT_KEYS:
            return tuple(int(x) for x in raw.split(",") if x.strip())
        if key in _TUPLE_FLOAT_KEYS:
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if key == "schemes":
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if key == "values":
            return tuple(float(x) for x in raw.split(",") if x.strip())
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {raw!r}") from exc


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def parse_config_file(path) -> dict:
    try:
        with open(path) as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def config_from_mapping(mapping: dict, base: SimConfig | None = None) -> SimConfig:
    base = base or SimConfig()
    fields = {f.name for f in dataclasses.fields(SimConfig)}
    updates = {}
    for key, value in mapping.items():
        if key in _SWEEP_KEYS:
            continue
        if key not in fields:
            raise ConfigError(f"unknown configuration key {key!r}")
        updates[key] = value
    try:
        return replace(base, **updates)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# --- figure presets ---------------------------------------------------------

def figure_presets(base: SimConfig | None = None) -> dict[str, SweepSpec]:
    """The four reference sweeps: SNR, ISR, array columns, interference paths."""
    cfg = base or SimConfig()
    fig_cfg = replace(cfg, M=8, N=16, Psi=2, Gamma_psi=(1, 1))
    return {
        "fig3": SweepSpec("snr_dB", tuple(range(0, 45, 5)), replace(fig_cfg, isr_dB=0.0)),
        "fig4": SweepSpec("isr_dB", (-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
                          replace(fig_cfg, snr_dB=20.0)),
        "fig5": SweepSpec("N_columns", (16, 32, 64, 128),
                          replace(fig_cfg, snr_dB=20.0, isr_dB=0.0)),
        "fig6": SweepSpec("Gamma", (1, 2, 3, 4, 5),
                          replace(cfg, M=8, N=16, Psi=1, Gamma_psi=(1,),
                                  snr_dB=20.0, isr_dB=0.0)),
    }
