"""Optimization campaigns: the swarm searching over handover-margin surfaces.

Every fitness evaluation is one or more full simulations whose seeds are a
pure function of ``(campaign seed, particle, iteration, replication)``, so
evaluations can run in any order or in parallel without changing results.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np

from .control import (EXPONENTIAL, POLYNOMIAL, DynamicSampler, HmSurface,
                      constant_hm_matrix, sample_hm_matrix)
from .errors import ConfigurationError, SimulationError
from .mopso import ParetoArchive, SwarmConfig, SwarmResult, run_swarm
from .scenario import Scenario
from .sim import KpiReport, SimConfig, run

log = logging.getLogger(__name__)

BASELINE, STATIC, DYNAMIC = "baseline", "static_opt", "dynamic_opt"
FIXED_SEEDS, PER_PARTICLE_SEEDS = "fixed_per_campaign", "per_particle"

DEFAULT_BOUNDS = {
    POLYNOMIAL: ((0.0, -16.0, -16.0, -16.0), (12.0, 16.0, 16.0, 16.0)),
    EXPONENTIAL: ((1.0, 1.0), (120.0, 120.0)),
    "exponential_free_b": ((1.0, 1.0, 1.0), (120.0, 120.0, 12.0)),
}


def evaluation_seed(campaign_seed: int, replication: int, particle: int = 0,
                    iteration: int = 0, policy: str = FIXED_SEEDS) -> int:
    if policy == FIXED_SEEDS:
        key = (replication,)
    elif policy == PER_PARTICLE_SEEDS:
        key = (particle, iteration, replication)
    else:
        raise ConfigurationError(f"unknown seed policy {policy!r}")
    ss = np.random.SeedSequence(entropy=campaign_seed, spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class CampaignConfig:
    scenario: Scenario
    mode: str = DYNAMIC
    surface: str = EXPONENTIAL
    pin_b: bool = True
    hm0: float = 6.0
    hm_min: float = -10.0
    hm_max: float = 20.0
    update_period: float = 5.0
    lower: tuple[float, ...] | None = None
    upper: tuple[float, ...] | None = None
    sim: SimConfig = field(default_factory=SimConfig)
    population: int = 10
    iterations: int = 30
    phi: float = 4.14
    seed: int = 0
    seed_policy: str = FIXED_SEEDS
    replications: int = 1
    workers: int = 1
    label: str | None = None
    baseline_loads: tuple[float, ...] | None = None
    dynamic_initial: str = "hm0"

    def __post_init__(self):
        errors = []
        if self.mode not in (BASELINE, STATIC, DYNAMIC):
            errors.append(f"mode: unknown {self.mode!r}")
        if self.surface not in (POLYNOMIAL, EXPONENTIAL):
            errors.append(f"surface: unknown {self.surface!r}")
        if self.seed_policy not in (FIXED_SEEDS, PER_PARTICLE_SEEDS):
            errors.append(f"seed_policy: unknown {self.seed_policy!r}")
        if self.replications < 1:
            errors.append("replications: must be >= 1")
        if self.workers < 1:
            errors.append("workers: must be >= 1")
        if self.dynamic_initial not in ("hm0", "baseline"):
            errors.append("dynamic_initial: must be 'hm0' or 'baseline'")
        if not self.update_period > 0:
            errors.append("update_period: must be > 0")
        if self.baseline_loads is not None and len(self.baseline_loads) != self.scenario.n_cells:
            errors.append("baseline_loads: length must equal the cell count")
        if errors:
            raise ConfigurationError("; ".join(errors))
        lo, hi = self.bounds
        if len(lo) != self.dim or len(hi) != self.dim:
            raise ConfigurationError(f"lower/upper: need {self.dim} values for this surface")

    @property
    def dim(self) -> int:
        if self.surface == POLYNOMIAL:
            return 4
        return 2 if self.pin_b else 3

    @property
    def bounds(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        key = self.surface if (self.surface == POLYNOMIAL or self.pin_b) else "exponential_free_b"
        lo, hi = DEFAULT_BOUNDS[key]
        return (tuple(self.lower) if self.lower is not None else lo,
                tuple(self.upper) if self.upper is not None else hi)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.mode == BASELINE:
            return "planning"
        kind = "poly" if self.surface == POLYNOMIAL else "exp"
        return f"{kind}-{'static' if self.mode == STATIC else 'dynamic'}"

    def swarm_config(self) -> SwarmConfig:
        lo, hi = self.bounds
        return SwarmConfig(lower=lo, upper=hi, population=self.population,
                           iterations=self.iterations, phi=self.phi, seed=self.seed)

    def seeds(self, particle: int = 0, iteration: int = 0) -> list[int]:
        return [evaluation_seed(self.seed, r, particle, iteration, self.seed_policy)
                for r in range(self.replications)]

    def baseline_seeds(self) -> list[int]:
        return [evaluation_seed(self.seed, r) for r in range(self.replications)]

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> "CampaignConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigurationError(f"unknown campaign fields: {unknown}")
        if "scenario" not in d:
            raise ConfigurationError("scenario: required (path or inline object)")
        sc = d["scenario"]
        if isinstance(sc, str):
            path = Path(sc)
            if base_dir is not None and not path.is_absolute():
                path = base_dir / path
            if not path.exists():
                raise ConfigurationError(f"scenario: file not found {path}")
            d["scenario"] = Scenario.load(path)
        elif isinstance(sc, dict):
            d["scenario"] = Scenario.from_dict(sc)
        d["sim"] = SimConfig.from_dict(d.get("sim", {}))
        for key in ("lower", "upper", "baseline_loads"):
            if d.get(key) is not None:
                d[key] = tuple(float(v) for v in d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc


def make_surface(position, config: CampaignConfig) -> HmSurface:
    p = tuple(float(v) for v in position)
    if config.surface == POLYNOMIAL:
        params = p
    elif config.pin_b:
        params = (p[0], p[1], config.hm0)
    else:
        params = p
    return HmSurface(config.surface, params, config.hm_min, config.hm_max)


@dataclass
class Evaluation:
    objectives: tuple[float, float]
    reports: list[KpiReport]

    @property
    def mean_loads(self) -> np.ndarray:
        return np.mean([r.mean_loads for r in self.reports], axis=0)


def _average(reports: list[KpiReport]) -> tuple[float, float]:
    return (float(np.mean([r.throughput_bps for r in reports])),
            float(np.mean([r.p_access for r in reports])))


def _simulate(config: CampaignConfig, controller_factory, seeds) -> Evaluation:
    reports = [run(config.scenario, controller_factory(), config.sim, seed) for seed in seeds]
    return Evaluation(_average(reports), reports)


@dataclass
class BaselineResult:
    evaluation: Evaluation

    @property
    def objectives(self) -> tuple[float, float]:
        return self.evaluation.objectives

    @property
    def loads(self) -> np.ndarray:
        return self.evaluation.mean_loads

    @property
    def reports(self) -> list[KpiReport]:
        return self.evaluation.reports


def baseline_run(config: CampaignConfig, seeds=None) -> BaselineResult:
    """Simulate the flat planning margin ``hm0`` on every pair."""
    n = config.scenario.n_cells
    seeds = config.baseline_seeds() if seeds is None else seeds
    return BaselineResult(_simulate(config, lambda: constant_hm_matrix(n, config.hm0), seeds))


def static_controller(position, baseline_loads, config: CampaignConfig):
    return sample_hm_matrix(make_surface(position, config), baseline_loads)


def dynamic_controller(position, config: CampaignConfig, initial_loads=None) -> DynamicSampler:
    return DynamicSampler(make_surface(position, config), config.update_period, config.hm0,
                          initial_loads=initial_loads)


def static_fitness(position, baseline_loads, config: CampaignConfig, seeds=None) -> Evaluation:
    """Surface sampled once at the frozen baseline loads, held for the run."""
    seeds = config.seeds() if seeds is None else seeds
    hm = static_controller(position, baseline_loads, config)
    return _simulate(config, lambda: hm, seeds)


def dynamic_fitness(position, config: CampaignConfig, seeds=None, initial_loads=None) -> Evaluation:
    """Surface re-sampled from windowed loads every ``update_period`` seconds."""
    seeds = config.seeds() if seeds is None else seeds
    return _simulate(config, lambda: dynamic_controller(position, config, initial_loads), seeds)


def evaluate_position(config: CampaignConfig, baseline_loads, position, iteration=0,
                      particle=0, seeds=None) -> Evaluation:
    seeds = config.seeds(particle, iteration) if seeds is None else seeds
    if config.mode == STATIC:
        return static_fitness(position, baseline_loads, config, seeds)
    if config.mode == DYNAMIC:
        init = baseline_loads if config.dynamic_initial == "baseline" else None
        return dynamic_fitness(position, config, seeds, init)
    raise ConfigurationError("baseline campaigns have no fitness function")


def _fitness_job(config: CampaignConfig, baseline_loads, job):
    position, iteration, particle = job
    try:
        ev = evaluate_position(config, baseline_loads, position, iteration, particle)
    except SimulationError as exc:
        log.warning("simulation failed for %s: %s", tuple(position), exc)
        return None
    obj = ev.objectives
    return obj if all(math.isfinite(v) for v in obj) else None


@dataclass
class CampaignResult:
    config: CampaignConfig
    baseline: BaselineResult
    swarm: SwarmResult | None

    @property
    def archive(self) -> ParetoArchive:
        return self.swarm.archive if self.swarm else ParetoArchive()

    @property
    def n_evaluations(self) -> int:
        return self.swarm.n_evaluations if self.swarm else 0

    @property
    def n_iterated_evaluations(self) -> int:
        """Evaluations excluding the initial population batch."""
        return self.n_evaluations - (self.config.population if self.swarm else 0)


def run_campaign(config: CampaignConfig) -> CampaignResult:
    baseline = baseline_run(config)
    if config.mode == BASELINE:
        return CampaignResult(config, baseline, None)
    loads = (np.asarray(config.baseline_loads) if config.baseline_loads is not None
             else baseline.loads)
    job = partial(_fitness_job, config, loads)
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            result = run_swarm(config.swarm_config(), None,
                               batch_evaluate=lambda jobs: list(pool.map(job, jobs)))
    else:
        result = run_swarm(config.swarm_config(), lambda *j: job(j))
    log.info("%s: %d evaluations, %d archived", config.name, result.n_evaluations,
             len(result.archive))
    return CampaignResult(config, baseline, result)


def with_overrides(config: CampaignConfig, **changes) -> CampaignConfig:
    return replace(config, **changes)
