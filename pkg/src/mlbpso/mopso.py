"""Multi-objective particle swarm optimizer (maximization, two objectives).

Constriction-coefficient PSO with fixed random neighbourhoods of three,
Pareto-dominance personal bests, first-non-dominated neighbourhood bests and
an unbounded external archive of every non-dominated evaluation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidInputError

log = logging.getLogger(__name__)

Objectives = tuple  # (f1, f2), both maximized


def dominates(fa: Sequence[float], fb: Sequence[float]) -> bool:
    """True iff ``fa`` is >= ``fb`` in every objective and > in at least one."""
    ge = all(a >= b for a, b in zip(fa, fb))
    gt = any(a > b for a, b in zip(fa, fb))
    return ge and gt


def constriction_coefficients(phi: float = 4.14) -> tuple[float, float]:
    """Inertia ``c1 = chi`` and acceleration ``c_max = chi * phi / 2``.

    ``chi = 2 / |2 - phi - sqrt(phi^2 - 4 phi)|``; requires ``phi >= 4``.
    """
    if not phi >= 4:
        raise ConfigurationError(f"constriction needs phi >= 4, got {phi}")
    chi = 2.0 / abs(2.0 - phi - math.sqrt(phi * phi - 4.0 * phi))
    return chi, chi * phi / 2.0


def nondominated(points: Sequence[Sequence[float]]) -> list[int]:
    """Indices of the non-dominated points (duplicates keep the first)."""
    keep = []
    for i, p in enumerate(points):
        if any(dominates(q, p) for q in points):
            continue
        if any(tuple(points[j]) == tuple(p) for j in keep):
            continue
        keep.append(i)
    return keep


def hypervolume(front: Sequence[Sequence[float]], reference: Sequence[float]) -> float:
    """Area dominated by a 2-D maximization front and bounded by ``reference``."""
    pts = np.asarray(front, dtype=float).reshape(-1, 2)
    ref = np.asarray(reference, dtype=float)
    if len(pts) == 0:
        return 0.0
    if not np.all(np.isfinite(pts)):
        raise InvalidInputError("front contains non-finite objectives")
    if np.any(pts < ref):
        raise InvalidInputError(f"every point must dominate the reference {tuple(ref)}")
    # sweep in decreasing f1; each point adds a slab above the best f2 so far
    pts = pts[np.lexsort((-pts[:, 1], -pts[:, 0]))]
    area = 0.0
    best_f2 = ref[1]
    for f1, f2 in pts:
        if f2 > best_f2:
            area += (f1 - ref[0]) * (f2 - best_f2)
            best_f2 = f2
    return float(area)


def _same_objectives(a, b, rel: float = 1e-12) -> bool:
    return all(abs(x - y) <= rel * max(abs(x), abs(y), 1e-300) for x, y in zip(a, b))


@dataclass
class ParetoArchive:
    """Mutually non-dominated (position, objectives) pairs."""

    entries: list[tuple[tuple[float, ...], tuple[float, ...]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def insert(self, position, objectives) -> bool:
        """Offer a candidate; returns True if it was added."""
        f = tuple(float(v) for v in objectives)
        for _, g in self.entries:
            if dominates(g, f) or _same_objectives(g, f):
                return False
        self.entries = [(p, g) for p, g in self.entries if not dominates(f, g)]
        self.entries.append((tuple(float(v) for v in position), f))
        return True

    @property
    def objectives(self) -> list[tuple[float, ...]]:
        return [g for _, g in self.entries]

    @property
    def positions(self) -> list[tuple[float, ...]]:
        return [p for p, _ in self.entries]

    def hypervolume(self, reference) -> float:
        return hypervolume(self.objectives, reference)


def archive_insert(archive: ParetoArchive, position, objectives) -> ParetoArchive:
    archive.insert(position, objectives)
    return archive


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_objectives: tuple | None
    neighbors: tuple[int, ...]


@dataclass(frozen=True)
class SwarmConfig:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    population: int = 10
    iterations: int = 30
    phi: float = 4.14
    n_neighbors: int = 3
    seed: int = 0
    reshuffle_neighbors: bool = False

    def __post_init__(self):
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ConfigurationError("lower and upper bounds must be non-empty and equal length")
        if any(lo > hi for lo, hi in zip(self.lower, self.upper)):
            raise ConfigurationError("lower bound exceeds upper bound")
        if self.population < self.n_neighbors + 1:
            raise ConfigurationError("population too small for the neighbourhood size")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be >= 0")
        constriction_coefficients(self.phi)

    @property
    def dim(self) -> int:
        return len(self.lower)


def update_particle(particle: Particle, guide: np.ndarray, rng: np.random.Generator,
                    lower, upper, coefficients: tuple[float, float]) -> Particle:
    """Constriction velocity/position step, then clamp to the box.

    Two independent U(0,1) draws per dimension. A clamped dimension has its
    velocity zeroed.
    """
    c1, cmax = coefficients
    p = particle.position
    dim = len(p)
    r = rng.uniform(size=(2, dim))
    v = (c1 * particle.velocity
         + cmax * r[0] * (particle.best_position - p)
         + cmax * r[1] * (guide - p))
    p_new = p + v
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    clamped = (p_new < lower) | (p_new > upper)
    particle.position = np.clip(p_new, lower, upper)
    particle.velocity = np.where(clamped, 0.0, v)
    return particle


def neighborhood_best(particle: Particle, swarm: Sequence[Particle]) -> np.ndarray:
    """Personal best of the first neighbour not dominated by the others.

    Neighbours without an evaluated best are ignored; if none has one, the
    particle's own best is used.
    """
    cands = [swarm[j] for j in particle.neighbors if swarm[j].best_objectives is not None]
    for c in cands:
        if not any(dominates(o.best_objectives, c.best_objectives) for o in cands if o is not c):
            return c.best_position
    return particle.best_position


def update_personal_best(particle: Particle, objectives) -> Particle:
    """Replace the personal best only if ``objectives`` strictly dominates it."""
    if particle.best_objectives is None or dominates(objectives, particle.best_objectives):
        particle.best_position = particle.position.copy()
        particle.best_objectives = tuple(objectives)
    return particle


def _draw_neighbors(rng, population: int, k: int) -> list[tuple[int, ...]]:
    out = []
    for i in range(population):
        others = np.array([j for j in range(population) if j != i])
        out.append(tuple(int(j) for j in rng.choice(others, size=k, replace=False)))
    return out


@dataclass
class EvaluationRecord:
    iteration: int
    particle: int
    position: tuple[float, ...]
    objectives: tuple[float, ...] | None
    status: str = "ok"


@dataclass
class SwarmResult:
    archive: ParetoArchive
    log: list[EvaluationRecord]
    archive_history: list[list[tuple]]
    particles: list[Particle]

    @property
    def n_evaluations(self) -> int:
        return len(self.log)


def _as_objectives(obj):
    """Two finite floats, or None for a failed / malformed evaluation."""
    try:
        f = tuple(float(v) for v in obj)
    except (TypeError, ValueError):
        return None
    if len(f) != 2 or not all(math.isfinite(v) for v in f):
        return None
    return f


def run_swarm(config: SwarmConfig, fitness: Callable, batch_evaluate: Callable | None = None) -> SwarmResult:
    """Run the optimizer.

    ``fitness(position, iteration, particle_index)`` returns a 2-tuple of
    objectives (or None / non-finite on failure). ``batch_evaluate`` may
    replace the serial loop: it receives a list of ``(position, iteration,
    index)`` jobs and must return results in job order. All swarm state is
    updated only after a whole batch is back, so serial and parallel
    evaluation give identical runs.
    """
    rng = np.random.default_rng(config.seed)
    lower = np.asarray(config.lower, dtype=float)
    upper = np.asarray(config.upper, dtype=float)
    width = upper - lower
    coeffs = constriction_coefficients(config.phi)
    neighbors = _draw_neighbors(rng, config.population, config.n_neighbors)
    swarm = []
    for i in range(config.population):
        pos = rng.uniform(lower, upper)
        vel = rng.uniform(-width, width)
        swarm.append(Particle(pos, vel, pos.copy(), None, neighbors[i]))

    archive = ParetoArchive()
    records: list[EvaluationRecord] = []
    history: list[list[tuple]] = []

    def evaluate(iteration: int):
        jobs = [(p.position.copy(), iteration, i) for i, p in enumerate(swarm)]
        if batch_evaluate is None:
            results = [fitness(*job) for job in jobs]
        else:
            results = list(batch_evaluate(jobs))
        for (pos, _, i), obj in zip(jobs, results):
            obj_t = _as_objectives(obj)
            records.append(EvaluationRecord(iteration, i, tuple(float(v) for v in pos), obj_t,
                                            "ok" if obj_t is not None else "skipped"))
            if obj_t is None:
                log.warning("evaluation skipped (iteration %d, particle %d): %r", iteration, i, obj)
                continue
            update_personal_best(swarm[i], obj_t)
            archive.insert(pos, obj_t)
        history.append(list(archive.entries))

    evaluate(0)
    for it in range(1, config.iterations + 1):
        if config.reshuffle_neighbors:
            for p, nb in zip(swarm, _draw_neighbors(rng, config.population, config.n_neighbors)):
                p.neighbors = nb
        guides = [neighborhood_best(p, swarm).copy() for p in swarm]
        for p, g in zip(swarm, guides):
            update_particle(p, g, rng, lower, upper, coeffs)
        evaluate(it)
    return SwarmResult(archive, records, history, swarm)
