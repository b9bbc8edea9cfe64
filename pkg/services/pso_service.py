"""
PSO Service
Particle swarm search over host assignments (velocity/position updates, best tracking)
"""

import csv
import io
import logging
from dataclasses import dataclass, field
from pathlib import Path as FilePath
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from services.decoder_service import Placement
from services.evaluation_service import EvaluationService, FitnessReport
from services.io_utils import atomic_write_text
from services.models import Instance, SolverConfig

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["iteration", "global_best_fitness", "feasible", "T", "U", "dp_hat"]


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_fitness: float = float("inf")
    fitness: float = float("inf")


@dataclass
class SwarmState:
    particles: List[Particle]
    global_best_position: np.ndarray
    global_best_fitness: float
    global_best_report: FitnessReport
    iteration: int
    rng_seed: int
    rng: np.random.Generator
    v_max: float
    # (r1, r2) per particle from the most recent step
    last_draws: List[Tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    global_best_fitness: float
    feasible: bool
    T: int
    U: float
    dp_hat: float


@dataclass
class ConvergenceTrace:
    entries: List[TraceEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def record(self, state: SwarmState) -> None:
        report = state.global_best_report
        self.entries.append(TraceEntry(
            iteration=state.iteration,
            global_best_fitness=state.global_best_fitness,
            feasible=report.feasible,
            T=report.T,
            U=report.U,
            dp_hat=report.dp_hat,
        ))

    def values(self) -> List[float]:
        return [e.global_best_fitness for e in self.entries]

    def is_monotone(self) -> bool:
        values = self.values()
        return all(b <= a for a, b in zip(values, values[1:]))

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for e in self.entries:
            writer.writerow([e.iteration, repr(e.global_best_fitness), str(e.feasible).lower(),
                             e.T, repr(e.U), repr(e.dp_hat)])
        return buffer.getvalue()

    def write_csv(self, path: Union[str, FilePath]) -> FilePath:
        return atomic_write_text(path, self.to_csv())


def reflect(position: np.ndarray, velocity: np.ndarray, upper: float) -> Tuple[np.ndarray, np.ndarray]:
    """Mirror coordinates that left [0, upper) back inside and reverse their velocity"""
    below = position < 0.0
    above = position >= upper
    if not (below.any() or above.any()):
        return position, velocity
    position = np.where(below, -position, np.where(above, 2.0 * upper - position, position))
    # one mirror suffices while |velocity| <= upper
    position = np.minimum(position, np.nextafter(upper, 0.0))
    velocity = np.where(below | above, -velocity, velocity)
    return position, velocity


@dataclass
class SolveResult:
    placement: Placement
    report: FitnessReport
    trace: Optional[ConvergenceTrace] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"placement": self.placement.to_dict(), "report": self.report.to_dict()}


class PSOService:
    """
    Global-best particle swarm over the floor-decoded position space.

    Random draws happen only on the update path, in particle order and then
    coordinate order. Positions that leave [0, N) are reflected back inside and
    the offending velocity components reversed, so no coordinate parks on the
    first or last server id.
    """

    def __init__(self, instance: Instance, config: SolverConfig,
                 evaluator: Optional[EvaluationService] = None):
        self.instance = instance
        self.config = config
        self.evaluator = evaluator or EvaluationService(instance, config)
        self.n_servers = instance.topology.n_servers
        self.dimension = self.evaluator.dimension

    def _evaluate_all(self, positions: Sequence[np.ndarray]) -> List[FitnessReport]:
        return [self.evaluator.evaluate_position(x) for x in positions]

    def inertia(self, iteration: int) -> float:
        """Linear schedule from inertia_start (first step) to inertia_end (last step)"""
        cfg = self.config
        if cfg.iterations <= 1:
            return cfg.inertia_start
        t = min(iteration, cfg.iterations - 1) / (cfg.iterations - 1)
        return cfg.inertia_start + (cfg.inertia_end - cfg.inertia_start) * t

    def init_swarm(self) -> SwarmState:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        v_max = cfg.v_max_fraction * self.n_servers
        shape = (cfg.particles, self.dimension)
        positions = rng.uniform(0.0, self.n_servers, size=shape)
        velocities = rng.uniform(-v_max, v_max, size=shape)
        reports = self._evaluate_all(list(positions))
        particles = [
            Particle(position=positions[i].copy(), velocity=velocities[i].copy(),
                     best_position=positions[i].copy(), best_fitness=r.penalized_fitness,
                     fitness=r.penalized_fitness)
            for i, r in enumerate(reports)
        ]
        g = int(np.argmin([p.best_fitness for p in particles]))
        return SwarmState(
            particles=particles,
            global_best_position=particles[g].best_position.copy(),
            global_best_fitness=particles[g].best_fitness,
            global_best_report=reports[g],
            iteration=0,
            rng_seed=cfg.seed,
            rng=rng,
            v_max=v_max,
        )

    def step(self, state: SwarmState) -> SwarmState:
        cfg = self.config
        w = self.inertia(state.iteration)
        draws = []
        for particle in state.particles:
            r1 = state.rng.random(self.dimension)
            r2 = state.rng.random(self.dimension)
            draws.append((r1, r2))
            velocity = (w * particle.velocity
                        + cfg.c1 * r1 * (particle.best_position - particle.position)
                        + cfg.c2 * r2 * (state.global_best_position - particle.position))
            velocity = np.clip(velocity, -state.v_max, state.v_max)
            particle.position, particle.velocity = reflect(particle.position + velocity, velocity,
                                                           float(self.n_servers))
        state.last_draws = draws

        reports = self._evaluate_all([p.position for p in state.particles])
        best_index = None
        for i, (particle, report) in enumerate(zip(state.particles, reports)):
            particle.fitness = report.penalized_fitness
            if report.penalized_fitness < particle.best_fitness:
                particle.best_fitness = report.penalized_fitness
                particle.best_position = particle.position.copy()
                if report.penalized_fitness < state.global_best_fitness and (
                        best_index is None or report.penalized_fitness < reports[best_index].penalized_fitness):
                    best_index = i
        if best_index is not None:
            state.global_best_fitness = reports[best_index].penalized_fitness
            state.global_best_position = state.particles[best_index].best_position.copy()
            state.global_best_report = reports[best_index]
        state.iteration += 1
        logger.debug("iteration %d: global best %.6f", state.iteration, state.global_best_fitness)
        return state

    def run(self) -> SolveResult:
        cfg = self.config
        logger.info("pso start: %s, %d particles x %d iterations, dimension %d, seed %d",
                    self.instance.name, cfg.particles, cfg.iterations, self.dimension, cfg.seed)
        state = self.init_swarm()
        trace = ConvergenceTrace()
        for _ in range(cfg.iterations):
            state = self.step(state)
            trace.record(state)
        if not trace.is_monotone():
            raise RuntimeError("global best increased during the run")
        placement = self.evaluator.placement(state.global_best_position)
        report = self.evaluator.evaluate_hosts(placement.host_vector)
        logger.info("pso done: fitness %.6f feasible=%s T=%d U=%.4f dp_hat=%.4f",
                    report.penalized_fitness, report.feasible, report.T, report.U, report.dp_hat)
        if not report.feasible:
            logger.warning("best placement for %s violates constraints", self.instance.name)
        return SolveResult(placement=placement, report=report, trace=trace)


def init_swarm(instance: Instance, config: SolverConfig) -> SwarmState:
    return PSOService(instance, config).init_swarm()


def step(state: SwarmState, instance: Instance, config: SolverConfig) -> SwarmState:
    return PSOService(instance, config).step(state)


def run(instance: Instance, config: SolverConfig) -> SolveResult:
    return PSOService(instance, config).run()
