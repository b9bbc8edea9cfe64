"""
Evaluation Service
Objective, constraint checks and penalized fitness for decoded placements
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Optional, Sequence, Tuple

from services.decoder_service import DecoderService, Placement
from services.errors import UndefinedInputError
from services.models import Demand, Instance, SolverConfig, Topology, VnfCatalog
from services.routing_service import Path, RoutingService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintViolations:
    """Excess over each bound; every entry is >= 0"""

    server: Dict[int, float]
    link: Dict[int, float]
    delay: Dict[int, float]
    # used servers are derived from hosting, so this only guards the derivation
    used_servers_consistent: bool = True

    @property
    def is_zero(self) -> bool:
        return not any(v > 0 for group in (self.server, self.link, self.delay) for v in group.values())

    def nonzero(self) -> Dict[str, Dict[str, float]]:
        return {
            name: {str(k): v for k, v in sorted(group.items()) if v > 0}
            for name, group in (("server", self.server), ("link", self.link), ("delay", self.delay))
        }


@dataclass(frozen=True)
class FitnessReport:
    objective: float
    T: int
    U: float
    dp_hat: float
    violations: ConstraintViolations
    penalized_fitness: float
    feasible: bool
    accepted_demands: int = 0
    acceptance_rate: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "objective": self.objective,
            "T": self.T,
            "U": self.U,
            "dp_hat": self.dp_hat,
            "penalized_fitness": self.penalized_fitness,
            "feasible": self.feasible,
            "accepted_demands": self.accepted_demands,
            "acceptance_rate": self.acceptance_rate,
            "violations": self.violations.nonzero(),
        }


def avg_path_delay(paths: Iterable[Path]) -> float:
    """Mean propagation delay over all demand paths"""
    delays = [p.delay for p in paths]
    if not delays:
        raise UndefinedInputError("average path delay needs at least one path")
    return math.fsum(delays) / len(delays)


def link_loads(placement: Placement, catalog: VnfCatalog, demands: Sequence[Demand],
               topology: Optional[Topology] = None) -> Dict[int, float]:
    """
    Bandwidth carried by each link.

    Every traversal of a link by a demand's path carries the summed bandwidth
    of the distinct VNF types in that demand's chain. When a topology is
    given, links on no path are reported with load 0.
    """
    vnfs = catalog.as_dict()
    loads: Dict[int, float] = defaultdict(float)
    if topology is not None:
        for link in topology.links:
            loads[link.id] = 0.0
    for demand in demands:
        path = placement.paths[demand.id]
        per_traversal = math.fsum(vnfs[f].bandwidth for f in sorted(set(demand.chain)))
        for link_id in path.links:
            loads[link_id] += per_traversal
    return dict(loads)


def server_loads(placement: Placement, catalog: VnfCatalog) -> Dict[int, float]:
    """Processing capacity consumed on each used server, one instance per (type, server)"""
    vnfs = catalog.as_dict()
    per_server: Dict[int, list] = defaultdict(list)
    for vnf, server in placement.instances:
        per_server[server].append(vnfs[vnf].capacity)
    return {n: math.fsum(caps) for n, caps in per_server.items()}


def avg_link_utilization(loads: Dict[int, float], topology: Topology) -> float:
    if topology.n_links == 0:
        return 0.0
    return math.fsum(loads.get(l.id, 0.0) / l.bandwidth for l in topology.links) / topology.n_links


def check_constraints(placement: Placement, topology: Topology, catalog: VnfCatalog,
                      demands: Sequence[Demand], dp_max: float,
                      loads: Optional[Dict[int, float]] = None) -> ConstraintViolations:
    used = server_loads(placement, catalog)
    server_excess = {s.id: max(0.0, used.get(s.id, 0.0) - s.capacity) for s in topology.servers}
    if loads is None:
        loads = link_loads(placement, catalog, demands, topology)
    link_excess = {l.id: max(0.0, loads.get(l.id, 0.0) - l.bandwidth) for l in topology.links}
    delay_excess = {d: max(0.0, p.delay - dp_max) for d, p in placement.paths.items()}
    consistent = placement.used_servers == frozenset(n for _, n in placement.instances)
    return ConstraintViolations(server=server_excess, link=link_excess, delay=delay_excess,
                                used_servers_consistent=consistent)


def objective(T: int, U: float, dp_hat: float, config: SolverConfig, N: int, dp_max: float) -> float:
    """Weighted sum of the normalised server count, link utilisation and path delay"""
    return config.w1 * (T / N) + config.w2 * U + config.w3 * (dp_hat / dp_max)


def penalty(violations: ConstraintViolations, topology: Topology, dp_max: float) -> float:
    """Sum of excesses, each divided by the bound it exceeds"""
    terms = [violations.server[s.id] / s.capacity for s in topology.servers]
    terms += [violations.link[l.id] / l.bandwidth for l in topology.links]
    terms += [excess / dp_max for excess in violations.delay.values()]
    return math.fsum(terms)


class EvaluationService:
    """
    Scores host assignments for one instance under one solver configuration.

    Evaluation is pure, so reports are memoised by host vector.
    """

    def __init__(self, instance: Instance, config: SolverConfig,
                 routing: Optional[RoutingService] = None, cache_size: int = 65536):
        self.instance = instance
        self.config = config
        self.topology = instance.topology
        self.catalog = instance.catalog
        self.demands = instance.sorted_demands()
        self.routing = routing or RoutingService(self.topology)
        self.decoder = DecoderService(self.topology, self.demands, self.routing)
        self.cache_size = cache_size
        self._cache: Dict[Tuple[int, ...], FitnessReport] = {}

    @property
    def dimension(self) -> int:
        return self.decoder.dimension

    def evaluate_placement(self, placement: Placement) -> FitnessReport:
        cfg = self.config
        loads = link_loads(placement, self.catalog, self.demands, self.topology)
        T = len(placement.used_servers)
        U = avg_link_utilization(loads, self.topology)
        dp_hat = avg_path_delay(placement.paths.values()) if placement.paths else 0.0
        violations = check_constraints(placement, self.topology, self.catalog, self.demands,
                                       cfg.dp_max, loads)
        value = objective(T, U, dp_hat, cfg, self.topology.n_servers, cfg.dp_max)
        feasible = violations.is_zero
        penalized = value if feasible else value + cfg.penalty_weight * penalty(violations, self.topology, cfg.dp_max)
        accepted = sum(1 for d in self.demands if self._accepted(d, placement, violations))
        return FitnessReport(
            objective=value,
            T=T,
            U=U,
            dp_hat=dp_hat,
            violations=violations,
            penalized_fitness=penalized,
            feasible=feasible,
            accepted_demands=accepted,
            acceptance_rate=accepted / len(self.demands) if self.demands else 1.0,
        )

    @staticmethod
    def _accepted(demand: Demand, placement: Placement, violations: ConstraintViolations) -> bool:
        path = placement.paths[demand.id]
        if violations.delay.get(demand.id, 0.0) > 0:
            return False
        if any(violations.link.get(l, 0.0) > 0 for l in path.links):
            return False
        return not any(violations.server.get(n, 0.0) > 0 for n in placement.hosts_for(demand.id))

    def evaluate_hosts(self, host_vector: Sequence[int]) -> FitnessReport:
        key = tuple(int(h) for h in host_vector)
        report = self._cache.get(key)
        if report is None:
            report = self.evaluate_placement(self.decoder.placement_for_hosts(key))
            if len(self._cache) >= self.cache_size:
                self._cache.clear()
            self._cache[key] = report
        return report

    def evaluate_position(self, position: Sequence[float]) -> FitnessReport:
        return self.evaluate_hosts(self.decoder.hosts_from_position(position))

    def placement(self, position: Sequence[float]) -> Placement:
        return self.decoder.decode(position)


def fitness(position: Sequence[float], instance: Instance, config: SolverConfig) -> FitnessReport:
    return EvaluationService(instance, config).evaluate_position(position)
