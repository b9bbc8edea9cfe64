"""
Baseline Service
Random host selection and the exhaustive oracle for tiny instances
"""

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from services.errors import SearchSpaceTooLargeError
from services.evaluation_service import EvaluationService
from services.models import Instance, SolverConfig
from services.pso_service import SolveResult

logger = logging.getLogger(__name__)

MAX_ORACLE_SPACE = 100_000


def _scan_prefix(payload: Tuple[Dict[str, Any], Dict[str, Any], int]) -> Tuple[float, Tuple[int, ...]]:
    """Best (fitness, hosts) among assignments whose first host is `first`"""
    instance_json, config_json, first = payload
    instance = Instance.model_validate(instance_json)
    evaluator = EvaluationService(instance, SolverConfig(**config_json), cache_size=0)
    n, dim = instance.topology.n_servers, evaluator.dimension
    best: Optional[Tuple[float, Tuple[int, ...]]] = None
    for rest in itertools.product(range(n), repeat=dim - 1):
        hosts = (first, *rest)
        value = evaluator.evaluate_placement(evaluator.decoder.placement_for_hosts(hosts)).penalized_fitness
        if best is None or value < best[0]:
            best = (value, hosts)
    return best


class BaselineService:
    def __init__(self, instance: Instance, config: SolverConfig,
                 evaluator: Optional[EvaluationService] = None):
        self.instance = instance
        self.config = config
        self.evaluator = evaluator or EvaluationService(instance, config)
        self.n_servers = instance.topology.n_servers
        self.dimension = self.evaluator.dimension

    def _result(self, hosts: Sequence[int]) -> SolveResult:
        placement = self.evaluator.decoder.placement_for_hosts(hosts)
        return SolveResult(placement=placement, report=self.evaluator.evaluate_placement(placement))

    def random_solve(self, seed: int, attempts: int = 100,
                     draws: Optional[Iterable[Sequence[int]]] = None) -> SolveResult:
        """
        Draw uniform host assignments until one is feasible

        Args:
            seed: Seed for the draw stream
            attempts: Maximum number of draws
            draws: Explicit assignments to try instead of random ones

        Returns:
            The first feasible draw, otherwise the draw with the smallest penalized fitness
        """
        if attempts < 1:
            raise ValueError("attempts must be >= 1")
        rng = np.random.default_rng(seed)
        source = iter(draws) if draws is not None else None
        best_hosts: Optional[Tuple[int, ...]] = None
        best_value = float("inf")
        for attempt in range(attempts):
            if source is not None:
                hosts = next(source, None)
                if hosts is None:
                    break
                hosts = tuple(int(h) for h in hosts)
            else:
                hosts = tuple(int(h) for h in rng.integers(0, self.n_servers, size=self.dimension))
            report = self.evaluator.evaluate_hosts(hosts)
            if report.feasible:
                logger.info("random: feasible draw after %d attempts", attempt + 1)
                return self._result(hosts)
            if report.penalized_fitness < best_value:
                best_hosts, best_value = hosts, report.penalized_fitness
        if best_hosts is None:
            raise ValueError("no host assignment was drawn")
        logger.info("random: no feasible draw in %d attempts, best fitness %.6f", attempts, best_value)
        return self._result(best_hosts)

    def space_size(self) -> int:
        return self.n_servers ** self.dimension

    def brute_force_solve(self, max_space: int = MAX_ORACLE_SPACE, workers: int = 1) -> SolveResult:
        """
        Enumerate every host assignment and keep the minimum penalized fitness

        Ties go to the lexicographically smallest host vector.

        Raises:
            SearchSpaceTooLargeError: N ** dimension exceeds max_space
        """
        size = self.space_size()
        if size > max_space:
            raise SearchSpaceTooLargeError(
                f"{self.n_servers}^{self.dimension} = {size} assignments exceeds the bound {max_space}")
        logger.info("oracle: enumerating %d assignments", size)
        if workers > 1 and self.dimension > 1:
            payloads = [(self.instance.to_json(), self.config.model_dump(), first)
                        for first in range(self.n_servers)]
            with ProcessPoolExecutor(max_workers=workers) as pool:
                partials: List[Tuple[float, Tuple[int, ...]]] = list(pool.map(_scan_prefix, payloads))
            best_hosts = min(partials)[1]
        else:
            best_hosts: Optional[Tuple[int, ...]] = None
            best_value = float("inf")
            for hosts in itertools.product(range(self.n_servers), repeat=self.dimension):
                placement = self.evaluator.decoder.placement_for_hosts(hosts)
                value = self.evaluator.evaluate_placement(placement).penalized_fitness
                if best_hosts is None or value < best_value:
                    best_hosts, best_value = hosts, value
        return self._result(best_hosts)


def random_solve(instance: Instance, config: SolverConfig, seed: int, attempts: int = 100) -> SolveResult:
    return BaselineService(instance, config).random_solve(seed, attempts)


def brute_force_solve(instance: Instance, config: SolverConfig) -> SolveResult:
    return BaselineService(instance, config).brute_force_solve()
