"""
Shared test fixtures
The five-node worked example and a small instance builder
"""

from pathlib import Path
from typing import Dict, Iterable, Optional, Sequence, Tuple

import pytest

from services.models import (Demand, Instance, LinkSpec, ServerSpec, SolverConfig, Topology,
                             VnfCatalog, VnfTypeSpec, load_instance)

FIXTURES = Path(__file__).parent / "fixtures"

# worked-example server ids
A, B, C, D, E = range(5)


@pytest.fixture
def five_node_path() -> Path:
    return FIXTURES / "five_node.json"


@pytest.fixture
def five_node(five_node_path) -> Instance:
    return load_instance(five_node_path)


@pytest.fixture
def five_node_config(five_node) -> SolverConfig:
    return five_node.solver_config()


def build_instance(
    n: int,
    links: Iterable[Tuple[int, int, float, float]],
    vnfs: Dict[int, Tuple[float, float]],
    demands: Sequence[Tuple[int, int, Sequence[int]]],
    server_capacity: float = 100.0,
    dp_max: float = 10.0,
    capacities: Optional[Sequence[float]] = None,
    **config,
) -> Instance:
    """links are (u, v, delay, bandwidth); vnfs map type id -> (capacity, bandwidth)"""
    caps = capacities or [server_capacity] * n
    topology = Topology(
        servers=[ServerSpec(id=i, capacity=caps[i]) for i in range(n)],
        links=[LinkSpec(id=i, endpoints=(u, v), delay=d, bandwidth=bw) for i, (u, v, d, bw) in enumerate(links)],
        name="test",
    )
    catalog = VnfCatalog(types=[VnfTypeSpec(id=f, capacity=c, bandwidth=bw) for f, (c, bw) in vnfs.items()])
    demand_list = [Demand(id=i, source=s, destination=t, chain=list(chain)) for i, (s, t, chain) in enumerate(demands)]
    return Instance(topology=topology, catalog=catalog, demands=demand_list,
                    config=SolverConfig(dp_max=dp_max, **config))


@pytest.fixture
def make_instance():
    return build_instance
