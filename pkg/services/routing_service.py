"""
Routing Service
Delay-shortest segments and service-chain path stitching
"""

import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import networkx as nx

from services.errors import NoPathError
from services.models import Demand, Topology

logger = logging.getLogger(__name__)

_REL_TOL = 1e-9


@dataclass(frozen=True)
class PathSegment:
    nodes: Tuple[int, ...]
    links: Tuple[int, ...]
    delay: float

    @property
    def is_empty(self) -> bool:
        return not self.links


@dataclass(frozen=True)
class Path:
    """Walk from a demand's source to its destination through its hosts"""

    demand: int
    nodes: Tuple[int, ...]
    links: Tuple[int, ...]
    delay: float
    # index into nodes at which each chain position is served
    host_positions: Tuple[int, ...]


class RoutingService:
    """
    All-pairs delay table over one topology.

    Segments are computed lazily and cached; the service is read-only after
    construction apart from that cache, so one instance can be shared by every
    decoder and evaluator working on the same topology.
    """

    def __init__(self, topology: Topology):
        self.topology = topology
        self.graph = topology.to_graph()
        lengths = dict(nx.all_pairs_dijkstra_path_length(self.graph, weight="delay"))
        self._dist: Dict[int, Dict[int, float]] = {}
        for a, row in lengths.items():
            for b, d in row.items():
                # symmetrise so a->b and b->a report the same float
                d_back = lengths.get(b, {}).get(a, d)
                self._dist.setdefault(a, {})[b] = min(d, d_back)
        self._neighbors = {u: sorted(self.graph.neighbors(u)) for u in self.graph.nodes}
        self._segments: Dict[Tuple[int, int], PathSegment] = {}

    def distance(self, a: int, b: int) -> float:
        try:
            return self._dist[a][b]
        except KeyError:
            raise NoPathError(f"no path between servers {a} and {b}") from None

    def shortest_path(self, a: int, b: int) -> PathSegment:
        """
        Minimum-delay walk from a to b, ties broken by the smallest node-id sequence

        Raises:
            NoPathError: a and b are not connected
        """
        key = (a, b)
        cached = self._segments.get(key)
        if cached is not None:
            return cached
        if a not in self._dist:
            raise NoPathError(f"unknown server {a}")
        if a == b:
            segment = PathSegment(nodes=(a,), links=(), delay=0.0)
        else:
            total = self.distance(a, b)
            nodes: List[int] = [a]
            links: List[int] = []
            current = a
            while current != b:
                remaining = self._dist[current][b]
                for v in self._neighbors[current]:
                    edge = self.graph.edges[current, v]
                    through = edge["delay"] + self._dist[v].get(b, math.inf)
                    if math.isclose(through, remaining, rel_tol=_REL_TOL, abs_tol=1e-12):
                        nodes.append(v)
                        links.append(edge["link"])
                        current = v
                        break
                else:
                    raise NoPathError(f"cannot reconstruct path {a}->{b}")
            segment = PathSegment(nodes=tuple(nodes), links=tuple(links), delay=total)
        self._segments[key] = segment
        return segment

    def stitch_path(self, demand: Demand, hosts: Sequence[int]) -> Path:
        """
        Concatenate shortest segments source -> hosts[0] -> ... -> destination

        Args:
            demand: The demand being routed
            hosts: One server id per chain position

        Returns:
            Path with seam duplicates merged and the segment delays summed
        """
        if len(hosts) != len(demand.chain):
            raise ValueError(f"demand {demand.id} needs {len(demand.chain)} hosts, got {len(hosts)}")
        waypoints = [demand.source, *hosts, demand.destination]
        nodes: List[int] = [demand.source]
        links: List[int] = []
        delays: List[float] = []
        positions: List[int] = []
        for i in range(len(waypoints) - 1):
            segment = self.shortest_path(waypoints[i], waypoints[i + 1])
            nodes.extend(segment.nodes[1:])
            links.extend(segment.links)
            delays.append(segment.delay)
            if i < len(hosts):
                positions.append(len(nodes) - 1)
        return Path(
            demand=demand.id,
            nodes=tuple(nodes),
            links=tuple(links),
            delay=math.fsum(delays),
            host_positions=tuple(positions),
        )


def shortest_path(topology: Topology, a: int, b: int) -> PathSegment:
    return RoutingService(topology).shortest_path(a, b)


def stitch_path(topology: Topology, demand: Demand, hosts: Sequence[int]) -> Path:
    return RoutingService(topology).stitch_path(demand, hosts)
