"""
Decoder Service
Maps continuous particle positions onto host assignments and routed paths
"""

from dataclasses import dataclass
from typing import Any, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from services.models import Demand, Topology
from services.routing_service import Path, RoutingService

Slot = Tuple[int, int]  # (demand id, chain index)


@dataclass(frozen=True)
class Placement:
    hosts: Dict[Slot, int]
    paths: Dict[int, Path]
    instances: FrozenSet[Tuple[int, int]]  # (vnf type, server)
    used_servers: FrozenSet[int]
    host_vector: Tuple[int, ...]

    def hosts_for(self, demand_id: int) -> List[int]:
        chain = sorted((i, n) for (d, i), n in self.hosts.items() if d == demand_id)
        return [n for _, n in chain]

    def to_dict(self) -> Dict[str, Any]:
        demand_ids = sorted(self.paths)
        return {
            "hosts": {str(d): self.hosts_for(d) for d in demand_ids},
            "paths": {str(d): list(self.paths[d].nodes) for d in demand_ids},
            "path_delays": {str(d): self.paths[d].delay for d in demand_ids},
            "used_servers": sorted(self.used_servers),
            "instances": [[f, n] for f, n in sorted(self.instances)],
        }


def dimension(demands: Sequence[Demand]) -> int:
    """Particle length: one coordinate per (demand, chain position)"""
    return sum(len(d.chain) for d in demands)


class DecoderService:
    """
    Fixed enumeration of (demand, chain position) slots over one instance.

    Coordinates follow demands in id order, then chain positions in order.
    """

    def __init__(self, topology: Topology, demands: Sequence[Demand],
                 routing: Optional[RoutingService] = None):
        self.topology = topology
        self.demands = sorted(demands, key=lambda d: d.id)
        self.routing = routing or RoutingService(topology)
        self.n_servers = topology.n_servers
        self.slots: List[Slot] = [(d.id, i) for d in self.demands for i in range(len(d.chain))]

    @property
    def dimension(self) -> int:
        return len(self.slots)

    def hosts_from_position(self, position: Sequence[float]) -> Tuple[int, ...]:
        """Clamp every coordinate to [0, N) and floor it to a server id"""
        x = np.asarray(position, dtype=float)
        if x.shape != (self.dimension,):
            raise ValueError(f"position has shape {x.shape}, expected ({self.dimension},)")
        x = np.nan_to_num(x, nan=0.0, posinf=float(self.n_servers), neginf=0.0)
        ids = np.floor(np.clip(x, 0.0, float(self.n_servers))).astype(int)
        return tuple(int(v) for v in np.minimum(ids, self.n_servers - 1))

    def placement_for_hosts(self, host_vector: Sequence[int]) -> Placement:
        if len(host_vector) != self.dimension:
            raise ValueError(f"expected {self.dimension} hosts, got {len(host_vector)}")
        hosts: Dict[Slot, int] = {}
        paths: Dict[int, Path] = {}
        instances = set()
        k = 0
        for demand in self.demands:
            chain_hosts = [int(h) for h in host_vector[k:k + len(demand.chain)]]
            for i, (vnf, server) in enumerate(zip(demand.chain, chain_hosts)):
                hosts[(demand.id, i)] = server
                instances.add((vnf, server))
            paths[demand.id] = self.routing.stitch_path(demand, chain_hosts)
            k += len(demand.chain)
        return Placement(
            hosts=hosts,
            paths=paths,
            instances=frozenset(instances),
            used_servers=frozenset(n for _, n in instances),
            host_vector=tuple(int(h) for h in host_vector),
        )

    def decode(self, position: Sequence[float]) -> Placement:
        return self.placement_for_hosts(self.hosts_from_position(position))


def decode(position: Sequence[float], topology: Topology, demands: Sequence[Demand]) -> Placement:
    return DecoderService(topology, demands).decode(position)
