"""
Core Models
Topologies, VNF catalogs, demands and solver configuration
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from services.errors import InstanceError
from services.io_utils import read_json

logger = logging.getLogger(__name__)


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ServerSpec(FrozenModel):
    id: int
    capacity: float = Field(gt=0)


class LinkSpec(FrozenModel):
    id: int
    endpoints: Tuple[int, int]
    bandwidth: float = Field(gt=0)
    delay: float = Field(gt=0)


class Topology(FrozenModel):
    servers: List[ServerSpec]
    links: List[LinkSpec]
    name: str = "topology"

    @property
    def n_servers(self) -> int:
        return len(self.servers)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def to_graph(self) -> nx.Graph:
        """Undirected graph over server ids; parallel links keep the fastest one"""
        graph = nx.Graph()
        graph.add_nodes_from(s.id for s in self.servers)
        for link in sorted(self.links, key=lambda l: (l.delay, l.id)):
            u, v = link.endpoints
            if u == v or graph.has_edge(u, v):
                continue
            graph.add_edge(u, v, delay=link.delay, link=link.id)
        return graph


class VnfTypeSpec(FrozenModel):
    id: int
    capacity: float = Field(gt=0)
    bandwidth: float = Field(gt=0)


class VnfCatalog(FrozenModel):
    types: List[VnfTypeSpec]

    def as_dict(self) -> Dict[int, VnfTypeSpec]:
        return {vnf.id: vnf for vnf in self.types}


class Demand(FrozenModel):
    id: int
    source: int
    destination: int
    chain: List[int] = Field(min_length=1)


class SolverConfig(FrozenModel):
    """Swarm parameters; defaults follow the experimental setup (20 particles, 100 iterations, c1=c2=2.05)"""

    particles: int = Field(default=20, ge=1)
    iterations: int = Field(default=100, ge=1)
    w1: float = Field(default=0.5, ge=0)
    w2: float = Field(default=0.25, ge=0)
    w3: float = Field(default=0.25, ge=0)
    c1: float = 2.05
    c2: float = 2.05
    inertia_start: float = 0.9
    inertia_end: float = 0.4
    dp_max: float = Field(gt=0)
    seed: int = 0
    penalty_weight: float = Field(default=10.0, gt=0)
    v_max_fraction: float = Field(default=0.5, gt=0, le=1)

    @model_validator(mode="after")
    def _check_weights(self) -> "SolverConfig":
        if self.w1 + self.w2 + self.w3 <= 0:
            raise ValueError("w1 + w2 + w3 must be positive")
        return self

    def with_overrides(self, **overrides: Any) -> "SolverConfig":
        """Validated copy with the non-None overrides applied"""
        values = self.model_dump()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return SolverConfig(**values)


class Instance(FrozenModel):
    """One problem instance as stored on disk; unknown top-level keys are rejected"""

    topology: Topology
    catalog: VnfCatalog
    demands: List[Demand]
    config: Optional[SolverConfig] = None

    @property
    def name(self) -> str:
        return self.topology.name

    def sorted_demands(self) -> List[Demand]:
        return sorted(self.demands, key=lambda d: d.id)

    def solver_config(self, **overrides: Any) -> SolverConfig:
        """
        Resolve the solver configuration: flags > instance config > built-in defaults

        Raises:
            InstanceError: no dp_max is available from either source
        """
        values: Dict[str, Any] = self.config.model_dump() if self.config else {}
        values.update({k: v for k, v in overrides.items() if v is not None})
        if "dp_max" not in values:
            raise InstanceError("dp_max must be given by the instance config or a flag")
        try:
            return SolverConfig(**values)
        except ValidationError as e:
            raise InstanceError(f"invalid solver config: {e}") from e

    def to_json(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", exclude_none=True)


class Violation(FrozenModel):
    kind: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.message}"


class ValidationReport(FrozenModel):
    violations: List[Violation] = Field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> List[str]:
        return [v.kind for v in self.violations]


def validate_instance(
    topology: Topology,
    catalog: VnfCatalog,
    demands: List[Demand],
    chain_bounds: Optional[Tuple[int, int]] = None,
) -> ValidationReport:
    """
    Check the cross-object invariants of an instance

    Args:
        topology: Servers and links
        catalog: VNF types
        demands: Service-chain demands
        chain_bounds: Optional inclusive (min, max) chain length

    Returns:
        ValidationReport listing every violation (empty when the instance is valid)
    """
    found: List[Violation] = []

    def add(kind: str, message: str) -> None:
        found.append(Violation(kind=kind, message=message))

    n = topology.n_servers
    server_ids = [s.id for s in topology.servers]
    if n == 0:
        add("empty-topology", "topology has no servers")
    if server_ids != list(range(n)):
        add("server-ids", f"server ids must be 0..{n - 1} in order, got {server_ids}")
    known = set(server_ids)

    seen_links = set()
    for link in topology.links:
        if link.id in seen_links:
            add("link-ids", f"duplicate link id {link.id}")
        seen_links.add(link.id)
        u, v = link.endpoints
        if u == v:
            add("link-endpoints", f"link {link.id} connects server {u} to itself")
        for end in (u, v):
            if end not in known:
                add("link-endpoints", f"link {link.id} references unknown server {end}")

    if n > 0 and not found:
        graph = topology.to_graph()
        if not nx.is_connected(graph):
            components = sorted(sorted(c) for c in nx.connected_components(graph))
            add("connectivity", f"topology is not connected: components {components}")

    type_ids = [t.id for t in catalog.types]
    if not type_ids:
        add("empty-catalog", "catalog has no VNF types")
    if len(set(type_ids)) != len(type_ids):
        add("type-ids", f"duplicate VNF type ids in {type_ids}")
    type_set = set(type_ids)

    demand_ids = [d.id for d in demands]
    if len(set(demand_ids)) != len(demand_ids):
        add("demand-ids", f"duplicate demand ids in {demand_ids}")
    for demand in demands:
        for end in (demand.source, demand.destination):
            if end not in known:
                add("demand-endpoints", f"demand {demand.id} references unknown server {end}")
        for type_id in demand.chain:
            if type_id not in type_set:
                add("unknown-type", f"demand {demand.id} chain references undefined VNF type {type_id}")
        if chain_bounds is not None:
            low, high = chain_bounds
            if not low <= len(demand.chain) <= high:
                add("chain-length", f"demand {demand.id} chain length {len(demand.chain)} outside [{low}, {high}]")

    return ValidationReport(violations=found)


def load_instance(path: Union[str, Path], validate: bool = True) -> Instance:
    """
    Load an instance JSON document

    Raises:
        InstanceError: unreadable file, schema mismatch, or (when validate) invariant violations
    """
    try:
        raw = read_json(path)
    except (OSError, ValueError) as e:
        raise InstanceError(f"cannot read instance {path}: {e}") from e
    try:
        instance = Instance.model_validate(raw)
    except ValidationError as e:
        raise InstanceError(f"instance {path} does not match the schema",
                            [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]) from e
    if validate:
        report = validate_instance(instance.topology, instance.catalog, instance.demands)
        if not report.ok:
            raise InstanceError(f"instance {path} is invalid", [str(v) for v in report.violations])
    logger.debug("loaded instance %s (%d servers, %d demands)", instance.name,
                 instance.topology.n_servers, len(instance.demands))
    return instance
