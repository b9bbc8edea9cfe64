"""
Scenario Service
Seeded random topologies, catalogs and demand sets, sweep grids and manifests
"""

import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from services.errors import InstanceError, ScenarioSpecError
from services.io_utils import read_json, write_json
from services.models import (Demand, Instance, LinkSpec, ServerSpec, SolverConfig,
                             Topology, VnfCatalog, VnfTypeSpec)
from services.routing_service import RoutingService

logger = logging.getLogger(__name__)


class ScenarioSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    name: str = "scenario"
    servers: int = Field(default=16, ge=2)
    avg_degree: float = Field(default=3.0, ge=2)
    demand_count: int = Field(default=10, ge=1)
    chain_min: int = Field(default=1, ge=1)
    chain_max: int = Field(default=9, ge=1)
    chain_cap: int = Field(default=9, ge=1)
    vnf_types: int = Field(default=6, ge=1)
    vnf_capacity: float = Field(default=100.0, gt=0)
    vnf_bandwidth: float = Field(default=1.0, gt=0)
    server_capacity: float = Field(default=500.0, gt=0)
    link_bandwidth: float = Field(default=100.0, gt=0)
    delay_range: Tuple[float, float] = (1.0, 10.0)
    dp_max: Optional[float] = Field(default=None, gt=0)
    seed: int = 0
    clone_demands: bool = False
    sweep_params: Dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_bounds(self) -> "ScenarioSpec":
        if not 1 <= self.chain_min <= self.chain_max <= self.chain_cap:
            raise ValueError(f"need 1 <= chain_min <= chain_max <= {self.chain_cap}")
        low, high = self.delay_range
        if not 0 < low <= high:
            raise ValueError("delay_range must satisfy 0 < min <= max")
        return self


def make_spec(**values: Any) -> ScenarioSpec:
    """Build a ScenarioSpec, reporting bad values as ScenarioSpecError"""
    try:
        return ScenarioSpec(**values)
    except ValidationError as e:
        raise ScenarioSpecError(f"invalid scenario spec: {e}") from e


def _random_topology(spec: ScenarioSpec, rng: np.random.Generator) -> Topology:
    n = spec.servers
    if spec.avg_degree > n - 1:
        raise ScenarioSpecError(f"average degree {spec.avg_degree} exceeds the complete-graph degree {n - 1}")
    # a uniformly random labelled tree is decoded from a uniform Pruefer sequence
    tree = nx.from_prufer_sequence([int(v) for v in rng.integers(0, n, size=n - 2)])
    edges = {tuple(sorted(e)) for e in tree.edges}
    target = min(max(n - 1, int(round(spec.avg_degree * n / 2))), n * (n - 1) // 2)
    candidates = [(u, v) for u in range(n) for v in range(u + 1, n) if (u, v) not in edges]
    extra = target - len(edges)
    if extra > 0:
        picked = rng.choice(len(candidates), size=extra, replace=False)
        edges.update(candidates[int(i)] for i in picked)
    # number servers along a reverse Cuthill-McKee order so neighbouring ids are close in the graph
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    graph.add_edges_from(sorted(edges))
    label = {old: new for new, old in enumerate(nx.utils.reverse_cuthill_mckee_ordering(graph))}
    edges = {tuple(sorted((label[u], label[v]))) for u, v in edges}
    low, high = spec.delay_range
    links = [
        LinkSpec(id=i, endpoints=(u, v), bandwidth=spec.link_bandwidth, delay=float(rng.uniform(low, high)))
        for i, (u, v) in enumerate(sorted(edges))
    ]
    servers = [ServerSpec(id=i, capacity=spec.server_capacity) for i in range(n)]
    return Topology(servers=servers, links=links, name=spec.name)


def generate(spec: ScenarioSpec) -> Instance:
    """
    Generate one instance from a spec; identical specs give identical instances

    Returns:
        Instance bundling topology, catalog, demands and a solver config with dp_max set
    """
    rng = np.random.default_rng(spec.seed)
    topology = _random_topology(spec, rng)
    catalog = VnfCatalog(types=[
        VnfTypeSpec(id=f, capacity=spec.vnf_capacity, bandwidth=spec.vnf_bandwidth)
        for f in range(1, spec.vnf_types + 1)
    ])

    def draw_chain() -> List[int]:
        length = int(rng.integers(spec.chain_min, spec.chain_max + 1))
        return [int(f) for f in rng.integers(1, spec.vnf_types + 1, size=length)]

    # endpoints come first so specs differing only in chain settings share topology and endpoints
    endpoints = [tuple(int(v) for v in rng.choice(spec.servers, size=2, replace=False))
                 for _ in range(spec.demand_count)]
    shared = draw_chain() if spec.clone_demands else None
    demands = [
        Demand(id=d, source=source, destination=destination,
               chain=list(shared) if shared is not None else draw_chain())
        for d, (source, destination) in enumerate(endpoints)
    ]

    dp_max = spec.dp_max
    if dp_max is None:
        # the diameter: every demand can still be served on its shortest path
        routing = RoutingService(topology)
        dp_max = max(routing.distance(a, b) for a in range(spec.servers) for b in range(spec.servers))
    config = SolverConfig(dp_max=dp_max, seed=spec.seed)
    logger.debug("generated %s: %d servers, %d links, %d demands", spec.name,
                 topology.n_servers, topology.n_links, len(demands))
    return Instance(topology=topology, catalog=catalog, demands=demands, config=config)


def grid(template: ScenarioSpec, sweep: Optional[Dict[str, Sequence[Any]]] = None) -> List[ScenarioSpec]:
    """
    Cartesian expansion of a sweep over a template

    Axes are ScenarioSpec fields plus two derived ones: `chain` sets
    chain_min = chain_max, and `requested_vnfs` picks demand_count so the
    expected total chain length matches. Grid entry i gets seed template.seed + i.
    """
    if not sweep:
        return [template]
    names = list(sweep)
    specs = []
    for index, combo in enumerate(itertools.product(*(sweep[name] for name in names))):
        params = dict(zip(names, combo))
        values = template.model_dump()
        requested = None
        for axis, value in params.items():
            if axis == "chain":
                values["chain_min"] = values["chain_max"] = int(value)
            elif axis == "requested_vnfs":
                requested = int(value)
            elif axis in ScenarioSpec.model_fields and axis not in ("name", "seed", "sweep_params"):
                values[axis] = value
            else:
                raise ScenarioSpecError(f"unknown sweep axis {axis!r}")
        if requested is not None:
            mean_chain = (values["chain_min"] + values["chain_max"]) / 2
            values["demand_count"] = max(1, int(round(requested / mean_chain)))
        values.update(name=f"{template.name}-{index:03d}", seed=template.seed + index, sweep_params=params)
        specs.append(make_spec(**values))
    return specs


PRESETS: Dict[str, Tuple[Dict[str, Any], Dict[str, List[Any]]]] = {
    "chain-length": ({"name": "chain", "servers": 32, "demand_count": 30, "clone_demands": True},
                     {"chain": list(range(1, 10))}),
    "servers": ({"name": "servers", "chain_min": 3, "chain_max": 6},
                {"servers": [8, 16, 32], "requested_vnfs": [30, 90, 150, 210]}),
    "capacity": ({"name": "capacity", "demand_count": 30, "chain_min": 3, "chain_max": 6},
                 {"servers": [8, 16, 32], "vnf_capacity": [100, 160]}),
    "capacity-150": ({"name": "capacity150", "demand_count": 150, "chain_min": 3, "chain_max": 6},
                     {"servers": [8, 16, 32], "vnf_capacity": [100, 160]}),
    "baseline": ({"name": "baseline", "chain_min": 1, "chain_max": 4},
                 {"servers": [16, 32], "demand_count": [30, 60, 90, 120, 150]}),
}


def preset(name: str, seed: int = 0) -> List[ScenarioSpec]:
    try:
        template, sweep = PRESETS[name]
    except KeyError:
        raise ScenarioSpecError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return grid(make_spec(**template, seed=seed), sweep)


class ManifestEntry(BaseModel):
    id: str
    file: str
    params: Dict[str, Any] = Field(default_factory=dict)
    spec: Optional[Dict[str, Any]] = None


class Manifest(BaseModel):
    instances: List[ManifestEntry] = Field(default_factory=list)
    base_dir: Optional[str] = Field(default=None, exclude=True)

    def path_of(self, entry: ManifestEntry) -> Path:
        path = Path(entry.file)
        if not path.is_absolute() and self.base_dir:
            path = Path(self.base_dir) / path
        return path


def write_scenarios(specs: Sequence[ScenarioSpec], out_dir: Union[str, Path]) -> Path:
    """Write one instance file per spec plus manifest.json; returns the manifest path"""
    out = Path(out_dir)
    entries = []
    for spec in specs:
        instance = generate(spec)
        filename = f"{spec.name}.json"
        write_json(out / filename, instance.to_json())
        entries.append(ManifestEntry(id=spec.name, file=filename, params=spec.sweep_params,
                                     spec=spec.model_dump(mode="json", exclude={"sweep_params"})))
    manifest_path = write_json(out / "manifest.json", Manifest(instances=entries).model_dump(mode="json"))
    logger.info("wrote %d instances and %s", len(entries), manifest_path)
    return manifest_path


def load_manifest(path: Union[str, Path]) -> Manifest:
    try:
        raw = read_json(path)
        manifest = Manifest.model_validate(raw)
    except (OSError, ValueError) as e:
        raise InstanceError(f"cannot read manifest {path}: {e}") from e
    return manifest.model_copy(update={"base_dir": str(Path(path).parent)})
