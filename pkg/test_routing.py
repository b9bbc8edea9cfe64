"""
Tests for delay-shortest routing and path stitching
"""

import math

import pytest
from hypothesis import given, settings, strategies as st

from services.errors import NoPathError
from services.models import Demand, LinkSpec, ServerSpec, Topology
from services.routing_service import RoutingService, shortest_path, stitch_path

A, B, C, D, E = range(5)


def line(delays):
    n = len(delays) + 1
    return Topology(servers=[ServerSpec(id=i, capacity=1) for i in range(n)],
                    links=[LinkSpec(id=i, endpoints=(i, i + 1), bandwidth=1, delay=d) for i, d in enumerate(delays)])


@st.composite
def connected_topologies(draw):
    n = draw(st.integers(min_value=2, max_value=6))
    edges = {(draw(st.integers(min_value=0, max_value=v - 1)), v) for v in range(1, n)}
    for u, v in draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=6)):
        if u != v:
            edges.add((min(u, v), max(u, v)))
    edges = sorted(edges)
    delays = draw(st.lists(st.integers(min_value=1, max_value=20), min_size=len(edges), max_size=len(edges)))
    return Topology(servers=[ServerSpec(id=i, capacity=1) for i in range(n)],
                    links=[LinkSpec(id=i, endpoints=e, bandwidth=1, delay=d)
                           for i, (e, d) in enumerate(zip(edges, delays))])


def test_worked_example_a_to_d(five_node):
    segment = shortest_path(five_node.topology, A, D)
    assert segment.nodes == (A, C, D)
    assert segment.links == (0, 1)
    assert segment.delay == 2


def test_same_node_is_the_empty_segment(five_node):
    segment = shortest_path(five_node.topology, C, C)
    assert segment.is_empty
    assert segment.nodes == (C,)
    assert segment.delay == 0


def test_line_graph_end_to_end():
    assert shortest_path(line([1, 1]), 0, 2).delay == 2


def test_ties_take_the_smallest_node_sequence():
    # square 0-1-3 and 0-2-3 with equal delays
    topology = Topology(
        servers=[ServerSpec(id=i, capacity=1) for i in range(4)],
        links=[LinkSpec(id=0, endpoints=(0, 2), bandwidth=1, delay=1),
               LinkSpec(id=1, endpoints=(2, 3), bandwidth=1, delay=1),
               LinkSpec(id=2, endpoints=(0, 1), bandwidth=1, delay=1),
               LinkSpec(id=3, endpoints=(1, 3), bandwidth=1, delay=1)])
    assert shortest_path(topology, 0, 3).nodes == (0, 1, 3)
    assert shortest_path(topology, 3, 0).nodes == (3, 1, 0)


def test_unreachable_endpoints_raise():
    topology = Topology(servers=[ServerSpec(id=i, capacity=1) for i in range(3)],
                        links=[LinkSpec(id=0, endpoints=(0, 1), bandwidth=1, delay=1)])
    with pytest.raises(NoPathError):
        shortest_path(topology, 0, 2)


def test_stitch_shared_host(five_node):
    sc1 = next(d for d in five_node.demands if d.id == 1)
    path = stitch_path(five_node.topology, sc1, [C, C])
    assert path.nodes == (A, C, D)
    assert path.host_positions == (1, 1)
    assert path.delay == 2


def test_stitch_two_hosts(five_node):
    sc2 = next(d for d in five_node.demands if d.id == 2)
    path = stitch_path(five_node.topology, sc2, [C, B])
    assert path.nodes == (A, C, B, E)
    assert path.links == (0, 2, 3)
    assert path.delay == 3


def test_stitch_self_demand(five_node):
    demand = Demand(id=5, source=D, destination=D, chain=[1])
    path = stitch_path(five_node.topology, demand, [D])
    assert path.nodes == (D,)
    assert path.links == ()
    assert path.delay == 0


def test_stitch_may_revisit_nodes(five_node):
    sc1 = next(d for d in five_node.demands if d.id == 1)
    path = stitch_path(five_node.topology, sc1, [E, A])
    assert path.nodes == (A, C, B, E, B, C, A, C, D)
    assert path.delay == 8


def test_stitch_rejects_wrong_host_count(five_node):
    with pytest.raises(ValueError):
        stitch_path(five_node.topology, five_node.demands[0], [C])


@settings(max_examples=60, deadline=None)
@given(connected_topologies(), st.data())
def test_symmetry_and_triangle(topology, data):
    routing = RoutingService(topology)
    n = topology.n_servers
    a, b, c = (data.draw(st.integers(0, n - 1)) for _ in range(3))
    assert routing.shortest_path(a, b).delay == routing.shortest_path(b, a).delay
    assert routing.shortest_path(a, c).delay <= routing.shortest_path(a, b).delay + routing.shortest_path(b, c).delay


@settings(max_examples=60, deadline=None)
@given(connected_topologies(), st.data())
def test_stitched_paths_are_consistent_walks(topology, data):
    routing = RoutingService(topology)
    n = topology.n_servers
    by_id = {l.id: l for l in topology.links}
    length = data.draw(st.integers(1, 4))
    demand = Demand(id=0, source=data.draw(st.integers(0, n - 1)), destination=data.draw(st.integers(0, n - 1)),
                    chain=[1] * length)
    hosts = data.draw(st.lists(st.integers(0, n - 1), min_size=length, max_size=length))
    path = routing.stitch_path(demand, hosts)
    assert path.nodes[0] == demand.source and path.nodes[-1] == demand.destination
    for k, link_id in enumerate(path.links):
        assert set(by_id[link_id].endpoints) == {path.nodes[k], path.nodes[k + 1]}
    assert math.isclose(path.delay, sum(by_id[l].delay for l in path.links))
    assert list(path.host_positions) == sorted(path.host_positions)
    assert [path.nodes[i] for i in path.host_positions] == hosts
