"""
Tests for decoding particle positions into placements
"""

import numpy as np
from hypothesis import given, settings, strategies as st

from services.decoder_service import DecoderService, decode, dimension
from conftest import FIXTURES
from services.models import Demand, load_instance

A, B, C, D, E = range(5)


def test_dimension(five_node):
    assert dimension(five_node.demands) == 4
    assert dimension([]) == 0
    demands = [Demand(id=i, source=0, destination=1, chain=[1] * (i + 1)) for i in range(3)]
    assert dimension(demands) == 6


def test_worked_example_position(five_node):
    placement = decode([2.0, 2.9, 2.1, 1.4], five_node.topology, five_node.demands)
    assert placement.hosts_for(1) == [C, C]
    assert placement.hosts_for(2) == [C, B]
    assert placement.paths[1].nodes == (A, C, D)
    assert placement.paths[2].nodes == (A, C, B, E)
    assert placement.instances == frozenset({(1, C), (2, C), (3, B)})
    assert placement.used_servers == frozenset({B, C})


def test_zero_position_hosts_everything_on_server_zero(five_node):
    placement = decode(np.zeros(4), five_node.topology, five_node.demands)
    assert set(placement.hosts.values()) == {0}
    assert placement.used_servers == frozenset({0})


def test_out_of_range_coordinates_are_clamped(five_node):
    decoder = DecoderService(five_node.topology, five_node.demands)
    assert decoder.hosts_from_position([7.3, -2.0, 5.0, 4.999]) == (4, 0, 4, 4)


def test_enumeration_follows_demand_ids(five_node):
    reversed_demands = list(reversed(five_node.demands))
    decoder = DecoderService(five_node.topology, reversed_demands)
    assert decoder.slots == [(1, 0), (1, 1), (2, 0), (2, 1)]


def test_placement_serializer(five_node):
    payload = decode([2.0, 2.9, 2.1, 1.4], five_node.topology, five_node.demands).to_dict()
    assert payload["hosts"] == {"1": [C, C], "2": [C, B]}
    assert payload["paths"] == {"1": [A, C, D], "2": [A, C, B, E]}
    assert payload["used_servers"] == [B, C]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=4), min_size=4, max_size=4))
def test_every_assignment_is_reachable(hosts):
    five_node = load_instance(FIXTURES / "five_node.json")
    decoder = DecoderService(five_node.topology, five_node.demands)
    placement = decoder.decode(np.asarray(hosts) + 0.5)
    assert placement.host_vector == tuple(hosts)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(min_value=-10, max_value=10, allow_nan=False), min_size=4, max_size=4))
def test_decode_is_pure_and_structurally_valid(position):
    five_node = load_instance(FIXTURES / "five_node.json")
    decoder = DecoderService(five_node.topology, five_node.demands)
    first, second = decoder.decode(position), decoder.decode(list(position))
    assert first == second
    assert set(first.hosts) == set(decoder.slots)
    assert first.used_servers == frozenset(n for _, n in first.instances)
    for demand in five_node.demands:
        path = first.paths[demand.id]
        assert [path.nodes[i] for i in path.host_positions] == first.hosts_for(demand.id)
