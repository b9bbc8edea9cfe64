"""
Tests for the objective, constraint checks and penalized fitness
"""

import itertools

import pytest

from services.baseline_service import BaselineService
from services.decoder_service import decode
from services.errors import UndefinedInputError
from services.evaluation_service import (EvaluationService, avg_link_utilization, avg_path_delay,
                                         check_constraints, fitness, link_loads, objective)
from services.models import LinkSpec, SolverConfig, Topology
from services.routing_service import Path

FIG3_POSITION = [2.0, 2.9, 2.1, 1.4]


def _path(delay):
    return Path(demand=0, nodes=(0,), links=(), delay=delay, host_positions=(0,))


def test_avg_path_delay():
    assert avg_path_delay([_path(4), _path(6)]) == 5
    assert avg_path_delay([_path(0)]) == 0
    with pytest.raises(UndefinedInputError):
        avg_path_delay([])


def test_worked_example_delay_and_loads(five_node):
    placement = decode(FIG3_POSITION, five_node.topology, five_node.demands)
    assert avg_path_delay(placement.paths.values()) == 2.5
    assert link_loads(placement, five_node.catalog, five_node.demands) == {0: 4, 1: 2, 2: 2, 3: 2}
    loads = link_loads(placement, five_node.catalog, five_node.demands, five_node.topology)
    assert avg_link_utilization(loads, five_node.topology) == pytest.approx(0.25)


def test_unit_bandwidth_links_are_overloaded(five_node):
    links = [l.model_copy(update={"bandwidth": 1.0}) for l in five_node.topology.links]
    topology = Topology(servers=five_node.topology.servers, links=links)
    placement = decode(FIG3_POSITION, topology, five_node.demands)
    loads = link_loads(placement, five_node.catalog, five_node.demands, topology)
    assert avg_link_utilization(loads, topology) == pytest.approx(2.5)
    violations = check_constraints(placement, topology, five_node.catalog, five_node.demands, dp_max=3)
    assert violations.link == {0: 3, 1: 1, 2: 1, 3: 1}


def test_single_type_chain_loads_each_link(make_instance):
    instance = make_instance(3, [(0, 1, 1, 10), (1, 2, 1, 10)], {1: (5, 3)}, [(0, 2, [1])])
    placement = decode([1.5], instance.topology, instance.demands)
    assert link_loads(placement, instance.catalog, instance.demands, instance.topology) == {0: 3, 1: 3}


def test_unused_link_has_zero_load(make_instance):
    instance = make_instance(3, [(0, 1, 1, 10), (1, 2, 1, 10)], {1: (5, 3)}, [(0, 1, [1])])
    placement = decode([0.0], instance.topology, instance.demands)
    assert link_loads(placement, instance.catalog, instance.demands, instance.topology)[1] == 0


def test_avg_link_utilization_averages_all_links():
    topology = Topology.model_validate({
        "servers": [{"id": 0, "capacity": 1}, {"id": 1, "capacity": 1}, {"id": 2, "capacity": 1}],
        "links": [{"id": 0, "endpoints": [0, 1], "bandwidth": 10, "delay": 1},
                  {"id": 1, "endpoints": [1, 2], "bandwidth": 10, "delay": 1}],
    })
    assert avg_link_utilization({0: 5, 1: 0}, topology) == 0.25
    assert avg_link_utilization({}, topology) == 0


def test_server_capacity_excess(make_instance):
    instance = make_instance(2, [(0, 1, 1, 100)], {1: (60, 1), 2: (50, 1)}, [(0, 1, [1, 2])])
    placement = decode([0.0, 0.0], instance.topology, instance.demands)
    violations = check_constraints(placement, instance.topology, instance.catalog, instance.demands, dp_max=10)
    assert violations.server == {0: 10, 1: 0}
    assert violations.used_servers_consistent


def test_delay_excess(make_instance):
    instance = make_instance(2, [(0, 1, 9, 100)], {1: (1, 1)}, [(0, 1, [1])])
    placement = decode([0.0], instance.topology, instance.demands)
    violations = check_constraints(placement, instance.topology, instance.catalog, instance.demands, dp_max=5)
    assert violations.delay == {0: 4}


def test_generous_worked_example_has_no_violations(five_node, five_node_config):
    placement = decode(FIG3_POSITION, five_node.topology, five_node.demands)
    violations = check_constraints(placement, five_node.topology, five_node.catalog, five_node.demands, five_node_config.dp_max)
    assert violations.is_zero


def test_objective_examples():
    unit = SolverConfig(dp_max=1, w1=1, w2=1, w3=1)
    assert objective(5, 1.0, 1.0, unit, 5, 1.0) == 3
    servers_only = SolverConfig(dp_max=1, w1=1, w2=0, w3=0)
    assert objective(2, 0.7, 0.9, servers_only, 5, 1.0) == pytest.approx(0.4)


def test_worked_example_objective(five_node, five_node_config):
    report = fitness(FIG3_POSITION, five_node, five_node_config)
    expected = 0.5 * (2 / 5) + 0.25 * 0.25 + 0.25 * (2.5 / 3)
    assert report.T == 2
    assert report.U == pytest.approx(0.25)
    assert report.dp_hat == 2.5
    assert report.objective == pytest.approx(expected)
    assert report.feasible
    assert report.penalized_fitness == report.objective
    assert report.acceptance_rate == 1.0


def test_capacity_penalty(make_instance):
    instance = make_instance(2, [(0, 1, 1, 100)], {1: (60, 1), 2: (50, 1)}, [(0, 1, [1, 2])],
                             dp_max=10, penalty_weight=10)
    report = fitness([0.0, 0.0], instance, instance.config)
    assert not report.feasible
    assert report.penalized_fitness == pytest.approx(report.objective + 1.0)
    assert report.accepted_demands == 0


def test_penalty_is_monotone_in_excess(make_instance):
    def penalized(capacity):
        instance = make_instance(2, [(0, 1, 1, 100)], {1: (60, 1), 2: (50, 1)}, [(0, 1, [1, 2])],
                                 capacities=[capacity, 100])
        return fitness([0.0, 0.0], instance, instance.config).penalized_fitness

    assert penalized(90) < penalized(80) < penalized(70)


def test_feasible_objective_bounds(five_node, five_node_config):
    evaluator = EvaluationService(five_node, five_node_config)
    bound = five_node_config.w1 + five_node_config.w2 + five_node_config.w3
    feasible = 0
    for hosts in itertools.product(range(5), repeat=4):
        report = evaluator.evaluate_hosts(hosts)
        assert report.feasible == report.violations.is_zero
        if report.feasible:
            feasible += 1
            assert 0 < report.objective <= bound
            assert report.penalized_fitness == report.objective
        else:
            assert report.penalized_fitness > report.objective
    assert feasible > 0


def test_server_weight_only_minimises_server_count(make_instance):
    instance = make_instance(
        4, [(0, 1, 1, 50), (1, 2, 2, 50), (2, 3, 1, 50), (0, 3, 3, 50)],
        {1: (40, 1), 2: (40, 1), 3: (30, 1)}, [(0, 2, [1, 2]), (3, 1, [3, 1])],
        server_capacity=80, dp_max=20, w1=1, w2=0, w3=0)
    config = instance.config
    evaluator = EvaluationService(instance, config)
    fewest = min(report.T for report in (evaluator.evaluate_hosts(h) for h in itertools.product(range(4), repeat=4))
                 if report.feasible)
    result = BaselineService(instance, config).brute_force_solve()
    assert result.report.feasible
    assert result.report.T == fewest
