import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cpmp_cs.errors import ContractViolation, InfeasibleInstanceError
from cpmp_cs.instance import (
    Constraint,
    DistanceMode,
    Nest,
    Node,
    ProblemInstance,
    build_distance_matrix,
    check_feasibility,
    evaluate_cost,
    make_nest,
    reported_cost,
)

from conftest import load_tiny_records, tiny_instance


def line(coords, demand=1.0, capacity=100.0, p=1):
    n = len(coords)
    return ProblemInstance.from_arrays(coords, [demand] * n, [capacity] * n, p)


@st.composite
def instances(draw, max_n=9):
    n = draw(st.integers(2, max_n))
    p = draw(st.integers(1, n))
    coords = draw(st.lists(st.tuples(st.integers(-50, 50), st.integers(-50, 50)), min_size=n, max_size=n))
    demands = draw(st.lists(st.integers(0, 10), min_size=n, max_size=n))
    cap = max(1, sum(demands))
    return ProblemInstance.from_arrays(coords, demands, [cap] * n, p)


@st.composite
def instance_and_assignment(draw):
    inst = draw(instances())
    medians = draw(st.lists(st.integers(0, inst.n - 1), min_size=inst.p, max_size=inst.p, unique=True))
    assignment = [m if m in medians else draw(st.sampled_from(medians)) for m in range(inst.n)]
    for m in medians:
        assignment[m] = m
    return inst, sorted(medians), assignment


# --- distance matrix -------------------------------------------------------

@pytest.mark.parametrize("mode", list(DistanceMode))
def test_distance_pythagorean(mode):
    dm = build_distance_matrix(line([(0, 0), (3, 4)]), mode)
    assert dm.d[0, 1] == 5.0
    assert dm.d[1, 0] == 5.0


def test_distance_floor_of_sqrt2():
    inst = line([(0, 0), (1, 1)])
    assert build_distance_matrix(inst, DistanceMode.PER_PAIR_FLOOR).d[0, 1] == 1.0
    assert build_distance_matrix(inst, DistanceMode.FLOAT_EXACT).d[0, 1] == pytest.approx(math.sqrt(2))


def test_distance_mode_accepts_strings():
    assert build_distance_matrix(line([(0, 0), (1, 1)]), "floor").mode is DistanceMode.PER_PAIR_FLOOR


def test_distance_matrix_read_only():
    dm = build_distance_matrix(line([(0, 0), (1, 1)]))
    with pytest.raises(ValueError):
        dm.d[0, 1] = 3.0


@given(instances())
@settings(max_examples=60, deadline=None)
def test_distance_invariants(inst):
    for mode in DistanceMode:
        d = build_distance_matrix(inst, mode).d
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0)
        assert np.all(d >= 0)


def test_distance_invariants_on_fixtures():
    for rec in load_tiny_records():
        d = build_distance_matrix(tiny_instance(rec)).d
        assert np.array_equal(d, d.T) and np.all(np.diag(d) == 0)


# --- cost -------------------------------------------------------------------

def test_cost_all_self_assigned_is_zero():
    inst = line([(0, 0), (3, 4), (6, 8)], p=3)
    assert evaluate_cost(build_distance_matrix(inst), [0, 1, 2]) == 0.0


def test_cost_three_nodes_to_middle():
    inst = line([(0, 0), (3, 4), (6, 8)])
    assert evaluate_cost(build_distance_matrix(inst), [1, 1, 1]) == 10.0


def test_cost_rejects_bad_assignment():
    dm = build_distance_matrix(line([(0, 0), (3, 4), (6, 8)]))
    with pytest.raises(ContractViolation):
        evaluate_cost(dm, [1, 1, 3])
    with pytest.raises(ContractViolation):
        evaluate_cost(dm, [1, 1])


@given(instance_and_assignment())
@settings(max_examples=80, deadline=None)
def test_cost_additive_over_clusters(data):
    inst, medians, assignment = data
    dm = build_distance_matrix(inst)
    total = evaluate_cost(dm, assignment)
    parts = [sum(dm.d[i, m] for i, a in enumerate(assignment) if a == m) for m in medians]
    assert total == pytest.approx(math.fsum(parts), abs=1e-9)


@given(instance_and_assignment())
@settings(max_examples=80, deadline=None)
def test_floor_cost_never_exceeds_float_cost(data):
    inst, _, assignment = data
    exact = evaluate_cost(build_distance_matrix(inst, "float"), assignment)
    floored = evaluate_cost(build_distance_matrix(inst, "floor"), assignment)
    assert floored <= exact


def test_reported_cost_rounds_down():
    assert reported_cost(713.99) == 713
    assert reported_cost(713.0) == 713
    assert reported_cost(712.9999999999999) == 713  # summation noise is not truncated away


# --- instance validation --------------------------------------------------

def test_node_validation():
    with pytest.raises(ContractViolation):
        Node(0, 0.0, 0.0, -1.0, 10.0)
    with pytest.raises(ContractViolation):
        Node(0, 0.0, 0.0, 1.0, 0.0)


def test_instance_p_range():
    with pytest.raises(ContractViolation):
        line([(0, 0), (1, 0)], p=0)
    with pytest.raises(ContractViolation):
        line([(0, 0), (1, 0)], p=3)


def test_instance_necessary_feasibility():
    # total demand 30 > two largest capacities 10 + 10
    with pytest.raises(InfeasibleInstanceError):
        ProblemInstance.from_arrays([(0, 0), (1, 0), (2, 0)], [10, 10, 10], [10, 10, 10], 2)


def test_instance_ids_contiguous():
    nodes = (Node(0, 0, 0, 1, 5), Node(2, 1, 0, 1, 5))
    with pytest.raises(ContractViolation):
        ProblemInstance(nodes, 1)


def test_instance_arrays_read_only():
    inst = line([(0, 0), (1, 0)])
    with pytest.raises(ValueError):
        inst.coords[0, 0] = 7.0


# --- feasibility ------------------------------------------------------------

def _square():
    # medians 0 and 2, capacities 3 each, unit demands
    return ProblemInstance.from_arrays([(0, 0), (1, 0), (5, 0), (6, 0)], [1, 1, 1, 1], [3, 3, 3, 3], 2)


def test_feasible_nest_has_no_violations():
    inst = _square()
    nest = make_nest(inst, build_distance_matrix(inst), [0, 2], [0, 0, 2, 2])
    report = check_feasibility(inst, nest)
    assert report.feasible and report.violations == ()


def test_capacity_overflow_by_one_unit():
    inst = ProblemInstance.from_arrays([(0, 0), (1, 0), (2, 0), (9, 0)], [1, 1, 1, 1], [2, 3, 3, 3], 2)
    nest = make_nest(inst, build_distance_matrix(inst), [0, 3], [0, 0, 0, 3])  # load 3 on capacity 2
    report = check_feasibility(inst, nest)
    assert not report.feasible
    assert [(v.constraint, v.index) for v in report.violations] == [(Constraint.CAPACITY, 0)]


def test_too_few_medians():
    inst = _square()
    nest = make_nest(inst, build_distance_matrix(inst), [0], [0, 0, 0, 0])
    kinds = {v.constraint for v in check_feasibility(inst, nest).violations}
    assert Constraint.MEDIAN_COUNT in kinds


def test_assignment_to_non_median_and_unassigned_median():
    inst = _square()
    nest = Nest((0, 2), (0, 3, 2, 2), (), 0.0)
    violations = check_feasibility(inst, nest).violations
    found = {(v.constraint, v.index) for v in violations}
    assert (Constraint.ASSIGN_TO_MEDIAN, 1) in found  # node 1 -> non-median 3
    assert (Constraint.ASSIGN_TO_MEDIAN, 2) not in found
    nest = Nest((0, 2), (0, 0, 0, 2), (), 0.0)  # median 2 served by 0
    found = {(v.constraint, v.index) for v in check_feasibility(inst, nest).violations}
    assert (Constraint.ASSIGN_TO_MEDIAN, 2) in found


def test_invalid_assignment_index():
    inst = _square()
    found = {(v.constraint, v.index) for v in check_feasibility(inst, Nest((0, 2), (0, 9, 2, 2), (), 0.0)).violations}
    assert (Constraint.ASSIGN_ONCE, 1) in found


def test_structurally_malformed_nest_is_an_error():
    inst = _square()
    with pytest.raises(ContractViolation):
        check_feasibility(inst, Nest((0, 2), (0, 0, 2), (), 0.0))


def test_make_nest_loads_and_cost():
    inst = _square()
    nest = make_nest(inst, build_distance_matrix(inst), [2, 0], [0, 0, 2, 2])
    assert nest.medians == (0, 2)
    assert nest.loads == (2.0, 2.0)
    assert nest.cost == 2.0
    assert nest.load_of(2) == 2.0
    assert nest.clusters() == {0: [0, 1], 2: [2, 3]}
