"""Problem data, distance matrices, solution representation and feasibility.

A solution ("nest") opens ``p`` medians and assigns every node to one of
them.  The objective is the plain sum of node-to-median distances and each
median's accumulated demand must not exceed its own capacity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ContractViolation, InfeasibleInstanceError

# Strict-improvement threshold shared by the local searches.
COST_EPS = 1e-9


class DistanceMode(str, enum.Enum):
    FLOAT_EXACT = "float"
    PER_PAIR_FLOOR = "floor"


@dataclass(frozen=True)
class Node:
    id: int
    x: float
    y: float
    demand: float
    capacity: float

    def __post_init__(self):
        if not self.demand >= 0:
            raise ContractViolation(f"node {self.id}: demand must be >= 0, got {self.demand}")
        if not self.capacity > 0:
            raise ContractViolation(f"node {self.id}: capacity must be > 0, got {self.capacity}")


@dataclass(frozen=True)
class ProblemInstance:
    """Immutable CPMP instance.

    Construction validates ``1 <= p <= n``, contiguous node ids and the
    necessary feasibility condition (total demand fits into the ``p``
    largest capacities).
    """

    nodes: tuple[Node, ...]
    p: int
    name: str = "instance"

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        n = len(self.nodes)
        if n == 0:
            raise ContractViolation("instance has no nodes")
        if not 1 <= self.p <= n:
            raise ContractViolation(f"p must satisfy 1 <= p <= n={n}, got {self.p}")
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise ContractViolation(f"node ids must be 0..n-1 in order; position {i} has id {node.id}")
        total = math.fsum(node.demand for node in self.nodes)
        top = math.fsum(sorted((node.capacity for node in self.nodes), reverse=True)[: self.p])
        if total > top:
            raise InfeasibleInstanceError(
                f"{self.name}: total demand {total:g} exceeds the {self.p} largest capacities ({top:g})"
            )

    @classmethod
    def from_arrays(cls, coords, demands, capacities, p, name="instance") -> "ProblemInstance":
        coords = np.asarray(coords, dtype=float).reshape(-1, 2)
        demands = np.broadcast_to(np.asarray(demands, dtype=float), (len(coords),))
        capacities = np.broadcast_to(np.asarray(capacities, dtype=float), (len(coords),))
        nodes = tuple(
            Node(i, float(x), float(y), float(q), float(c))
            for i, ((x, y), q, c) in enumerate(zip(coords, demands, capacities))
        )
        return cls(nodes, int(p), name)

    @property
    def n(self) -> int:
        return len(self.nodes)

    @cached_property
    def coords(self) -> np.ndarray:
        arr = np.array([(node.x, node.y) for node in self.nodes], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def demands(self) -> np.ndarray:
        arr = np.array([node.demand for node in self.nodes], dtype=float)
        arr.setflags(write=False)
        return arr

    @cached_property
    def capacities(self) -> np.ndarray:
        arr = np.array([node.capacity for node in self.nodes], dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def total_demand(self) -> float:
        return math.fsum(self.demands)


@dataclass(frozen=True)
class DistanceMatrix:
    d: np.ndarray
    mode: DistanceMode = DistanceMode.FLOAT_EXACT

    @property
    def n(self) -> int:
        return self.d.shape[0]


def build_distance_matrix(instance: ProblemInstance, mode=DistanceMode.FLOAT_EXACT) -> DistanceMatrix:
    mode = DistanceMode(mode)
    xy = instance.coords
    dx = xy[:, None, 0] - xy[None, :, 0]
    dy = xy[:, None, 1] - xy[None, :, 1]
    # hypot(|a|, |b|) is exactly symmetric in the pair order
    d = np.hypot(np.abs(dx), np.abs(dy))
    if mode is DistanceMode.PER_PAIR_FLOOR:
        d = np.floor(d)
    np.fill_diagonal(d, 0.0)
    d.setflags(write=False)
    return DistanceMatrix(d, mode)


def evaluate_cost(dm: DistanceMatrix, assignment: Sequence[int]) -> float:
    """Sum of distances from every node to its assigned median.

    Uses ``math.fsum`` so the result is correctly rounded and therefore
    independent of summation order.
    """
    n = dm.n
    if len(assignment) != n:
        raise ContractViolation(f"assignment covers {len(assignment)} nodes, expected {n}")
    idx = np.asarray(assignment)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ContractViolation("assignment refers to a node index out of range")
    return math.fsum(dm.d[np.arange(n), idx].tolist())


@dataclass(frozen=True)
class Nest:
    """One complete solution.

    ``medians`` is sorted ascending, ``loads`` is aligned with it and
    ``assignment[i]`` is the median serving node ``i``.
    """

    medians: tuple[int, ...]
    assignment: tuple[int, ...]
    loads: tuple[float, ...]
    cost: float

    def members(self, median: int) -> list[int]:
        return [i for i, m in enumerate(self.assignment) if m == median]

    def clusters(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {m: [] for m in self.medians}
        for i, m in enumerate(self.assignment):
            out.setdefault(m, []).append(i)
        return out

    def load_of(self, median: int) -> float:
        return self.loads[self.medians.index(median)]

    def to_dict(self) -> dict:
        return {
            "medians": list(self.medians),
            "assignment": list(self.assignment),
            "loads": list(self.loads),
            "cost": self.cost,
        }


def make_nest(instance: ProblemInstance, dm: DistanceMatrix, medians, assignment) -> Nest:
    """Build a Nest with loads and cost computed from the assignment."""
    medians = tuple(sorted(int(m) for m in medians))
    assignment = tuple(int(a) for a in assignment)
    q = instance.demands
    per_median: dict[int, list[float]] = {m: [] for m in medians}
    for i, m in enumerate(assignment):
        per_median.setdefault(m, []).append(q[i])
    loads = tuple(math.fsum(per_median[m]) for m in medians)
    return Nest(medians, assignment, loads, evaluate_cost(dm, assignment))


class Constraint(str, enum.Enum):
    ASSIGN_ONCE = "ASSIGN_ONCE"
    ASSIGN_TO_MEDIAN = "ASSIGN_TO_MEDIAN"
    MEDIAN_COUNT = "MEDIAN_COUNT"
    CAPACITY = "CAPACITY"


@dataclass(frozen=True)
class Violation:
    constraint: Constraint
    index: int
    detail: str


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def feasible(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.feasible


def check_feasibility(instance: ProblemInstance, nest: Nest) -> FeasibilityReport:
    """List every violated assignment, median-count and capacity constraint.

    Loads are recomputed from the assignment; the nest's stored loads are
    not trusted.
    """
    n, p = instance.n, instance.p
    if len(nest.assignment) != n:
        raise ContractViolation(f"assignment has length {len(nest.assignment)}, expected {n}")
    out: list[Violation] = []
    medians = list(nest.medians)
    median_set = set(medians)

    if len(median_set) != len(medians):
        out.append(Violation(Constraint.MEDIAN_COUNT, -1, "median list contains duplicates"))
    if len(median_set) != p:
        out.append(Violation(Constraint.MEDIAN_COUNT, len(median_set), f"{len(median_set)} medians open, expected {p}"))
    for m in sorted(median_set):
        if not 0 <= m < n:
            out.append(Violation(Constraint.MEDIAN_COUNT, m, f"median {m} is not a node index"))

    for i, a in enumerate(nest.assignment):
        if not 0 <= a < n:
            out.append(Violation(Constraint.ASSIGN_ONCE, i, f"node {i} has no valid assignment ({a})"))
        elif a not in median_set:
            out.append(Violation(Constraint.ASSIGN_TO_MEDIAN, i, f"node {i} assigned to non-median {a}"))
    for m in sorted(median_set):
        if 0 <= m < n and nest.assignment[m] != m:
            out.append(Violation(Constraint.ASSIGN_TO_MEDIAN, m, f"median {m} is assigned to {nest.assignment[m]}"))

    q = instance.demands
    by_median: dict[int, list[float]] = {}
    for i, a in enumerate(nest.assignment):
        if a in median_set:
            by_median.setdefault(a, []).append(q[i])
    for m in sorted(by_median):
        if not 0 <= m < n:
            continue
        load = math.fsum(by_median[m])
        cap = instance.capacities[m]
        if load > cap:
            out.append(Violation(Constraint.CAPACITY, m, f"median {m} load {load:g} exceeds capacity {cap:g}"))
    return FeasibilityReport(tuple(out))


def reported_cost(cost: float) -> int:
    """Integer objective as reported in result tables (rounded down)."""
    return int(math.floor(cost + COST_EPS))
