"""Exhaustive CPMP solver for tiny instances (test ground truth)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import NoFeasibleSolution, OracleTooLarge
from .instance import COST_EPS, DistanceMatrix, Nest, ProblemInstance, make_nest


@dataclass(frozen=True)
class OracleLimits:
    max_n: int = 10
    max_p: int = 3
    max_states: int = 10_000_000

    def check(self, n: int, p: int) -> None:
        states = math.comb(n, p) * p ** (n - p)
        if n > self.max_n or p > self.max_p or states > self.max_states:
            raise OracleTooLarge(
                f"n={n}, p={p} needs {states} states (limits: n<={self.max_n}, p<={self.max_p}, "
                f"states<={self.max_states})"
            )


def _all_assignments(k: int, p: int) -> np.ndarray:
    # Row r lists, for each of k free nodes, the position of its median (0..p-1),
    # in lexicographic order.
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    return np.array(list(itertools.product(range(p), repeat=k)), dtype=np.int64)


def _best_for_medians(instance, dm, medians, table):
    medians = sorted(medians)
    n, p = instance.n, len(medians)
    q = instance.demands
    cap = instance.capacities[medians]
    others = [i for i in range(n) if i not in set(medians)]
    base = q[medians].copy()
    if np.any(base > cap):
        return None, math.inf
    if not others:
        return tuple(range(n)), 0.0
    dist = dm.d[np.ix_(others, medians)]  # (k, p)
    cols = np.arange(len(others))
    costs = dist[cols, table].sum(axis=1)
    loads = np.zeros((table.shape[0], p))
    for c in range(p):
        loads[:, c] = base[c] + ((table == c) * q[others]).sum(axis=1)
    ok = np.all(loads <= cap, axis=1)
    if not ok.any():
        return None, math.inf
    costs = np.where(ok, costs, np.inf)
    r = int(np.argmin(costs))
    assignment = list(range(n))
    for col, i in enumerate(others):
        assignment[i] = medians[table[r, col]]
    return tuple(assignment), float(costs[r])


def optimal_assignment_for_medians(
    instance: ProblemInstance, dm: DistanceMatrix, medians, limits: OracleLimits = OracleLimits()
):
    """Cheapest capacity-feasible assignment for a fixed median set, or None."""
    n, p = instance.n, len(medians)
    limits.check(n, p)
    table = _all_assignments(n - p, p)
    assignment, _ = _best_for_medians(instance, dm, list(medians), table)
    return assignment


def enumerate_optimal(
    instance: ProblemInstance, dm: DistanceMatrix, limits: OracleLimits = OracleLimits()
) -> Nest:
    """Provably optimal nest by full enumeration.

    Ties between median sets go to the lexicographically smallest one.
    """
    n, p = instance.n, instance.p
    limits.check(n, p)
    table = _all_assignments(n - p, p)
    best_assignment, best_medians, best_cost = None, None, math.inf
    for medians in itertools.combinations(range(n), p):
        assignment, cost = _best_for_medians(instance, dm, list(medians), table)
        if assignment is not None and cost < best_cost - COST_EPS:
            best_assignment, best_medians, best_cost = assignment, medians, cost
    if best_assignment is None:
        raise NoFeasibleSolution(f"{instance.name}: no capacity-feasible solution exists")
    return make_nest(instance, dm, best_medians, best_assignment)


def count_feasible_median_sets(instance: ProblemInstance, dm: DistanceMatrix, limits: OracleLimits = OracleLimits()) -> int:
    n, p = instance.n, instance.p
    limits.check(n, p)
    table = _all_assignments(n - p, p)
    return sum(
        _best_for_medians(instance, dm, list(m), table)[0] is not None
        for m in itertools.combinations(range(n), p)
    )
