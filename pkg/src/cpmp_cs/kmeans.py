"""Capacity-aware clustering around a fixed set of medians.

Centers are always nodes.  The quantity being minimised is the plain
distance sum of the CPMP objective; the squared-error K-means objective is
available as a diagnostic only.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, SeedingFailed
from .instance import COST_EPS, DistanceMatrix, Nest, ProblemInstance, make_nest


@dataclass(frozen=True)
class Cluster:
    median: int
    members: tuple[int, ...]
    intra_cost: float
    load: float


def clusters_of(instance: ProblemInstance, dm: DistanceMatrix, nest: Nest) -> list[Cluster]:
    groups = nest.clusters()
    q = instance.demands
    out = []
    for m in nest.medians:
        members = tuple(groups[m])
        out.append(
            Cluster(
                median=m,
                members=members,
                intra_cost=math.fsum(dm.d[members, m].tolist()),
                load=math.fsum(q[list(members)].tolist()),
            )
        )
    return out


def assign_nodes(instance: ProblemInstance, dm: DistanceMatrix, medians, start: int | None = None):
    """Greedy capacity-aware assignment of all nodes to ``medians``.

    Medians serve themselves first.  The remaining nodes are taken from one
    global queue keyed by the distance to their nearest median that still
    has room for them; a node whose nearest median filled up is re-queued
    with its next-nearest one.  Returns a tuple ``assignment`` or ``None``
    when some node cannot be placed.

    ``start`` selects an alternative order: medians are visited in turn
    beginning with ``medians[start]`` and each takes the nodes that are
    closest to it, nearest first, before the global queue places the rest.
    """
    medians = sorted(int(m) for m in medians)
    n, p = instance.n, len(medians)
    if p != instance.p or len(set(medians)) != p:
        raise ContractViolation(f"expected {instance.p} distinct medians, got {medians}")
    if medians[0] < 0 or medians[-1] >= n:
        raise ContractViolation("median index out of range")

    q = instance.demands.tolist()
    cap = instance.capacities
    residual = [cap[m] - q[m] for m in medians]
    if min(residual) < 0:
        return None

    is_median = np.zeros(n, dtype=bool)
    is_median[medians] = True
    others = np.flatnonzero(~is_median)
    med_arr = np.asarray(medians)
    sub = dm.d[np.ix_(others, med_arr)]
    nearest = sub.argmin(axis=1)

    assignment = np.empty(n, dtype=np.int64)
    assignment[med_arr] = med_arr

    if start is None:
        # Fast path: when nearest-median loads fit, the queue would reproduce them.
        loads = np.bincount(nearest, weights=np.asarray(q)[others], minlength=p)
        if np.all(loads <= np.asarray(residual)):
            assignment[others] = med_arr[nearest]
            return tuple(assignment.tolist())

    order = np.argsort(sub, axis=1, kind="stable").tolist()
    dist = sub.tolist()
    pos = others.tolist()
    placed = [False] * len(pos)

    if start is not None:
        for step in range(p):
            k = (start + step) % p
            mine = [r for r in range(len(pos)) if nearest[r] == k]
            mine.sort(key=lambda r: (dist[r][k], pos[r]))
            for r in mine:
                if residual[k] >= q[pos[r]]:
                    residual[k] -= q[pos[r]]
                    assignment[pos[r]] = medians[k]
                    placed[r] = True

    ptr = [0] * len(pos)
    heap = [(dist[r][order[r][0]], pos[r], r) for r in range(len(pos)) if not placed[r]]
    heapq.heapify(heap)
    while heap:
        d, _, r = heapq.heappop(heap)
        demand = q[pos[r]]
        k = ptr[r]
        row = order[r]
        while k < p and residual[row[k]] < demand:
            k += 1
        if k == p:
            return None
        ptr[r] = k
        j = row[k]
        dk = dist[r][j]
        if dk > d:
            heapq.heappush(heap, (dk, pos[r], r))
            continue
        residual[j] -= demand
        assignment[pos[r]] = medians[j]
    return tuple(assignment.tolist())


def best_median_of_cluster(dm: DistanceMatrix, members) -> int:
    """Discrete 1-median of ``members``; ties go to the lowest node index."""
    members = sorted(int(m) for m in members)
    if not members:
        raise ContractViolation("cluster has no members")
    if len(members) == 1:
        return members[0]
    sub = dm.d[np.ix_(members, members)]
    best, best_sum = members[0], math.inf
    for col, m in enumerate(members):
        s = math.fsum(sub[:, col].tolist())
        if s < best_sum:
            best, best_sum = m, s
    return best


def refine_assignment(instance: ProblemInstance, dm: DistanceMatrix, medians, assignment) -> tuple[int, ...]:
    """Best-improvement descent over single-node shifts and pairwise swaps.

    Medians stay fixed and self-assigned; every move keeps all loads within
    capacity and strictly lowers the distance sum.  Ties go to the lowest
    node index.
    """
    medians = sorted(medians)
    p = len(medians)
    col = {m: k for k, m in enumerate(medians)}
    a = np.array([col[m] for m in assignment], dtype=np.int64)
    movable = np.ones(len(a), dtype=bool)
    movable[medians] = False
    if not movable.any():
        return tuple(assignment)
    q = instance.demands
    cap = instance.capacities[medians]
    dist = dm.d[:, medians]
    idx = np.flatnonzero(movable)
    qi = q[idx]
    rows = np.arange(len(idx))
    sub = dist[idx]
    pair_ok = ~np.eye(len(idx), dtype=bool)
    while True:
        ai = a[idx]
        load = np.bincount(a, weights=q, minlength=p)
        slack = cap - load
        here = sub[rows, ai]

        shift = sub - here[:, None]
        shift[(qi[:, None] > slack[None, :]) | (ai[:, None] == np.arange(p)[None, :])] = np.inf
        s = int(np.argmin(shift))
        best_shift = shift.flat[s]

        cross = sub[:, ai]  # cross[i, j] = distance of node i to the median of node j
        swap = cross + cross.T - here[:, None] - here[None, :]
        dq = qi[None, :] - qi[:, None]  # q_j - q_i
        ok = (dq <= slack[ai][:, None]) & (-dq <= slack[ai][None, :]) & (ai[:, None] != ai[None, :]) & pair_ok
        swap[~ok] = np.inf
        t = int(np.argmin(swap))
        best_swap = swap.flat[t]

        if min(best_shift, best_swap) >= -COST_EPS:
            break
        if best_shift <= best_swap:
            r, k = divmod(s, p)
            a[idx[r]] = k
        else:
            r1, r2 = divmod(t, len(idx))
            a[idx[r1]], a[idx[r2]] = ai[r2], ai[r1]
    med = np.asarray(medians)
    return tuple(med[a].tolist())


def _improve_pass(instance, dm, current: Nest, n_assign_orders: int, refine: bool = True):
    groups = current.clusters()
    relocated = [best_median_of_cluster(dm, groups[m]) for m in current.medians]
    trials = [tuple(sorted(relocated))]
    for k, new in enumerate(relocated):
        if new != current.medians[k]:
            single = list(current.medians)
            single[k] = new
            trials.append(tuple(sorted(single)))
    seen = set()
    starts = [None] + list(range(1, n_assign_orders))
    for medians in trials:
        if medians in seen:
            continue
        seen.add(medians)
        for start in starts:
            assignment = assign_nodes(instance, dm, medians, start=start)
            if assignment is None:
                continue
            if refine:
                assignment = refine_assignment(instance, dm, medians, assignment)
            cand = make_nest(instance, dm, medians, assignment)
            if cand.cost < current.cost - COST_EPS:
                return cand
    if refine:
        assignment = refine_assignment(instance, dm, current.medians, current.assignment)
        if assignment != current.assignment:
            cand = make_nest(instance, dm, current.medians, assignment)
            if cand.cost < current.cost - COST_EPS:
                return cand
    return None


def local_improve(
    instance: ProblemInstance,
    dm: DistanceMatrix,
    nest: Nest,
    max_local_iters: int = 100,
    n_assign_orders: int = 1,
    refine: bool = True,
) -> Nest:
    """Alternate median relocation and capacity-aware reassignment.

    Each pass first moves every median to the 1-median of its cluster and
    reassigns; if that does not strictly lower the cost, single-cluster
    relocations are tried in median order, and finally the current
    assignment is polished by shifts and swaps.  Stops at the first pass
    without improvement, so the result is a fixed point of the pass.
    ``refine=False`` drops the shift/swap polishing.
    """
    current = nest
    for _ in range(max_local_iters):
        cand = _improve_pass(instance, dm, current, n_assign_orders, refine)
        if cand is None:
            break
        current = cand
    return current


def seed_nest(
    instance: ProblemInstance,
    dm: DistanceMatrix,
    rng: np.random.Generator,
    max_seed_attempts: int = 1000,
    max_local_iters: int = 100,
    n_assign_orders: int = 1,
    refine: bool = True,
) -> Nest:
    n, p = instance.n, instance.p
    for _ in range(max_seed_attempts):
        medians = rng.choice(n, size=p, replace=False)
        assignment = assign_nodes(instance, dm, medians)
        if assignment is None:
            continue
        nest = make_nest(instance, dm, medians, assignment)
        return local_improve(instance, dm, nest, max_local_iters, n_assign_orders, refine)
    raise SeedingFailed(f"{instance.name}: no feasible median set in {max_seed_attempts} draws")


def kmeans_objective(coords, assignment) -> float:
    """Squared-error clustering objective with each center at its median node."""
    xy = np.asarray(coords, dtype=float)
    centers = xy[np.asarray(assignment)]
    return math.fsum(((xy - centers) ** 2).sum(axis=1).tolist())
