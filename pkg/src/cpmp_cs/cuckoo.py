"""Cuckoo Search over median sets, hybridised with capacitated K-means.

Each nest is a feasible, locally improved CPMP solution.  For the Lévy
flight and abandonment steps a nest is embedded in the plane as the
2p-vector of its median coordinates; moved positions snap back to distinct
nodes and are reassigned and polished.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import ContractViolation, ParameterError, SeedingFailed, SelectionUndefined
from .instance import (
    DistanceMatrix,
    DistanceMode,
    Nest,
    ProblemInstance,
    build_distance_matrix,
    make_nest,
)
from .kmeans import assign_nodes, local_improve, seed_nest


class LevyDegenerateWarning(RuntimeWarning):
    """The Lévy coefficient vanishes (sine factor is zero at lambda = 2)."""


@dataclass(frozen=True)
class SolverParams:
    n_nests: int = 20
    generations: int = 500
    levy_lambda: float = 1.5
    # Probability that a nest faces the egg-detection test in a generation.
    pa: float = 1.0
    mutation_k: int = 2
    seed: int = 0
    distance_mode: DistanceMode = DistanceMode.FLOAT_EXACT
    max_local_iters: int = 100
    max_seed_attempts: int = 1000
    n_assign_orders: int = 1
    # Shift/swap polishing of assignments inside local improvement.
    refine_assignment: bool = True

    def __post_init__(self):
        object.__setattr__(self, "distance_mode", DistanceMode(self.distance_mode))
        if self.n_nests < 1:
            raise ParameterError("n_nests must be >= 1")
        if self.generations < 0:
            raise ParameterError("generations must be >= 0")
        if not 1.0 <= self.levy_lambda <= 3.0:
            raise ParameterError(f"levy_lambda must lie in [1, 3], got {self.levy_lambda}")
        if not 0.0 <= self.pa <= 1.0:
            raise ParameterError(f"pa must lie in [0, 1], got {self.pa}")
        if self.mutation_k < 0:
            raise ParameterError("mutation_k must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ParameterError("seed must be a 64-bit unsigned integer")
        if self.max_local_iters < 1 or self.max_seed_attempts < 1 or self.n_assign_orders < 1:
            raise ParameterError("iteration and attempt limits must be >= 1")

    def validate_for(self, instance: ProblemInstance) -> None:
        if self.mutation_k > instance.n:
            raise ParameterError(f"mutation_k={self.mutation_k} exceeds n={instance.n}")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["distance_mode"] = self.distance_mode.value
        return out


@dataclass(frozen=True)
class ContinuousNest:
    coords: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def clamped(self) -> "ContinuousNest":
        return ContinuousNest(np.clip(self.coords, self.lower, self.upper), self.lower, self.upper)


def coordinate_bounds(instance: ProblemInstance) -> tuple[np.ndarray, np.ndarray]:
    lo = instance.coords.min(axis=0)
    hi = instance.coords.max(axis=0)
    return np.tile(lo, instance.p), np.tile(hi, instance.p)


def encode(instance: ProblemInstance, medians) -> ContinuousNest:
    lo, hi = coordinate_bounds(instance)
    return ContinuousNest(instance.coords[list(medians)].reshape(-1).copy(), lo, hi)


def levy_coefficient(lam: float) -> float:
    """Lévy step-scale factor

        Γ(1+λ) · sin(πλ/2)^(1/λ) / (Γ((1+λ)/2) · λ · 2^((λ-1)/2))

    with the exponent applied to the sine factor alone.  For λ in (2, 3] the
    sine is negative and its real root keeps the sign (so λ = 3 gives -1).
    """
    if not 1.0 <= lam <= 3.0:
        raise ParameterError(f"lambda must lie in [1, 3], got {lam}")
    # sin(pi*lam/2) == sin(pi*(1 - lam/2)); the reduced argument is exact for
    # lam in [1, 3] and keeps full relative precision near the zero at lam = 2.
    s = math.sin(math.pi * (1.0 - lam / 2.0))
    if abs(s) < 1e-12:
        warnings.warn(f"Levy coefficient is zero at lambda={lam}", LevyDegenerateWarning, stacklevel=2)
        return 0.0
    root = math.copysign(abs(s) ** (1.0 / lam), s)
    num = math.gamma(1.0 + lam) * root
    den = math.gamma((1.0 + lam) / 2.0) * lam * 2.0 ** ((lam - 1.0) / 2.0)
    return num / den


def levy_step(
    current: ContinuousNest,
    other: ContinuousNest,
    lam: float,
    rng: np.random.Generator | None = None,
    alpha: float | None = None,
    clamp: bool = True,
) -> ContinuousNest:
    """Move ``current`` by ``(current - other) * Levy(lam) * alpha``.

    ``alpha`` is drawn from U[-1, 1] once per call unless given.
    """
    if current.coords.shape != other.coords.shape:
        raise ContractViolation("positions differ in dimension")
    if alpha is None:
        alpha = rng.uniform(-1.0, 1.0)
    step = (current.coords - other.coords) * (levy_coefficient(lam) * alpha)
    moved = ContinuousNest(current.coords + step, current.lower, current.upper)
    return moved.clamped() if clamp else moved


def snap_to_nodes(instance: ProblemInstance, coords: np.ndarray) -> tuple[int, ...]:
    """Nearest distinct node for each coordinate pair, pairs taken in order."""
    xy = instance.coords
    taken = np.zeros(instance.n, dtype=bool)
    chosen = []
    for k, point in enumerate(coords.reshape(-1, 2)):
        d = np.hypot(xy[:, 0] - point[0], xy[:, 1] - point[1])
        d[taken] = np.inf
        j = int(np.argmin(d))
        taken[j] = True
        chosen.append(j)
    return tuple(chosen)


def decode(
    instance: ProblemInstance,
    dm: DistanceMatrix,
    continuous: ContinuousNest,
    max_local_iters: int = 100,
    n_assign_orders: int = 1,
    cache: dict | None = None,
    refine: bool = True,
) -> Nest | None:
    """Turn a continuous position into a polished nest, or None if infeasible."""
    medians = tuple(sorted(snap_to_nodes(instance, continuous.coords)))
    if cache is not None and medians in cache:
        return cache[medians]
    assignment = assign_nodes(instance, dm, medians)
    nest = None
    if assignment is not None:
        nest = make_nest(instance, dm, medians, assignment)
        nest = local_improve(instance, dm, nest, max_local_iters, n_assign_orders, refine)
    if cache is not None:
        cache[medians] = nest
    return nest


def fitness_of(cost: float) -> float:
    if cost < 0:
        raise ContractViolation(f"cost must be non-negative, got {cost}")
    return 1.0 / (1.0 + cost)


def survival_probability(fit_p: float, max_fit: float) -> float:
    if not max_fit > 0:
        raise ContractViolation("max_fit must be positive")
    if not 0 <= fit_p <= max_fit:
        raise ContractViolation(f"fitness {fit_p} outside [0, {max_fit}]")
    return 0.9 * fit_p / max_fit + 0.1


def abandon_and_resample(lower, upper, rng: np.random.Generator | None = None, u=None) -> ContinuousNest:
    """Uniform fresh position inside the box, one draw per dimension.

    Written as ``(1-u)*lo + u*hi`` so both endpoints are hit exactly.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if np.any(lower > upper):
        raise ContractViolation("lower bound exceeds upper bound")
    if u is None:
        u = rng.random(lower.shape)
    u = np.broadcast_to(np.asarray(u, dtype=float), lower.shape)
    return ContinuousNest((1.0 - u) * lower + u * upper, lower, upper)


def roulette_select(weights, rng: np.random.Generator) -> int:
    """Index ``i`` with probability ``w_i / sum(w)``."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ContractViolation("weights must be a non-empty 1-D sequence")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ContractViolation("weights must be finite and non-negative")
    cum = np.cumsum(w)
    total = cum[-1]
    if total <= 0:
        raise SelectionUndefined("all roulette weights are zero")
    i = int(np.searchsorted(cum, rng.random() * total, side="right"))
    i = min(i, w.size - 1)
    while w[i] == 0:
        i -= 1
    return i


def mutate_nest(
    instance: ProblemInstance,
    dm: DistanceMatrix,
    nest: Nest,
    k: int,
    rng: np.random.Generator,
    max_local_iters: int = 100,
    n_assign_orders: int = 1,
    improve_cache: dict | None = None,
    refine: bool = True,
) -> Nest:
    """Push up to ``k`` badly served nodes to other medians, then polish.

    Nodes are drawn by roulette weighted by distance to their median.  Each
    is moved to a different median with room for it, chosen by roulette
    weighted by ``1 / (1 + distance)``; a node with no such median stays.
    """
    n, p = instance.n, instance.p
    if not 0 <= k <= n - p:
        raise ContractViolation(f"k must lie in [0, {n - p}], got {k}")
    d = dm.d
    q = instance.demands
    cap = instance.capacities
    assignment = list(nest.assignment)
    loads = dict(zip(nest.medians, nest.loads))
    median_set = set(nest.medians)

    candidates = [i for i in range(n) if i not in median_set]
    picked = []
    for _ in range(k):
        w = [d[i, assignment[i]] for i in candidates]
        if not any(x > 0 for x in w):
            break
        j = roulette_select(w, rng)
        picked.append(candidates.pop(j))

    for i in picked:
        current = assignment[i]
        options = [m for m in nest.medians if m != current and cap[m] - loads[m] >= q[i]]
        if not options:
            continue
        m = options[roulette_select([1.0 / (1.0 + d[i, m]) for m in options], rng)]
        loads[current] -= q[i]
        loads[m] += q[i]
        assignment[i] = m

    key = tuple(assignment)
    if improve_cache is not None and key in improve_cache:
        return improve_cache[key]
    mutated = make_nest(instance, dm, nest.medians, assignment)
    out = local_improve(instance, dm, mutated, max_local_iters, n_assign_orders, refine)
    if improve_cache is not None:
        improve_cache[key] = out
    return out


@dataclass
class Population:
    nests: list[Nest]
    best_ever: Nest
    generation: int = 0
    fitness: list[float] = field(default_factory=list)

    @classmethod
    def from_nests(cls, nests: list[Nest], generation: int = 0, best_ever: Nest | None = None) -> "Population":
        best = min(nests, key=lambda s: s.cost)
        if best_ever is not None and best_ever.cost <= best.cost:
            best = best_ever
        return cls(list(nests), best, generation, [fitness_of(s.cost) for s in nests])

    @property
    def mean_cost(self) -> float:
        return math.fsum(s.cost for s in self.nests) / len(self.nests)


class _Memo:
    """Caches of pure results keyed by median set / assignment for one run."""

    def __init__(self):
        self.decoded: dict = {}
        self.improved: dict = {}


def _aligned_partner(own: np.ndarray, partner: np.ndarray) -> np.ndarray:
    # Pair each median with its closest counterpart so the difference vector
    # measures how far corresponding medians sit apart.
    a = own.reshape(-1, 2)
    b = partner.reshape(-1, 2)
    cost = np.hypot(a[:, None, 0] - b[None, :, 0], a[:, None, 1] - b[None, :, 1])
    _, cols = linear_sum_assignment(cost)
    return b[cols].reshape(-1)


def _resample_nest(instance, dm, params: SolverParams, rng, memo: _Memo) -> Nest:
    lo, hi = coordinate_bounds(instance)
    for _ in range(params.max_seed_attempts):
        nest = decode(
            instance, dm, abandon_and_resample(lo, hi, rng),
            params.max_local_iters, params.n_assign_orders, memo.decoded, params.refine_assignment,
        )
        if nest is not None:
            return nest
    return seed_nest(
        instance, dm, rng, params.max_seed_attempts, params.max_local_iters, params.n_assign_orders,
        params.refine_assignment,
    )


def run_generation(
    instance: ProblemInstance,
    dm: DistanceMatrix,
    population: Population,
    params: SolverParams,
    rng: np.random.Generator,
    memo: _Memo | None = None,
) -> Population:
    """One generation: Lévy proposals, egg detection and abandonment, mutation."""
    memo = memo or _Memo()
    nests = list(population.nests)
    m = len(nests)
    positions = [encode(instance, s.medians) for s in nests]

    # Lévy flights against a random partner from the generation's start.
    if m > 1:
        for i in range(m):
            f = int(rng.integers(m - 1))
            f += f >= i
            partner = replace(positions[i], coords=_aligned_partner(positions[i].coords, positions[f].coords))
            moved = levy_step(positions[i], partner, params.levy_lambda, rng)
            cand = decode(
                instance, dm, moved, params.max_local_iters, params.n_assign_orders, memo.decoded,
                params.refine_assignment,
            )
            if cand is not None and cand.cost < nests[i].cost:
                nests[i] = cand

    # Egg detection: a nest survives with probability 0.9*Fit/max(Fit) + 0.1.
    fits = [fitness_of(s.cost) for s in nests]
    max_fit = max(fits)
    for i in range(m):
        if params.pa < 1.0 and rng.random() >= params.pa:
            continue
        if rng.random() > survival_probability(fits[i], max_fit):
            nests[i] = _resample_nest(instance, dm, params, rng, memo)

    k = min(params.mutation_k, instance.n - instance.p)
    for i in range(m):
        nests[i] = mutate_nest(
            instance, dm, nests[i], k, rng,
            params.max_local_iters, params.n_assign_orders, memo.improved, params.refine_assignment,
        )

    return Population.from_nests(nests, population.generation + 1, population.best_ever)


@dataclass
class SolveResult:
    best: Nest
    history_best: list[float]
    history_mean: list[float]
    wall_time: float
    params: SolverParams

    @property
    def history(self) -> list[tuple[float, float]]:
        return list(zip(self.history_best, self.history_mean))


def initial_population(instance, dm, params: SolverParams, rng) -> Population:
    nests = [
        seed_nest(
            instance, dm, rng, params.max_seed_attempts, params.max_local_iters, params.n_assign_orders,
            params.refine_assignment,
        )
        for _ in range(params.n_nests)
    ]
    return Population.from_nests(nests)


def solve(instance: ProblemInstance, params: SolverParams | None = None, dm: DistanceMatrix | None = None) -> SolveResult:
    """Run the hybrid search and return the best nest with its cost history.

    The history holds one entry for the initial population plus one per
    generation.
    """
    params = params or SolverParams()
    params.validate_for(instance)
    t0 = time.perf_counter()
    if dm is None or dm.mode != params.distance_mode:
        dm = build_distance_matrix(instance, params.distance_mode)
    rng = np.random.default_rng(params.seed)
    memo = _Memo()
    pop = initial_population(instance, dm, params, rng)
    best_hist = [pop.best_ever.cost]
    mean_hist = [pop.mean_cost]
    for _ in range(params.generations):
        pop = run_generation(instance, dm, pop, params, rng, memo)
        best_hist.append(pop.best_ever.cost)
        mean_hist.append(pop.mean_cost)
    return SolveResult(pop.best_ever, best_hist, mean_hist, time.perf_counter() - t0, params)


__all__ = [
    "ContinuousNest",
    "LevyDegenerateWarning",
    "Population",
    "SeedingFailed",
    "SolveResult",
    "SolverParams",
    "abandon_and_resample",
    "decode",
    "encode",
    "fitness_of",
    "levy_coefficient",
    "levy_step",
    "mutate_nest",
    "roulette_select",
    "run_generation",
    "solve",
    "survival_probability",
]
