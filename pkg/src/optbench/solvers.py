"""Classical heuristics and exhaustive oracles.

All samplers return a :class:`~optbench.model.SampleSet` whose per-sample
costs are re-evaluated exactly against the input model before being
recorded, and all are deterministic for a fixed seed.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .formulations import maxcut_qubo
from .instances import MaxCutInstance, TspInstance, make_rng
from .model import (
    BinaryPolynomial,
    DegreeError,
    IsingModel,
    SampleSet,
    SizeCapError,
    Stopwatch,
    Timing,
    bits_to_string,
)


class RelaxationError(RuntimeError):
    """The cut relaxation failed to converge within the iteration cap."""


# ----------------------------------------------------------------------
# Shared quadratic-model compilation
# ----------------------------------------------------------------------

def _compile_quadratic(
    model: BinaryPolynomial | IsingModel,
) -> tuple[BinaryPolynomial, float, np.ndarray, np.ndarray]:
    """Return (polynomial, constant, linear, symmetric coupling matrix).

    The coupling matrix has zero diagonal and counts each pair once on each
    side, so the local field of variable i is linear[i] + coupling[i] @ x.
    """
    poly = model.to_polynomial() if isinstance(model, IsingModel) else model
    if poly.degree > 2:
        raise DegreeError(f"solver requires degree <= 2, model has degree {poly.degree}")
    n = poly.num_vars
    linear = np.zeros(n)
    coupling = np.zeros((n, n))
    constant = 0.0
    for term, coeff in poly.terms.items():
        if len(term) == 0:
            constant = coeff
        elif len(term) == 1:
            linear[term[0]] = coeff
        else:
            i, j = term
            coupling[i, j] += coeff
            coupling[j, i] += coeff
    return poly, constant, linear, coupling


def _random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2, n).astype(np.float64)


def _as_state(x: str, n: int) -> np.ndarray:
    if len(x) != n:
        raise ValueError(f"start {x!r} does not have {n} bits")
    return np.array([1.0 if c == "1" else 0.0 for c in x])


# ----------------------------------------------------------------------
# Simulated annealing
# ----------------------------------------------------------------------

@dataclass
class SaConfig:
    """Simulated annealing settings.

    One read performs ``sweeps`` full passes over the variables from a
    random start; each pass proposes every variable once in random order.
    The temperature decays geometrically once per sweep.  ``t0`` and
    ``alpha`` default to an auto schedule: t0 is the largest |cost change|
    seen over 100 random probe flips and alpha is chosen so the final sweep
    runs at 1e-3 * t0.  The acceptance constant ``kb`` is fixed to 1 by
    default and simply rescales t0.
    """

    reads: int = 100
    sweeps: int = 20
    t0: float | None = None
    alpha: float | None = None
    kb: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise ValueError(f"sweeps must be >= 1, got {self.sweeps}")
        if self.reads < 1:
            raise ValueError(f"reads must be >= 1, got {self.reads}")
        if self.t0 is not None and self.t0 <= 0.0:
            raise ValueError(f"t0 must be > 0, got {self.t0}")
        if self.alpha is not None and not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.kb <= 0.0:
            raise ValueError(f"kb must be > 0, got {self.kb}")


def _probe_t0(
    rng: np.random.Generator, linear: np.ndarray, coupling: np.ndarray, probes: int = 100
) -> float:
    n = linear.size
    states = rng.integers(0, 2, (probes, n)).astype(np.float64)
    flips = rng.integers(0, n, probes)
    fields = states @ coupling
    rows = np.arange(probes)
    deltas = (1.0 - 2.0 * states[rows, flips]) * (linear[flips] + fields[rows, flips])
    top = float(np.max(np.abs(deltas)))
    return top if top > 0.0 else 1.0


def simulated_annealing(
    model: BinaryPolynomial | IsingModel,
    cfg: SaConfig | None = None,
    starts: Sequence[str] | None = None,
) -> SampleSet:
    """Metropolis-style annealing with single-bit-flip moves.

    A worse candidate (cost change delta > 0) is accepted with probability
    exp(-delta / (kb * T)); improving or equal moves are always accepted.
    Returns the best assignment of each read as one sample.
    """
    cfg = cfg or SaConfig()
    watch = Stopwatch()
    poly, constant, linear, coupling = _compile_quadratic(model)
    n = poly.num_vars
    rng = make_rng(cfg.seed)
    t_start = cfg.t0 if cfg.t0 is not None else _probe_t0(rng, linear, coupling)
    if cfg.alpha is not None:
        alpha = cfg.alpha
    elif cfg.sweeps > 1:
        alpha = 1e-3 ** (1.0 / (cfg.sweeps - 1))
    else:
        alpha = 1e-3
    kb = cfg.kb
    t_preprocess = watch.lap()

    draws: list[tuple[str, float]] = []
    reads = cfg.reads if starts is None else len(starts)
    for read in range(reads):
        x = _random_state(rng, n) if starts is None else _as_state(starts[read], n)
        field = linear + coupling @ x
        cost = constant + float(linear @ x) + 0.5 * float(x @ coupling @ x)
        best_x = x.copy()
        best_cost = cost
        temperature = t_start
        for _ in range(cfg.sweeps):
            order = rng.permutation(n)
            uniforms = rng.random(n)
            for pos in range(n):
                i = order[pos]
                delta = (1.0 - 2.0 * x[i]) * field[i]
                if delta > 0.0:
                    exponent = -delta / (kb * temperature)
                    if exponent < -700.0 or uniforms[pos] >= math.exp(exponent):
                        continue
                sign = 1.0 - 2.0 * x[i]
                x[i] = 1.0 - x[i]
                field += sign * coupling[:, i]
                cost += delta
                if cost < best_cost:
                    best_cost = cost
                    best_x = x.copy()
            temperature *= alpha
        bitstring = bits_to_string(best_x.astype(np.uint8))
        draws.append((bitstring, poly.evaluate(bitstring)))
    t_solve = watch.lap()
    sample_set = SampleSet.from_draws(
        n, draws, info={"solver": "sa", "sweeps": cfg.sweeps, "t0": t_start, "alpha": alpha}
    )
    sample_set.timing = Timing(t_preprocess, t_solve, watch.lap())
    return sample_set


# ----------------------------------------------------------------------
# Tabu search
# ----------------------------------------------------------------------

@dataclass
class TsConfig:
    """Tabu search settings.

    ``tenure`` is the FIFO tabu-list capacity over flipped variable
    indices (None picks min(20, n)); ``iterations`` is the move count per
    restart (None picks 5n).
    """

    restarts: int = 100
    iterations: int | None = None
    tenure: int | None = None
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.iterations is not None and self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if self.tenure is not None and self.tenure < 0:
            raise ValueError(f"tenure must be >= 0, got {self.tenure}")


def tabu_search(
    model: BinaryPolynomial | IsingModel,
    cfg: TsConfig | None = None,
    starts: Sequence[str] | None = None,
) -> SampleSet:
    """Best-neighbor descent over single-bit flips with a FIFO tabu list.

    Each iteration moves to the lowest-cost non-tabu neighbor; a tabu move
    is allowed when it improves the best solution of the restart
    (aspiration).  If every move is tabu and none aspires, the
    least-recently-forbidden variable is flipped.  One sample per restart.
    """
    cfg = cfg or TsConfig()
    watch = Stopwatch()
    poly, constant, linear, coupling = _compile_quadratic(model)
    n = poly.num_vars
    tenure = cfg.tenure if cfg.tenure is not None else min(20, n)
    iterations = cfg.iterations if cfg.iterations is not None else 5 * n
    rng = make_rng(cfg.seed)
    t_preprocess = watch.lap()

    draws: list[tuple[str, float]] = []
    restarts = cfg.restarts if starts is None else len(starts)
    for restart in range(restarts):
        x = _random_state(rng, n) if starts is None else _as_state(starts[restart], n)
        field = linear + coupling @ x
        cost = constant + float(linear @ x) + 0.5 * float(x @ coupling @ x)
        best_x = x.copy()
        best_cost = cost
        tabu: deque[int] = deque(maxlen=tenure) if tenure > 0 else deque(maxlen=1)
        tabu_active = tenure > 0
        for _ in range(iterations):
            deltas = (1.0 - 2.0 * x) * field
            candidates = cost + deltas
            allowed = np.ones(n, dtype=bool)
            if tabu_active:
                for v in tabu:
                    allowed[v] = False
                allowed |= candidates < best_cost  # aspiration
            if allowed.any():
                move = int(np.argmin(np.where(allowed, candidates, np.inf)))
            else:
                move = tabu[0]
            sign = 1.0 - 2.0 * x[move]
            x[move] = 1.0 - x[move]
            field += sign * coupling[:, move]
            cost = float(candidates[move])
            if tabu_active:
                tabu.append(move)
            if cost < best_cost:
                best_cost = cost
                best_x = x.copy()
        bitstring = bits_to_string(best_x.astype(np.uint8))
        draws.append((bitstring, poly.evaluate(bitstring)))
    t_solve = watch.lap()
    sample_set = SampleSet.from_draws(
        n, draws, info={"solver": "ts", "tenure": tenure, "iterations": iterations}
    )
    sample_set.timing = Timing(t_preprocess, t_solve, watch.lap())
    return sample_set


# ----------------------------------------------------------------------
# Max-Cut local search
# ----------------------------------------------------------------------

def local_search_maxcut(
    inst: MaxCutInstance,
    restarts: int = 100,
    seed: int | None = None,
    starts: Sequence[str] | None = None,
) -> SampleSet:
    """Single-node improvement sweeps from random bipartitions.

    Sweeps the nodes in index order, moving any node whose switch strictly
    increases the cut weight, and repeats until a full sweep changes
    nothing.  The output is 1-flip stable.  One sample per restart.
    """
    watch = Stopwatch()
    n = inst.num_nodes
    poly = maxcut_qubo(inst)
    neighbors = [[] for _ in range(n)]
    weights = [[] for _ in range(n)]
    for u, v, w in inst.edges:
        neighbors[u].append(v)
        weights[u].append(w)
        neighbors[v].append(u)
        weights[v].append(w)
    nbr = [np.array(a, dtype=np.int64) for a in neighbors]
    wts = [np.array(a, dtype=np.float64) for a in weights]
    rng = make_rng(seed)
    t_preprocess = watch.lap()

    draws: list[tuple[str, float]] = []
    total = restarts if starts is None else len(starts)
    for restart in range(total):
        if starts is None:
            x = rng.integers(0, 2, n).astype(np.uint8)
        else:
            x = np.array([1 if c == "1" else 0 for c in starts[restart]], dtype=np.uint8)
        changed = True
        while changed:
            changed = False
            for u in range(n):
                if nbr[u].size == 0:
                    continue
                same = x[nbr[u]] == x[u]
                gain = float(wts[u][same].sum() - wts[u][~same].sum())
                if gain > 0.0:
                    x[u] ^= 1
                    changed = True
        bitstring = bits_to_string(x)
        draws.append((bitstring, poly.evaluate(bitstring)))
    t_solve = watch.lap()
    sample_set = SampleSet.from_draws(n, draws, info={"solver": "ls"})
    sample_set.timing = Timing(t_preprocess, t_solve, watch.lap())
    return sample_set


# ----------------------------------------------------------------------
# Goemans-Williamson rounding
# ----------------------------------------------------------------------

def goemans_williamson(
    inst: MaxCutInstance,
    hyperplanes: int = 1000,
    seed: int | None = None,
    tol: float = 1e-7,
    patience: int = 50,
    max_sweeps: int = 20_000,
) -> SampleSet:
    """Low-rank cut relaxation plus random-hyperplane rounding.

    The relaxation embeds each node as a unit vector of dimension
    min(n, ceil(sqrt(2n)) + 1) and maximizes sum_e w_e (1 - v_u . v_v) / 2
    by cyclic row updates v_i <- -g_i / |g_i| with g_i the weighted neighbor
    sum (block-coordinate ascent on the sphere product).  Convergence
    requires the relative objective change to stay below ``tol`` for
    ``patience`` consecutive sweeps.  Each hyperplane then signs the node
    vectors into one cut sample.  Relaxation time lands in t_preprocess,
    rounding time in t_solve.
    """
    watch = Stopwatch()
    n = inst.num_nodes
    rng = make_rng(seed)
    adjacency = np.zeros((n, n))
    for u, v, w in inst.edges:
        adjacency[u, v] += w
        adjacency[v, u] += w
    rank = min(n, math.ceil(math.sqrt(2.0 * n)) + 1)
    vectors = rng.normal(size=(n, rank))
    vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
    total_weight = sum(w for _, _, w in inst.edges)

    def relaxed_cut() -> float:
        bilinear = 0.0
        for u, v, w in inst.edges:
            bilinear += w * float(vectors[u] @ vectors[v])
        return 0.5 * (total_weight - bilinear)

    objective = relaxed_cut()
    streak = 0
    residual = np.inf
    converged = False
    for _ in range(max_sweeps):
        for i in range(n):
            g = adjacency[i] @ vectors
            norm = float(np.linalg.norm(g))
            if norm > 1e-12:
                vectors[i] = -g / norm
        new_objective = relaxed_cut()
        residual = abs(new_objective - objective) / max(1.0, abs(new_objective))
        objective = new_objective
        if residual < tol:
            streak += 1
            if streak >= patience:
                converged = True
                break
        else:
            streak = 0
    if not converged:
        raise RelaxationError(
            f"relaxation did not converge within {max_sweeps} sweeps "
            f"(last relative change {residual:.3e})"
        )
    t_preprocess = watch.lap()

    normals = rng.normal(size=(rank, hyperplanes))
    assignments = (vectors @ normals > 0.0).astype(np.uint8)
    edge_u = np.array([u for u, _, _ in inst.edges], dtype=np.int64)
    edge_v = np.array([v for _, v, _ in inst.edges], dtype=np.int64)
    edge_w = np.array([w for _, _, w in inst.edges])
    if inst.num_edges:
        crossing = assignments[edge_u, :] != assignments[edge_v, :]
        cuts = edge_w @ crossing
    else:
        cuts = np.zeros(hyperplanes)
    draws = [
        (bits_to_string(assignments[:, h]), -float(cuts[h])) for h in range(hyperplanes)
    ]
    t_solve = watch.lap()
    info = {
        "solver": "gw",
        "relaxed_cut": objective,
        "rank": rank,
        "negative_weights": bool(np.any(edge_w < 0.0)) if inst.num_edges else False,
    }
    sample_set = SampleSet.from_draws(n, draws, info=info)
    sample_set.timing = Timing(t_preprocess, t_solve, watch.lap())
    return sample_set


# ----------------------------------------------------------------------
# TSP greedy and oracle
# ----------------------------------------------------------------------

def nearest_neighbor_tsp(inst: TspInstance, start: int = 0) -> tuple[tuple[int, ...], float]:
    """Greedy closed tour: always move to the closest unvisited location.

    Distance ties break toward the smallest location index.  Returns the
    visiting order (beginning at ``start``) and the closed tour length.
    """
    m = inst.num_locations
    if not 0 <= start < m:
        raise ValueError(f"start {start} out of range [0, {m})")
    d = inst.distances
    visited = [False] * m
    visited[start] = True
    tour = [start]
    length = 0.0
    current = start
    for _ in range(m - 1):
        best = -1
        best_distance = math.inf
        for candidate in range(m):
            if not visited[candidate] and d[current, candidate] < best_distance:
                best = candidate
                best_distance = d[current, candidate]
        visited[best] = True
        tour.append(best)
        length += best_distance
        current = best
    length += d[current, start]
    return tuple(tour), float(length)


class TspOracleResult(NamedTuple):
    tour: tuple[int, ...]
    optimal_length: float
    worst_length: float


def tsp_exhaustive(inst: TspInstance, cap: int = 10) -> TspOracleResult:
    """Best and worst closed tours by enumerating all k! slot sequences.

    Location 0 is fixed as the start.  Among equal-length optima the
    lexicographically smallest sequence is returned.
    """
    k = inst.k
    if k > cap:
        raise SizeCapError(f"k = {k} exceeds exhaustive tour cap {cap}")
    d = inst.distances.tolist()
    d0 = d[0]
    best_tour: tuple[int, ...] | None = None
    best = math.inf
    worst = -math.inf
    for perm in itertools.permutations(range(1, k + 1)):
        length = d0[perm[0]]
        prev = perm[0]
        for loc in perm[1:]:
            length += d[prev][loc]
            prev = loc
        length += d[prev][0]
        if length < best:
            best = length
            best_tour = perm
        if length > worst:
            worst = length
    assert best_tour is not None
    return TspOracleResult(best_tour, float(best), float(worst))
