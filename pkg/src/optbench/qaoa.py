"""Exact simulation of alternating-operator circuits in four encodings.

All circuits alternate a diagonal cost phase exp(-i * gamma_t * C) with a
mixing layer, for t = 1..p:

* ``qubo``  -- full 2**n statevector, transverse mixer exp(-i * beta * H_M)
  with H_M = -sum_i sigma_x_i, i.e. cos(beta) I + i sin(beta) sigma_x per
  qubit, started from the uniform superposition (the mixer ground state).
* ``hobo``  -- same mixer over k * ceil(log2 k) qubits carrying integer
  slot encodings of a tour.
* ``xy``    -- simulated inside the one-hot subspace (k blocks of k qubits,
  dimension k**k): brick-wall two-local XY rotations within each block,
  started from a product of W states.
* ``perm``  -- simulated in the permutation basis (dimension k!): the
  projector mixer exp(-i * beta |s><s|) applied analytically, started from
  the uniform permutation state |s>.

Success probability p_star is the exact mass on optimal basis states
(cost within 1e-9 of the optimum).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from . import formulations as forms
from .instances import MaxCutInstance, TspInstance, make_rng
from .model import BinaryPolynomial, SizeCapError
from .solvers import tsp_exhaustive


class LayerCountUnavailable(ValueError):
    """Requested a total layer count the construction cannot provide."""


# ----------------------------------------------------------------------
# Output container
# ----------------------------------------------------------------------

@dataclass
class OutputDistribution:
    """Exact output of one simulated circuit.

    ``basis`` is "full" (2**n bitstrings), "onehot" (k**k block
    assignments) or "perm" (k! permutations); ``costs`` holds the diagonal
    cost of every basis state.  For tour problems ``lengths``/``feasible``
    carry the decoded walk length and constraint check per state (length is
    NaN where undecodable).
    """

    basis: str
    probabilities: np.ndarray
    amplitudes: np.ndarray
    costs: np.ndarray
    p_star: float
    num_qubits: int | None = None
    k: int | None = None
    feasible: np.ndarray | None = None
    lengths: np.ndarray | None = None

    def expected_cost(self) -> float:
        return float(self.probabilities @ self.costs)

    def norm(self) -> float:
        return float(self.probabilities.sum())


def _check_schedule(beta, gamma) -> tuple[np.ndarray, np.ndarray]:
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    gamma = np.atleast_1d(np.asarray(gamma, dtype=np.float64))
    if beta.size != gamma.size or beta.size < 1:
        raise ValueError(
            f"need equal-length schedules with p >= 1, got {beta.size} and {gamma.size}"
        )
    return beta, gamma


def _p_star(probabilities: np.ndarray, costs: np.ndarray,
            optimal_cost: float | None = None) -> float:
    reference = float(costs.min()) if optimal_cost is None else optimal_cost
    return float(probabilities[costs <= reference + 1e-9].sum())


# ----------------------------------------------------------------------
# Transverse-mixer circuits (qubo, hobo)
# ----------------------------------------------------------------------

def _transverse_circuit(costs: np.ndarray, num_qubits: int,
                        beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    size = costs.size
    psi = np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)
    for b, g in zip(beta, gamma):
        psi *= np.exp(-1j * g * costs)
        c, s = math.cos(b), math.sin(b)
        for q in range(num_qubits):
            view = psi.reshape(-1, 2, 1 << q)
            a0 = view[:, 0, :].copy()
            a1 = view[:, 1, :]
            view[:, 0, :] = c * a0 + 1j * s * a1
            view[:, 1, :] = 1j * s * a0 + c * a1
    return psi


def qaoa_qubo_simulate(
    model: BinaryPolynomial,
    beta,
    gamma,
    cap: int = 26,
    optimal_cost: float | None = None,
) -> OutputDistribution:
    """Full-statevector run of a (possibly higher-order) diagonal cost model."""
    beta, gamma = _check_schedule(beta, gamma)
    n = model.num_vars
    if n > cap:
        raise SizeCapError(f"{n} qubits exceeds statevector cap {cap}")
    costs = model.cost_vector()
    psi = _transverse_circuit(costs, n, beta, gamma)
    probs = np.abs(psi) ** 2
    return OutputDistribution(
        basis="full",
        probabilities=probs,
        amplitudes=psi,
        costs=costs,
        p_star=_p_star(probs, costs, optimal_cost),
        num_qubits=n,
    )


def _hobo_tables(inst: TspInstance, a: float, b: float) -> tuple[np.ndarray, ...]:
    """(costs, lengths, feasible) over all integer-encoded basis states."""
    k = inst.k
    m = forms.hobo_bits_per_slot(k)
    n = k * m
    size = 1 << n
    idx = np.arange(size, dtype=np.int64)
    mask = (1 << m) - 1
    values = [(idx >> (t * m)) & mask for t in range(k)]
    locs = [(v % k).astype(np.int16) + 1 for v in values]
    d = inst.distances
    lengths = d[0, locs[0]].copy()
    for t in range(k - 1):
        lengths += d[locs[t], locs[t + 1]]
    lengths += d[locs[k - 1], 0]
    range_viol = np.zeros(size, dtype=np.int16)
    for v in values:
        range_viol += (v >= k).astype(np.int16)
    pair_viol = np.zeros(size, dtype=np.int16)
    for t1 in range(k):
        for t2 in range(t1 + 1, k):
            pair_viol += (locs[t1] == locs[t2]).astype(np.int16)
    costs = a * lengths + b * (range_viol + pair_viol)
    feasible = (range_viol == 0) & (pair_viol == 0)
    return costs, lengths, feasible


def qaoa_hobo_tsp_simulate(
    inst: TspInstance,
    beta,
    gamma,
    a: float | None = None,
    b: float | None = None,
    cap: int = 26,
    l_star: float | None = None,
) -> OutputDistribution:
    """Integer-encoded tour circuit over k * ceil(log2 k) qubits.

    The diagonal cost of a basis state is A times the walk length of its
    decoded slot sequence plus B per slot integer >= k and B per unordered
    slot pair naming the same location (integers wrap modulo k for the
    walk, see :mod:`optbench.formulations`).
    """
    beta, gamma = _check_schedule(beta, gamma)
    k = inst.k
    n = forms.hobo_num_vars(k)
    if n > cap:
        raise SizeCapError(f"{n} qubits exceeds statevector cap {cap}")
    a_default, b_default = forms.tsp_default_penalties(inst)
    a = a_default if a is None else a
    b = b_default if b is None else b
    costs, lengths, feasible = _hobo_tables(inst, a, b)
    if l_star is None:
        l_star = tsp_exhaustive(inst).optimal_length
    psi = _transverse_circuit(costs, n, beta, gamma)
    probs = np.abs(psi) ** 2
    optimal = feasible & (lengths <= l_star + 1e-9)
    return OutputDistribution(
        basis="full",
        probabilities=probs,
        amplitudes=psi,
        costs=costs,
        p_star=float(probs[optimal].sum()),
        num_qubits=n,
        k=k,
        feasible=feasible,
        lengths=lengths,
    )


# ----------------------------------------------------------------------
# One-hot subspace circuits (xy)
# ----------------------------------------------------------------------

def xy_pair_schedule(k: int) -> list[tuple[int, int]]:
    """Brick-wall pair order on 0-based one-hot positions within a block.

    Even layer (0,1), (2,3), ...; odd layer (1,2), (3,4), ...; a wrap pair
    (k-1, 0) closes the ring when k is odd.
    """
    pairs = [(i, i + 1) for i in range(0, k - 1, 2)]
    pairs += [(i, i + 1) for i in range(1, k - 1, 2)]
    if k % 2 == 1 and k > 1:
        pairs.append((k - 1, 0))
    return pairs


def xy_pair_rotation(beta: float) -> np.ndarray:
    """Action of exp(-i beta (XX + YY)) on the span of the two one-hot states."""
    c2, s2 = math.cos(2.0 * beta), math.sin(2.0 * beta)
    return np.array([[c2, -1j * s2], [-1j * s2, c2]], dtype=np.complex128)


def _onehot_digit_tables(inst: TspInstance, a: float, b: float) -> tuple[np.ndarray, ...]:
    """(costs, lengths, feasible) over the k**k one-hot basis."""
    k = inst.k
    size = k ** k
    idx = np.arange(size, dtype=np.int64)
    digits = [((idx // (k ** t)) % k).astype(np.int16) for t in range(k)]
    locs = [dig + 1 for dig in digits]
    d = inst.distances
    lengths = d[0, locs[0]].copy()
    for t in range(k - 1):
        lengths += d[locs[t], locs[t + 1]]
    lengths += d[locs[k - 1], 0]
    penalty = np.zeros(size)
    for loc in range(k):
        count = np.zeros(size, dtype=np.int16)
        for dig in digits:
            count += (dig == loc).astype(np.int16)
        penalty += (1.0 - count) ** 2
    costs = a * lengths + b * penalty
    feasible = penalty == 0.0
    return costs, lengths, feasible


def _xy_circuit(costs: np.ndarray, k: int,
                beta: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    size = costs.size
    psi = np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)
    pairs = xy_pair_schedule(k)
    for b, g in zip(beta, gamma):
        psi *= np.exp(-1j * g * costs)
        c2, s2 = math.cos(2.0 * b), math.sin(2.0 * b)
        for block in range(k):
            view = psi.reshape(-1, k, k ** block)
            for i, j in pairs:
                ai = view[:, i, :].copy()
                aj = view[:, j, :]
                view[:, i, :] = c2 * ai - 1j * s2 * aj
                view[:, j, :] = -1j * s2 * ai + c2 * aj
    return psi


def qaoa_xy_simulate(
    problem: TspInstance | BinaryPolynomial,
    beta,
    gamma,
    k: int | None = None,
    a: float | None = None,
    b: float | None = None,
    cap: int = 6 ** 6,
    l_star: float | None = None,
) -> OutputDistribution:
    """One-hot-preserving circuit simulated in the k**k block subspace.

    For a tour instance the diagonal cost is the one-hot objective
    restricted to the subspace: A * walk length + B * sum_loc (1 - uses)^2
    (the per-slot one-hot penalty vanishes identically).  A generic
    polynomial over k*k variables is evaluated directly on the embedded
    one-hot basis states.  The initial state, a product of W states, is
    uniform over the subspace, and no mass ever leaves it.
    """
    beta, gamma = _check_schedule(beta, gamma)
    if isinstance(problem, TspInstance):
        k = problem.k
        size = k ** k
        if size > cap:
            raise SizeCapError(f"one-hot basis size {size} exceeds cap {cap}")
        a_default, b_default = forms.tsp_default_penalties(problem)
        a = a_default if a is None else a
        b = b_default if b is None else b
        costs, lengths, feasible = _onehot_digit_tables(problem, a, b)
        if l_star is None:
            l_star = tsp_exhaustive(problem).optimal_length
        psi = _xy_circuit(costs, k, beta, gamma)
        probs = np.abs(psi) ** 2
        optimal = feasible & (lengths <= l_star + 1e-9)
        return OutputDistribution(
            basis="onehot",
            probabilities=probs,
            amplitudes=psi,
            costs=costs,
            p_star=float(probs[optimal].sum()),
            num_qubits=k * k,
            k=k,
            feasible=feasible,
            lengths=lengths,
        )
    if k is None:
        raise ValueError("k (block count) is required for a generic polynomial")
    if problem.num_vars != k * k:
        raise ValueError(
            f"polynomial has {problem.num_vars} variables, expected k*k = {k * k}"
        )
    size = k ** k
    if size > cap:
        raise SizeCapError(f"one-hot basis size {size} exceeds cap {cap}")
    idx = np.arange(size, dtype=np.int64)
    digits = [((idx // (k ** t)) % k).astype(np.int16) for t in range(k)]
    costs = np.full(size, problem.constant)
    for term, coeff in problem.terms.items():
        if not term:
            continue
        sel = np.ones(size, dtype=bool)
        for var in term:
            sel &= digits[var // k] == (var % k)
        costs[sel] += coeff
    psi = _xy_circuit(costs, k, beta, gamma)
    probs = np.abs(psi) ** 2
    return OutputDistribution(
        basis="onehot",
        probabilities=probs,
        amplitudes=psi,
        costs=costs,
        p_star=_p_star(probs, costs),
        num_qubits=k * k,
        k=k,
    )


def onehot_state_index(sequence, k: int) -> int:
    """Subspace index of the one-hot state visiting ``sequence`` (1-based locs)."""
    return sum((loc - 1) * (k ** slot) for slot, loc in enumerate(sequence))


def embed_onehot_state(amplitudes: np.ndarray, k: int) -> np.ndarray:
    """Lift a k**k subspace vector into the full 2**(k*k) statevector."""
    full = np.zeros(1 << (k * k), dtype=np.complex128)
    for index in range(amplitudes.size):
        bits = 0
        rest = index
        for slot in range(k):
            digit = rest % k
            rest //= k
            bits |= 1 << (slot * k + digit)
        full[bits] = amplitudes[index]
    return full


# ----------------------------------------------------------------------
# Permutation-basis circuits (perm)
# ----------------------------------------------------------------------

def qaoa_perm_simulate(
    inst: TspInstance,
    beta,
    gamma,
    a: float | None = None,
    cap: int = math.factorial(9),
    l_star: float | None = None,
) -> OutputDistribution:
    """Projector-mixer circuit over the k! feasible permutations.

    The mixer exp(-i * beta |s><s|) acts analytically:
    psi <- psi + (exp(-i*beta) - 1) <s|psi> s with s the uniform
    permutation state, so no infeasible state can ever be reached.
    """
    beta, gamma = _check_schedule(beta, gamma)
    k = inst.k
    size = math.factorial(k)
    if size > cap:
        raise SizeCapError(f"permutation basis size {size} exceeds cap {cap}")
    if a is None:
        a = forms.tsp_default_penalties(inst)[0]
    perms = np.array(list(itertools.permutations(range(1, k + 1))), dtype=np.int16)
    d = inst.distances
    lengths = d[0, perms[:, 0]].copy()
    for t in range(k - 1):
        lengths += d[perms[:, t], perms[:, t + 1]]
    lengths += d[perms[:, k - 1], 0]
    costs = a * lengths
    if l_star is None:
        l_star = float(lengths.min())
    psi = np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)
    for b, g in zip(beta, gamma):
        psi *= np.exp(-1j * g * costs)
        psi += (np.exp(-1j * b) - 1.0) * psi.sum() / size
    probs = np.abs(psi) ** 2
    return OutputDistribution(
        basis="perm",
        probabilities=probs,
        amplitudes=psi,
        costs=costs,
        p_star=float(probs[lengths <= l_star + 1e-9].sum()),
        k=k,
        feasible=np.ones(size, dtype=bool),
        lengths=lengths,
    )


# ----------------------------------------------------------------------
# TSP dispatch and full-space one-hot decoding
# ----------------------------------------------------------------------

def _onehot_fullspace_tables(inst: TspInstance) -> tuple[np.ndarray, np.ndarray]:
    """(lengths, feasible) over all 2**(k*k) states of the one-hot encoding."""
    k = inst.k
    n = k * k
    idx = np.arange(1 << n, dtype=np.int64)
    block_mask = (1 << k) - 1
    position = np.full(1 << k, -1, dtype=np.int16)
    for i in range(k):
        position[1 << i] = i
    d = inst.distances
    lengths = np.zeros(idx.size)
    decodable = np.ones(idx.size, dtype=bool)
    locs = []
    for slot in range(k):
        block = (idx >> (slot * k)) & block_mask
        loc0 = position[block]
        decodable &= loc0 >= 0
        locs.append(np.where(loc0 >= 0, loc0, 0).astype(np.int16) + 1)
    lengths += d[0, locs[0]]
    for t in range(k - 1):
        lengths += d[locs[t], locs[t + 1]]
    lengths += d[locs[k - 1], 0]
    lengths[~decodable] = np.nan
    permutation = decodable.copy()
    for loc in range(1, k + 1):
        count = np.zeros(idx.size, dtype=np.int16)
        for arr in locs:
            count += (arr == loc).astype(np.int16)
        permutation &= count == 1
    return lengths, permutation


def qaoa_tsp_simulate(
    inst: TspInstance,
    kind: str,
    beta,
    gamma,
    a: float | None = None,
    b: float | None = None,
    l_star: float | None = None,
) -> OutputDistribution:
    """Run one of the four tour encodings: qubo, hobo, xy or perm."""
    if kind == "hobo":
        return qaoa_hobo_tsp_simulate(inst, beta, gamma, a=a, b=b, l_star=l_star)
    if kind == "xy":
        return qaoa_xy_simulate(inst, beta, gamma, a=a, b=b, l_star=l_star)
    if kind == "perm":
        return qaoa_perm_simulate(inst, beta, gamma, a=a, l_star=l_star)
    if kind != "qubo":
        raise ValueError(f"unknown encoding kind {kind!r}")
    poly = forms.tsp_onehot_qubo(inst, a=a, b=b)
    if l_star is None:
        l_star = tsp_exhaustive(inst).optimal_length
    dist = qaoa_qubo_simulate(poly, beta, gamma)
    lengths, feasible = _onehot_fullspace_tables(inst)
    dist.lengths = lengths
    dist.feasible = feasible
    dist.k = inst.k
    optimal = feasible & (np.nan_to_num(lengths, nan=np.inf) <= l_star + 1e-9)
    dist.p_star = float(dist.probabilities[optimal].sum())
    return dist


@dataclass
class QaoaAnsatz:
    """One configured circuit: encoding kind, problem binding and schedule."""

    kind: str
    depth: int
    problem: BinaryPolynomial | TspInstance
    beta: np.ndarray
    gamma: np.ndarray

    def __post_init__(self) -> None:
        self.beta = np.atleast_1d(np.asarray(self.beta, dtype=np.float64))
        self.gamma = np.atleast_1d(np.asarray(self.gamma, dtype=np.float64))
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.beta.size != self.depth or self.gamma.size != self.depth:
            raise ValueError("schedule lengths must equal the depth")

    def simulate(self) -> OutputDistribution:
        if isinstance(self.problem, TspInstance):
            return qaoa_tsp_simulate(self.problem, self.kind, self.beta, self.gamma)
        if self.kind != "qubo":
            raise ValueError(f"kind {self.kind!r} requires a tour instance")
        return qaoa_qubo_simulate(self.problem, self.beta, self.gamma)


# ----------------------------------------------------------------------
# Parameter generator
# ----------------------------------------------------------------------

@dataclass
class GeneratorParams:
    """Polynomial coefficients generating a depth-p schedule from few numbers."""

    theta_beta: np.ndarray
    theta_gamma: np.ndarray

    def __post_init__(self) -> None:
        self.theta_beta = np.atleast_1d(np.asarray(self.theta_beta, dtype=np.float64))
        self.theta_gamma = np.atleast_1d(np.asarray(self.theta_gamma, dtype=np.float64))
        if self.theta_beta.size != self.theta_gamma.size or self.theta_beta.size < 1:
            raise ValueError("theta vectors must share a fixed nonzero length")

    @classmethod
    def ramp(cls, degree: int = 4) -> "GeneratorParams":
        """Coefficients of the linear ramp beta_i = 1 - i/p, gamma_i = i/p."""
        theta_beta = np.zeros(degree + 1)
        theta_gamma = np.zeros(degree + 1)
        theta_beta[0] = 1.0
        theta_beta[1] = -1.0
        theta_gamma[1] = 1.0
        return cls(theta_beta, theta_gamma)


def expand_generator(gp: GeneratorParams, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the generator polynomial at i/p for i = 1..p.

    beta_i = sum_d theta_beta[d] * (i/p)**d, likewise gamma.
    """
    if p < 1:
        raise ValueError(f"depth must be >= 1, got {p}")
    x = np.arange(1, p + 1) / p
    powers = np.vander(x, gp.theta_beta.size, increasing=True)
    return powers @ gp.theta_beta, powers @ gp.theta_gamma


# ----------------------------------------------------------------------
# Generator training
# ----------------------------------------------------------------------

class _BudgetExhausted(Exception):
    pass


@dataclass
class TrainResult:
    params: GeneratorParams
    objective: float
    evaluations: int
    budget_exhausted: bool


class _CompiledProblem:
    """Static per-problem data so repeated schedule evaluations stay cheap."""

    def __init__(self, kind: str, problem) -> None:
        self.kind = kind
        if kind == "qubo" and isinstance(problem, MaxCutInstance):
            problem = forms.maxcut_qubo(problem)
        if kind == "qubo" and isinstance(problem, BinaryPolynomial):
            self.costs = problem.cost_vector()
            self.num_qubits = problem.num_vars
            self.k = None
        elif isinstance(problem, TspInstance):
            a, b = forms.tsp_default_penalties(problem)
            self.k = problem.k
            if kind == "qubo":
                poly = forms.tsp_onehot_qubo(problem, a=a, b=b)
                self.costs = poly.cost_vector()
                self.num_qubits = poly.num_vars
            elif kind == "hobo":
                self.costs = _hobo_tables(problem, a, b)[0]
                self.num_qubits = forms.hobo_num_vars(self.k)
            elif kind == "xy":
                self.costs = _onehot_digit_tables(problem, a, b)[0]
                self.num_qubits = None
            elif kind == "perm":
                dist = qaoa_perm_simulate(problem, [0.0], [0.0], a=a)
                self.costs = dist.costs
                self.num_qubits = None
            else:
                raise ValueError(f"unknown encoding kind {kind!r}")
        else:
            raise TypeError(f"cannot compile {type(problem).__name__} for kind {kind!r}")
        self.reference = float(self.costs.min())
        if self.reference == 0.0:
            raise ValueError("problem has zero optimal cost; ratios are undefined")

    def expected_cost(self, beta: np.ndarray, gamma: np.ndarray) -> float:
        if self.kind in ("qubo", "hobo"):
            psi = _transverse_circuit(self.costs, self.num_qubits, beta, gamma)
        elif self.kind == "xy":
            psi = _xy_circuit(self.costs, self.k, beta, gamma)
        else:
            size = self.costs.size
            psi = np.full(size, 1.0 / math.sqrt(size), dtype=np.complex128)
            for b, g in zip(beta, gamma):
                psi *= np.exp(-1j * g * self.costs)
                psi += (np.exp(-1j * b) - 1.0) * psi.sum() / size
        probs = np.abs(psi) ** 2
        return float(probs @ self.costs)

    def gap(self, beta: np.ndarray, gamma: np.ndarray) -> float:
        """Normalized optimality gap; equals 1 - r for negative optima."""
        return (self.expected_cost(beta, gamma) - self.reference) / abs(self.reference)


def train_generator(
    train_set,
    kind: str,
    p: int,
    init: GeneratorParams | None = None,
    budget: int = 5000,
    seed: int | None = 0,
    random_restarts: int = 4,
    fd_step: float = 1e-4,
) -> TrainResult:
    """Fit generator coefficients by minimizing the mean optimality gap.

    Runs a quasi-Newton (L-BFGS-B) search with central-difference gradients
    from the given start (the linear ramp by default) plus
    ``random_restarts`` seeded random starts, and returns the best
    coefficients seen anywhere.  ``budget`` caps the total number of
    objective evaluations; exhausting it stops the search and flags the
    result.
    """
    if init is None:
        init = GeneratorParams.ramp()
    degree_len = init.theta_beta.size
    compiled = [_CompiledProblem(kind, problem) for problem in train_set]
    if not compiled:
        raise ValueError("training set is empty")

    state = {"evals": 0, "best_value": np.inf, "best_theta": None, "exhausted": False}

    def objective(theta: np.ndarray) -> float:
        if state["evals"] >= budget:
            state["exhausted"] = True
            raise _BudgetExhausted
        state["evals"] += 1
        gp = GeneratorParams(theta[:degree_len], theta[degree_len:])
        beta, gamma = expand_generator(gp, p)
        value = float(np.mean([prob.gap(beta, gamma) for prob in compiled]))
        if value < state["best_value"]:
            state["best_value"] = value
            state["best_theta"] = theta.copy()
        return value

    def gradient(theta: np.ndarray) -> np.ndarray:
        grad = np.zeros_like(theta)
        for i in range(theta.size):
            shift = np.zeros_like(theta)
            shift[i] = fd_step
            grad[i] = (objective(theta + shift) - objective(theta - shift)) / (2 * fd_step)
        return grad

    rng = make_rng(seed)
    starts = [np.concatenate([init.theta_beta, init.theta_gamma])]
    for _ in range(random_restarts):
        starts.append(rng.uniform(-1.0, 1.0, 2 * degree_len))
    for theta0 in starts:
        try:
            minimize(objective, theta0, jac=gradient, method="L-BFGS-B",
                     options={"maxiter": 200})
        except _BudgetExhausted:
            break
    theta = state["best_theta"]
    params = GeneratorParams(theta[:degree_len], theta[degree_len:])
    return TrainResult(
        params=params,
        objective=state["best_value"],
        evaluations=state["evals"],
        budget_exhausted=state["exhausted"],
    )


# ----------------------------------------------------------------------
# Layer accounting
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LayerLedger:
    """CNOT-layer counts of one circuit family at a given depth.

    ``None`` entries mark constructions whose exact layer count is not
    available (the permutation mixer); asking such a ledger for a total
    raises :class:`LayerCountUnavailable`.
    """

    kind: str
    qubit_count: int
    state_prep_layers: int | None
    cost_layers_per_round: int
    mixer_layers_per_round: int | None
    depth: int

    @property
    def total_layers(self) -> int:
        if self.state_prep_layers is None or self.mixer_layers_per_round is None:
            raise LayerCountUnavailable(
                f"{self.kind}: total CNOT layers are not available without a full"
                " circuit construction"
            )
        return self.state_prep_layers + self.depth * (
            self.cost_layers_per_round + self.mixer_layers_per_round
        )


def layer_ledger(kind: str, problem, depth: int) -> LayerLedger:
    """CNOT-layer estimate for a circuit family.

    Tour encodings (``problem`` a TspInstance or the integer k): cost
    layers per round are 8k (qubo), 2k^3 (hobo), 6k (xy), 4k (perm); the xy
    state preparation needs 4*ceil(log2 k) layers and its mixer 8 layers
    plus 4 for the wrap pair when k is odd.  The permutation mixer's
    preparation and mixing counts are unavailable.

    Max-Cut (``kind="maxcut"``, ``problem`` a MaxCutInstance): each
    cost round needs two CNOT layers per edge-color class of the graph
    (one ZZ rotation per edge, classes at most max degree + 1); the
    single-qubit mixer contributes none.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if kind == "maxcut":
        if not isinstance(problem, MaxCutInstance):
            raise TypeError("maxcut ledger needs a MaxCutInstance")
        classes = len(set(edge_coloring(problem).values())) if problem.edges else 0
        return LayerLedger(
            kind="maxcut",
            qubit_count=problem.num_nodes,
            state_prep_layers=0,
            cost_layers_per_round=2 * classes,
            mixer_layers_per_round=0,
            depth=depth,
        )
    k = problem.k if isinstance(problem, TspInstance) else int(problem)
    if k < 2:
        raise ValueError(f"need k >= 2, got {k}")
    log_k = math.ceil(math.log2(k))
    if kind == "qubo":
        return LayerLedger("qubo", k * k, 0, 8 * k, 0, depth)
    if kind == "hobo":
        return LayerLedger("hobo", k * log_k, 0, 2 * k ** 3, 0, depth)
    if kind == "xy":
        mixer = 8 + (4 if k % 2 == 1 else 0)
        return LayerLedger("xy", k * k, 4 * log_k, 6 * k, mixer, depth)
    if kind == "perm":
        return LayerLedger("perm", k * k, None, 4 * k, None, depth)
    raise ValueError(f"unknown encoding kind {kind!r}")


def tts_layers(dist: OutputDistribution, ledger: LayerLedger,
               target: float = 0.99) -> float:
    """Expected CNOT layers until the optimum is sampled at the target confidence.

    total_layers * ceil(log(1 - target) / log(1 - p_star)); a certain hit
    costs exactly one shot, a zero hit probability costs infinity.
    """
    total = ledger.total_layers
    p = dist.p_star
    if p <= 0.0:
        return math.inf
    if p >= 1.0:
        return float(total)
    repetitions = math.ceil(math.log(1.0 - target) / math.log1p(-p))
    return float(total * max(1, repetitions))


# ----------------------------------------------------------------------
# Edge coloring (Misra & Gries style, at most max degree + 1 classes)
# ----------------------------------------------------------------------

def edge_coloring(inst: MaxCutInstance) -> dict[tuple[int, int], int]:
    """Proper edge coloring with at most (max degree + 1) colors.

    Implements the fan-and-path recoloring construction behind Vizing's
    bound: color an uncolored edge by building a maximal fan, inverting an
    alternating two-color path, and rotating a fan prefix.  Colors are
    integers starting at 0; incident edges never share one.
    """
    adjacency: dict[int, list[int]] = {u: [] for u in range(inst.num_nodes)}
    for u, v, _ in inst.edges:
        adjacency[u].append(v)
        adjacency[v].append(u)
    max_degree = max((len(a) for a in adjacency.values()), default=0)
    palette = max_degree + 1
    color: dict[tuple[int, int], int] = {}
    used: list[dict[int, int]] = [dict() for _ in range(inst.num_nodes)]

    def key(x: int, y: int) -> tuple[int, int]:
        return (x, y) if x < y else (y, x)

    def set_color(x: int, y: int, c: int) -> None:
        color[key(x, y)] = c
        used[x][c] = y
        used[y][c] = x

    def unset_color(x: int, y: int) -> None:
        c = color.pop(key(x, y))
        del used[x][c]
        del used[y][c]

    def free_color(x: int) -> int:
        for c in range(palette):
            if c not in used[x]:
                return c
        raise AssertionError("no free color within max degree + 1 palette")

    def invert_path(start: int, c: int, d: int) -> None:
        # Walk the unique path of edges alternately colored d, c, ... from
        # start and swap the two colors along it.
        current = start
        want = d
        path = []
        while want in used[current]:
            nxt = used[current][want]
            path.append((current, nxt, want))
            current = nxt
            want = c if want == d else d
        for x, y, _ in path:
            unset_color(x, y)
        for x, y, old in path:
            set_color(x, y, c if old == d else d)

    for u, v, _ in inst.edges:
        fan = [v]
        in_fan = {v}
        while True:
            last = fan[-1]
            extended = False
            for w in sorted(adjacency[u]):
                if w in in_fan or key(u, w) not in color:
                    continue
                if color[key(u, w)] not in used[last]:
                    fan.append(w)
                    in_fan.add(w)
                    extended = True
                    break
            if not extended:
                break
        c = free_color(u)
        d = free_color(fan[-1])
        if d in used[u]:
            invert_path(u, c, d)
        # Find the shortest fan prefix whose end has d free (the inversion
        # may have broken longer prefixes).
        target_index = None
        for i, w in enumerate(fan):
            if i > 0 and key(u, fan[i]) in color and color[key(u, fan[i])] in used[fan[i - 1]]:
                break
            if d not in used[w]:
                target_index = i
                break
        assert target_index is not None, "fan rotation target must exist"
        shifted = [color[key(u, fan[j + 1])] for j in range(target_index)]
        for j in range(target_index):
            unset_color(u, fan[j + 1])
        for j in range(target_index):
            set_color(u, fan[j], shifted[j])
        set_color(u, fan[target_index], d)
    return color
