"""Problem formulations: cost polynomials, penalties, and state decoding.

Everything is a minimization problem.  Max-Cut is stored as the negated
cut weight, so optimal costs are negative; TSP encodings carry positive
penalized costs.

TSP one-hot layout: with location 0 fixed as the tour start, the k
remaining tour slots are encoded slot-major into k blocks of k bits.
Variable ``slot * k + (loc - 1)`` is 1 when tour slot ``slot`` (0-based)
holds location ``loc`` (1-based).  A block that is one-hot therefore names
the location visited at that slot.

TSP integer (HOBO) layout: each of the k slots holds a ceil(log2 k)-bit
integer, least significant bit first, naming location value+1.  Values >= k
are range violations; for cost evaluation the named location wraps modulo k
so every basis state still has a defined walk length.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .instances import MaxCutInstance, TspInstance
from .model import BinaryPolynomial, _as_bits


# ----------------------------------------------------------------------
# Max-Cut
# ----------------------------------------------------------------------

def maxcut_qubo(inst: MaxCutInstance) -> BinaryPolynomial:
    """Negated-cut objective: C(x) = sum_{(i,j) in E} (2 x_i x_j - x_i - x_j) w_ij."""
    terms: dict[tuple[int, ...], float] = {}
    for u, v, w in inst.edges:
        terms[(u, v)] = terms.get((u, v), 0.0) + 2.0 * w
        terms[(u,)] = terms.get((u,), 0.0) - w
        terms[(v,)] = terms.get((v,), 0.0) - w
    return BinaryPolynomial(inst.num_nodes, terms)


def cut_weight(inst: MaxCutInstance, x: str | Sequence[int] | np.ndarray) -> float:
    """Total weight of edges crossing the bipartition."""
    bits = _as_bits(x, inst.num_nodes)
    return float(sum(w for u, v, w in inst.edges if bits[u] != bits[v]))


# ----------------------------------------------------------------------
# TSP shared pieces
# ----------------------------------------------------------------------

def tsp_default_penalties(inst: TspInstance) -> tuple[float, float]:
    """Penalty pair (A, B) with B = 1 and A = 1 / (1 + max distance)."""
    return 1.0 / (1.0 + inst.max_distance()), 1.0


def tour_length(inst: TspInstance, sequence: Sequence[int]) -> float:
    """Length of the closed walk 0 -> sequence -> 0.

    ``sequence`` lists the locations of slots 1..k in order; entries may
    repeat (the walk is still defined, repeats contribute zero legs).
    """
    d = inst.distances
    length = d[0, sequence[0]]
    for a, b in zip(sequence, sequence[1:]):
        length += d[a, b]
    return float(length + d[sequence[-1], 0])


def is_permutation(sequence: Sequence[int], k: int) -> bool:
    return sorted(sequence) == list(range(1, k + 1))


# ----------------------------------------------------------------------
# One-hot encoding (k*k binary variables)
# ----------------------------------------------------------------------

def onehot_index(k: int, slot: int, loc: int) -> int:
    """Variable index of x[slot, loc]: slot 0-based in 0..k-1, loc 1-based."""
    return slot * k + (loc - 1)


def tsp_onehot_qubo(
    inst: TspInstance, a: float | None = None, b: float | None = None
) -> BinaryPolynomial:
    """One-hot TSP objective over k*k variables.

    C(x) = A * sum_i d_0i (x_{i,1} + x_{i,k})
         + A * sum_{i,j} d_ij sum_t x_{i,t} x_{j,t+1}
         + B * sum_t (1 - sum_i x_{i,t})^2
         + B * sum_i (1 - sum_t x_{i,t})^2
    """
    k = inst.k
    d = inst.distances
    a_default, b_default = tsp_default_penalties(inst)
    a = a_default if a is None else a
    b = b_default if b is None else b
    terms: dict[tuple[int, ...], float] = {}

    def add(key: tuple[int, ...], coeff: float) -> None:
        terms[key] = terms.get(key, 0.0) + coeff

    for loc in range(1, k + 1):
        add((onehot_index(k, 0, loc),), a * d[0, loc])
        add((onehot_index(k, k - 1, loc),), a * d[loc, 0])
    for slot in range(k - 1):
        for loc_i in range(1, k + 1):
            for loc_j in range(1, k + 1):
                if d[loc_i, loc_j] == 0.0:
                    continue
                u = onehot_index(k, slot, loc_i)
                v = onehot_index(k, slot + 1, loc_j)
                add(tuple(sorted((u, v))), a * d[loc_i, loc_j])
    # (1 - sum x)^2 = 1 - sum x + 2 * sum_{pairs} x x  after x^2 = x
    for slot in range(k):
        add((), b)
        for loc in range(1, k + 1):
            add((onehot_index(k, slot, loc),), -b)
        for loc_i in range(1, k + 1):
            for loc_j in range(loc_i + 1, k + 1):
                add((onehot_index(k, slot, loc_i), onehot_index(k, slot, loc_j)), 2.0 * b)
    for loc in range(1, k + 1):
        add((), b)
        for slot in range(k):
            add((onehot_index(k, slot, loc),), -b)
        for s1 in range(k):
            for s2 in range(s1 + 1, k):
                add(tuple(sorted((onehot_index(k, s1, loc), onehot_index(k, s2, loc)))), 2.0 * b)
    return BinaryPolynomial(k * k, terms)


def decode_onehot(x: str | Sequence[int] | np.ndarray, k: int) -> tuple[int, ...] | None:
    """Slot sequence of a one-hot encoded state, or None if a block is not one-hot.

    The returned sequence may repeat locations; full feasibility also
    requires it to be a permutation of 1..k.
    """
    bits = _as_bits(x, k * k)
    sequence = []
    for slot in range(k):
        block = bits[slot * k:(slot + 1) * k]
        if block.sum() != 1:
            return None
        sequence.append(int(np.flatnonzero(block)[0]) + 1)
    return tuple(sequence)


def onehot_feasible(x: str | Sequence[int] | np.ndarray, k: int) -> bool:
    seq = decode_onehot(x, k)
    return seq is not None and is_permutation(seq, k)


def encode_onehot(sequence: Sequence[int], k: int) -> str:
    """Bitstring with slot t's block hot at position sequence[t] - 1."""
    bits = ["0"] * (k * k)
    for slot, loc in enumerate(sequence):
        bits[onehot_index(k, slot, loc)] = "1"
    return "".join(bits)


# ----------------------------------------------------------------------
# Integer (HOBO) encoding (k * ceil(log2 k) binary variables)
# ----------------------------------------------------------------------

def hobo_bits_per_slot(k: int) -> int:
    return max(1, math.ceil(math.log2(k)))


def hobo_num_vars(k: int) -> int:
    return k * hobo_bits_per_slot(k)


def decode_hobo(x: str | Sequence[int] | np.ndarray, k: int) -> tuple[int, ...]:
    """Raw slot integers (LSB-first within each slot), length k."""
    m = hobo_bits_per_slot(k)
    bits = _as_bits(x, k * m)
    values = []
    for slot in range(k):
        v = 0
        for j in range(m):
            v |= int(bits[slot * m + j]) << j
        values.append(v)
    return tuple(values)


def hobo_violations(values: Sequence[int], k: int) -> tuple[int, int]:
    """(range violations, uniqueness violations) of raw slot integers.

    Range: one per slot whose integer is >= k.  Uniqueness: one per
    unordered slot pair naming the same location after the modulo-k wrap.
    """
    range_count = sum(1 for v in values if v >= k)
    locs = [v % k for v in values]
    pair_count = 0
    for i in range(len(locs)):
        for j in range(i + 1, len(locs)):
            if locs[i] == locs[j]:
                pair_count += 1
    return range_count, pair_count


def hobo_feasible(x: str | Sequence[int] | np.ndarray, k: int) -> bool:
    values = decode_hobo(x, k)
    r, p = hobo_violations(values, k)
    return r == 0 and p == 0


def hobo_cost(
    inst: TspInstance,
    x: str | Sequence[int] | np.ndarray,
    a: float | None = None,
    b: float | None = None,
) -> float:
    """A * walk length of the wrapped slot sequence + B per violation."""
    k = inst.k
    a_default, b_default = tsp_default_penalties(inst)
    a = a_default if a is None else a
    b = b_default if b is None else b
    values = decode_hobo(x, k)
    sequence = [v % k + 1 for v in values]
    r, p = hobo_violations(values, k)
    return a * tour_length(inst, sequence) + b * (r + p)


def encode_hobo(sequence: Sequence[int], k: int) -> str:
    """Bitstring whose slot integers name the given locations (1..k)."""
    m = hobo_bits_per_slot(k)
    bits = ["0"] * (k * m)
    for slot, loc in enumerate(sequence):
        v = loc - 1
        for j in range(m):
            if (v >> j) & 1:
                bits[slot * m + j] = "1"
    return "".join(bits)
