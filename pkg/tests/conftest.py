"""Shared fixtures and independent oracles used across the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from optbench import MaxCutInstance, TspInstance


@pytest.fixture
def triangle() -> MaxCutInstance:
    return MaxCutInstance(3, ((0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)))


@pytest.fixture
def four_cycle() -> MaxCutInstance:
    return MaxCutInstance(4, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)))


@pytest.fixture
def five_cycle() -> MaxCutInstance:
    return MaxCutInstance(
        5, ((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (0, 4, 1.0))
    )


@pytest.fixture
def unit_square() -> TspInstance:
    """Four locations on the unit circle at right angles (a rotated square)."""
    coords = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    diff = coords[:, None, :] - coords[None, :, :]
    return TspInstance(distances=np.sqrt((diff ** 2).sum(-1)), coordinates=coords)


def brute_force_cut(inst: MaxCutInstance) -> tuple[str, float]:
    """Independent max-cut oracle: enumerate every bipartition."""
    best_x, best_cut = None, -np.inf
    for bits in itertools.product("01", repeat=inst.num_nodes):
        x = "".join(bits)
        cut = sum(w for u, v, w in inst.edges if x[u] != x[v])
        if cut > best_cut:
            best_x, best_cut = x, cut
    return best_x, float(best_cut)


def brute_force_tours(inst: TspInstance) -> dict[tuple[int, ...], float]:
    """Independent tour oracle: closed-walk length of every fixed-start order."""
    k = inst.num_locations - 1
    d = inst.distances
    out = {}
    for perm in itertools.permutations(range(1, k + 1)):
        length = d[0, perm[0]] + d[perm[-1], 0]
        length += sum(d[perm[i], perm[i + 1]] for i in range(k - 1))
        out[perm] = float(length)
    return out


# ----------------------------------------------------------------------
# Dense full-space circuit oracle (independent of the package simulators)
# ----------------------------------------------------------------------

def dense_uniform(n: int) -> np.ndarray:
    return np.full(1 << n, 1.0 / np.sqrt(1 << n), dtype=np.complex128)


def dense_phase(psi: np.ndarray, costs: np.ndarray, gamma: float) -> np.ndarray:
    return psi * np.exp(-1j * gamma * costs)


def dense_single_qubit(psi: np.ndarray, n: int, qubit: int, gate: np.ndarray) -> np.ndarray:
    """Apply a 2x2 gate to one qubit (variable `qubit` = bit `qubit`)."""
    out = psi.copy()
    stride = 1 << qubit
    for base in range(1 << n):
        if base & stride:
            continue
        a0, a1 = psi[base], psi[base | stride]
        out[base] = gate[0, 0] * a0 + gate[0, 1] * a1
        out[base | stride] = gate[1, 0] * a0 + gate[1, 1] * a1
    return out


def dense_two_qubit(psi: np.ndarray, n: int, q1: int, q2: int,
                    gate4: np.ndarray) -> np.ndarray:
    """Apply a 4x4 gate on (q1, q2); basis order |q2 q1> = 00, 01, 10, 11."""
    out = np.zeros_like(psi)
    s1, s2 = 1 << q1, 1 << q2
    for base in range(1 << n):
        if base & s1 or base & s2:
            continue
        idx = [base, base | s1, base | s2, base | s1 | s2]
        amp = np.array([psi[i] for i in idx])
        new = gate4 @ amp
        for i, value in zip(idx, new):
            out[i] = value
    return out


def dense_xy_gate(beta: float) -> np.ndarray:
    """exp(-i beta (XX + YY)) in the |q2 q1> in {00, 01, 10, 11} basis."""
    c2, s2 = np.cos(2 * beta), np.sin(2 * beta)
    gate = np.eye(4, dtype=np.complex128)
    gate[1, 1] = c2
    gate[2, 2] = c2
    gate[1, 2] = -1j * s2
    gate[2, 1] = -1j * s2
    return gate
