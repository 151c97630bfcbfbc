"""Binary optimization models shared by every solver.

Cost functions are sparse multilinear polynomials over variables
x_i in {0, 1}: degree <= 2 covers QUBO objectives, arbitrary degree covers
higher-order (HOBO) objectives.  The equivalent spin form substitutes
s_i = 1 - 2 x_i with s_i in {-1, +1}.

Bitstring convention, fixed once here and used package-wide: a bitstring is
a str of '0'/'1' characters where position i holds variable i.  Variable 0
sits at the least significant bit of the canonical integer encoding, i.e.
basis index b = sum_i x_i * 2**i.  Simulators, file emitters and the
exhaustive oracle all follow this layout.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class DimensionError(ValueError):
    """Assignment or sample-set length does not match the model."""


class DegreeError(ValueError):
    """Operation requires a lower polynomial degree than the model has."""


class SizeCapError(ValueError):
    """Problem exceeds the configured exhaustive/simulation size cap."""


def _as_bits(x: str | Sequence[int] | np.ndarray, num_vars: int) -> np.ndarray:
    """Validate an assignment and return it as a uint8 array of 0/1."""
    if isinstance(x, str):
        if len(x) != num_vars:
            raise DimensionError(
                f"assignment has length {len(x)}, model has {num_vars} variables"
            )
        bits = np.frombuffer(x.encode("ascii"), dtype=np.uint8) - ord("0")
        if not np.all(bits <= 1):
            raise ValueError(f"bitstring must contain only '0'/'1': {x!r}")
        return bits
    bits = np.asarray(x, dtype=np.uint8)
    if bits.ndim != 1 or bits.size != num_vars:
        raise DimensionError(
            f"assignment has length {bits.size}, model has {num_vars} variables"
        )
    if not np.all(bits <= 1):
        raise ValueError("assignment entries must be 0 or 1")
    return bits


def bits_to_string(bits: Sequence[int] | np.ndarray) -> str:
    return "".join("1" if b else "0" for b in bits)


def index_to_bitstring(index: int, num_vars: int) -> str:
    """Bitstring of a canonical basis index (variable 0 = least significant bit)."""
    return "".join("1" if (index >> i) & 1 else "0" for i in range(num_vars))


def bitstring_to_index(x: str) -> int:
    return int(x[::-1], 2) if x else 0


class BinaryPolynomial:
    """Sparse multilinear polynomial over binary variables.

    C(x) = sum over terms of coeff * prod_{i in term} x_i, with the empty
    term holding the constant.  Index tuples are sorted and deduplicated at
    construction (x_i^2 = x_i), zero coefficients are dropped.
    """

    __slots__ = ("num_vars", "terms")

    def __init__(
        self, num_vars: int, terms: Mapping[tuple[int, ...] | Iterable[int], float] | None = None
    ) -> None:
        if num_vars < 0:
            raise ValueError(f"num_vars must be >= 0, got {num_vars}")
        self.num_vars = int(num_vars)
        normalized: dict[tuple[int, ...], float] = {}
        for key, coeff in (terms or {}).items():
            idx = tuple(sorted(set(int(i) for i in key)))
            for i in idx:
                if not 0 <= i < self.num_vars:
                    raise ValueError(f"variable index {i} out of range [0, {self.num_vars})")
            normalized[idx] = normalized.get(idx, 0.0) + float(coeff)
        self.terms: dict[tuple[int, ...], float] = {
            k: v for k, v in normalized.items() if v != 0.0
        }

    @property
    def degree(self) -> int:
        return max((len(t) for t in self.terms), default=0)

    @property
    def constant(self) -> float:
        return self.terms.get((), 0.0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, BinaryPolynomial):
            return NotImplemented
        return self.num_vars == other.num_vars and self.terms == other.terms

    def __repr__(self) -> str:
        return f"BinaryPolynomial(num_vars={self.num_vars}, terms={len(self.terms)})"

    def evaluate(self, x: str | Sequence[int] | np.ndarray) -> float:
        """Cost of one assignment: sum of coeff * prod of selected bits."""
        bits = _as_bits(x, self.num_vars)
        total = 0.0
        for term, coeff in self.terms.items():
            if all(bits[i] for i in term):
                total += coeff
        return total

    def evaluate_batch(self, X: np.ndarray) -> np.ndarray:
        """Vectorised evaluation of a (num_samples, num_vars) 0/1 array."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.num_vars:
            raise DimensionError(
                f"batch shape {X.shape} does not match {self.num_vars} variables"
            )
        costs = np.full(X.shape[0], 0.0)
        for term, coeff in self.terms.items():
            if term:
                sel = X[:, term[0]].astype(np.float64)
                for i in term[1:]:
                    sel = sel * X[:, i]
                costs += coeff * sel
            else:
                costs += coeff
        return costs

    def cost_vector(self, start: int = 0, stop: int | None = None) -> np.ndarray:
        """Costs of all basis states in [start, stop), indexed canonically.

        Memory scales with the range; the full vector holds 2**num_vars
        float64 entries.
        """
        if stop is None:
            stop = 1 << self.num_vars
        idx = np.arange(start, stop, dtype=np.uint64)
        costs = np.full(idx.size, self.terms.get((), 0.0))
        for term, coeff in self.terms.items():
            if not term:
                continue
            mask = np.uint64(sum(1 << i for i in term))
            costs[(idx & mask) == mask] += coeff
        return costs

    def argmin_exhaustive(self, cap: int = 26) -> tuple[str, float]:
        """Globally minimal assignment by full enumeration.

        Ties are broken by lexicographically smallest bitstring (exact float
        cost ties only).  Raises SizeCapError above ``cap`` variables.
        """
        n = self.num_vars
        if n > cap:
            raise SizeCapError(f"{n} variables exceeds exhaustive cap {cap}")
        if n == 0:
            return "", self.constant
        best_cost = np.inf
        best_key = None  # lexicographic comparison key (bit-reversed index)
        best_index = 0
        chunk = 1 << 20
        for start in range(0, 1 << n, chunk):
            stop = min(start + chunk, 1 << n)
            costs = self.cost_vector(start, stop)
            cmin = costs.min()
            if cmin > best_cost:
                continue
            tied = np.flatnonzero(costs == cmin).astype(np.uint64) + np.uint64(start)
            keys = _lexicographic_keys(tied, n)
            pick = int(np.argmin(keys))
            if cmin < best_cost or (best_key is None or keys[pick] < best_key):
                best_cost = cmin
                best_key = keys[pick]
                best_index = int(tied[pick])
        return index_to_bitstring(best_index, n), float(best_cost)

    def to_ising(self) -> "IsingModel":
        """Spin form under s_i = 1 - 2 x_i; exact including the offset."""
        if self.degree > 2:
            raise DegreeError(
                f"spin conversion requires degree <= 2, model has degree {self.degree}"
            )
        n = self.num_vars
        h = np.zeros(n)
        quadratic: dict[tuple[int, int], float] = {}
        offset = self.constant
        for term, coeff in self.terms.items():
            if len(term) == 1:
                # a * x = a/2 - (a/2) s
                offset += coeff / 2.0
                h[term[0]] -= coeff / 2.0
            elif len(term) == 2:
                # b * x_i x_j = b/4 (1 - s_i - s_j + s_i s_j)
                i, j = term
                offset += coeff / 4.0
                h[i] -= coeff / 4.0
                h[j] -= coeff / 4.0
                quadratic[(i, j)] = quadratic.get((i, j), 0.0) + coeff / 4.0
        quadratic = {k: v for k, v in quadratic.items() if v != 0.0}
        return IsingModel(num_spins=n, linear=h, quadratic=quadratic, offset=offset)


def _lexicographic_keys(indices: np.ndarray, n: int) -> np.ndarray:
    """Bit-reversed indices; ordering them orders bitstrings lexicographically."""
    keys = np.zeros_like(indices)
    for i in range(n):
        keys |= ((indices >> np.uint64(i)) & np.uint64(1)) << np.uint64(n - 1 - i)
    return keys


@dataclass
class IsingModel:
    """Spin model E(s) = offset + sum h_i s_i + sum_{i<j} J_ij s_i s_j."""

    num_spins: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self) -> None:
        self.linear = np.asarray(self.linear, dtype=np.float64)
        if self.linear.shape != (self.num_spins,):
            raise DimensionError(
                f"linear field has shape {self.linear.shape}, expected ({self.num_spins},)"
            )
        for i, j in self.quadratic:
            if not (0 <= i < j < self.num_spins):
                raise ValueError(f"coupling key ({i},{j}) must satisfy 0 <= i < j < n")

    def energy(self, spins: Sequence[int] | np.ndarray) -> float:
        s = np.asarray(spins, dtype=np.float64)
        if s.shape != (self.num_spins,):
            raise DimensionError(f"spin vector has shape {s.shape}")
        e = self.offset + float(self.linear @ s)
        for (i, j), coupling in self.quadratic.items():
            e += coupling * s[i] * s[j]
        return e

    def energy_of_bits(self, x: str | Sequence[int] | np.ndarray) -> float:
        bits = _as_bits(x, self.num_spins)
        return self.energy(1.0 - 2.0 * bits.astype(np.float64))

    def to_polynomial(self) -> BinaryPolynomial:
        """Inverse substitution s_i = 1 - 2 x_i; exact."""
        terms: dict[tuple[int, ...], float] = {(): self.offset}
        for i, hi in enumerate(self.linear):
            if hi != 0.0:
                terms[()] = terms.get((), 0.0) + hi
                terms[(i,)] = terms.get((i,), 0.0) - 2.0 * hi
        for (i, j), coupling in self.quadratic.items():
            terms[()] = terms.get((), 0.0) + coupling
            terms[(i,)] = terms.get((i,), 0.0) - 2.0 * coupling
            terms[(j,)] = terms.get((j,), 0.0) - 2.0 * coupling
            terms[(i, j)] = terms.get((i, j), 0.0) + 4.0 * coupling
        return BinaryPolynomial(self.num_spins, terms)


@dataclass(frozen=True)
class Timing:
    """Wall-clock split of one solver call, all components in seconds."""

    preprocess: float = 0.0
    solve: float = 0.0
    postprocess: float = 0.0

    def __post_init__(self) -> None:
        for name in ("preprocess", "solve", "postprocess"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"timing component {name} must be >= 0")

    @property
    def total(self) -> float:
        return self.preprocess + self.solve + self.postprocess


@dataclass
class SampleSet:
    """Multiset of sampled bitstrings with per-string costs and timing.

    ``samples`` maps each distinct bitstring to its draw count; ``costs``
    carries the model cost of each distinct bitstring.  Solver outputs
    always hold at least one draw; the empty set exists solely as the
    identity for merge loops.
    """

    num_vars: int
    samples: dict[str, int] = field(default_factory=dict)
    costs: dict[str, float] = field(default_factory=dict)
    timing: Timing = field(default_factory=Timing)
    info: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        for x, count in self.samples.items():
            if len(x) != self.num_vars:
                raise DimensionError(f"sample {x!r} does not have {self.num_vars} bits")
            if count < 1:
                raise ValueError(f"sample count must be >= 1, got {count} for {x!r}")
            if x not in self.costs:
                raise ValueError(f"sample {x!r} has no recorded cost")

    @classmethod
    def empty(cls, num_vars: int) -> "SampleSet":
        return cls(num_vars=num_vars)

    @classmethod
    def from_draws(
        cls,
        num_vars: int,
        draws: Iterable[tuple[str, float]],
        timing: Timing = Timing(),
        info: dict | None = None,
    ) -> "SampleSet":
        samples: dict[str, int] = {}
        costs: dict[str, float] = {}
        for x, cost in draws:
            samples[x] = samples.get(x, 0) + 1
            costs[x] = float(cost)
        return cls(num_vars=num_vars, samples=samples, costs=costs,
                   timing=timing, info=dict(info or {}))

    @property
    def total_draws(self) -> int:
        return sum(self.samples.values())

    def items(self) -> Iterable[tuple[str, int, float]]:
        for x, count in self.samples.items():
            yield x, count, self.costs[x]

    def best(self) -> tuple[str, float]:
        if not self.samples:
            raise ValueError("empty sample set has no best sample")
        x = min(self.samples, key=lambda s: (self.costs[s], s))
        return x, self.costs[x]

    def expected_cost(self) -> float:
        m = self.total_draws
        if m == 0:
            raise ValueError("empty sample set has no expectation")
        return sum(count * self.costs[x] for x, count in self.samples.items()) / m


def merge(a: SampleSet, b: SampleSet) -> SampleSet:
    """Combine two sample sets of the same model.

    Counts add per bitstring and solve/postprocess times add; preprocessing
    time is taken from ``a`` alone, matching repeat-until-limit loops that
    cache preprocessing in the first call and reuse it afterwards.
    """
    if a.num_vars != b.num_vars:
        raise DimensionError(
            f"cannot merge sample sets over {a.num_vars} and {b.num_vars} variables"
        )
    samples = dict(a.samples)
    costs = dict(a.costs)
    for x, count in b.samples.items():
        samples[x] = samples.get(x, 0) + count
        if x in costs and abs(costs[x] - b.costs[x]) > 1e-9:
            raise ValueError(
                f"cost mismatch for {x!r}: {costs[x]} vs {b.costs[x]}"
            )
        costs.setdefault(x, b.costs[x])
    timing = Timing(
        preprocess=a.timing.preprocess,
        solve=a.timing.solve + b.timing.solve,
        postprocess=a.timing.postprocess + b.timing.postprocess,
    )
    info = {**b.info, **a.info}
    return SampleSet(num_vars=a.num_vars, samples=samples, costs=costs,
                     timing=timing, info=info)


class Stopwatch:
    """Monotonic wall-clock helper for timing solver phases."""

    def __init__(self) -> None:
        self._t0 = time.perf_counter()

    def lap(self) -> float:
        now = time.perf_counter()
        elapsed = now - self._t0
        self._t0 = now
        return elapsed
