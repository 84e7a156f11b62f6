"""Event-graph inequality functionals over pairwise state overlaps.

A set of n states defines a weighted complete graph: nodes are states, the
edge (i, j) carries the overlap r_ij = Tr(rho_i rho_j). Linear functionals
of the edge weights bound what incoherent (simultaneously diagonalizable)
state sets can reach; values above the classical bound witness
basis-independent coherence, and the maximal violation grows with Hilbert
space dimension, so the same functionals double as dimension indicators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .states import StateLike, ValidationError, overlap

__all__ = [
    "OverlapSet",
    "InequalitySpec",
    "WitnessVerdict",
    "edge_order",
    "make_hn",
    "make_h_mzi",
    "make_h3_robust",
    "evaluate",
    "evaluate_states",
    "hn_plus",
    "classify",
    "qubit_triple_max_eigenvalue",
    "qubit_h4_gap",
]


def edge_order(n: int) -> list[tuple[int, int]]:
    """Canonical edge ordering: upper-triangular row-major (0,1), (0,2), ..."""
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


@dataclass(frozen=True)
class OverlapSet:
    """Symmetric n x n matrix of pairwise overlaps with unit diagonal.

    Only the upper triangle is authoritative; the stored matrix mirrors it
    exactly, so ``r[i, j] == r[j, i]`` bitwise. The diagonal is fixed to 1
    by convention (the graph has no self-edges and no functional reads it).
    """

    n: int
    r: np.ndarray

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("an overlap set needs at least 2 nodes")
        m = np.array(self.r, dtype=float, copy=True)
        if m.shape != (self.n, self.n):
            raise ValidationError(f"overlap matrix must be {self.n}x{self.n}")
        iu = np.triu_indices(self.n, k=1)
        vals = m[iu]
        if np.any(vals < -1e-12) or np.any(vals > 1.0 + 1e-12):
            raise ValidationError("overlaps must lie in [0, 1]")
        out = np.eye(self.n)
        out[iu] = np.clip(vals, 0.0, 1.0)
        out[(iu[1], iu[0])] = out[iu]
        out.setflags(write=False)
        object.__setattr__(self, "r", out)

    @classmethod
    def from_upper(cls, n: int, upper: Sequence[float]) -> "OverlapSet":
        """Build from the canonical upper-triangular edge list."""
        edges = edge_order(n)
        if len(upper) != len(edges):
            raise ValidationError(f"expected {len(edges)} entries for n={n}, got {len(upper)}")
        m = np.eye(n)
        for (i, j), v in zip(edges, upper):
            m[i, j] = v
        return cls(n, m)

    @classmethod
    def from_states(cls, states: Sequence[StateLike]) -> "OverlapSet":
        n = len(states)
        m = np.eye(n)
        for i in range(n):
            for j in range(i + 1, n):
                m[i, j] = overlap(states[i], states[j])
        return cls(n, m)

    def upper(self) -> np.ndarray:
        return self.r[np.triu_indices(self.n, k=1)]

    def restrict(self, nodes: Sequence[int]) -> "OverlapSet":
        """Sub-graph on the given nodes, relabeled 0..len(nodes)-1."""
        idx = list(nodes)
        return OverlapSet(len(idx), self.r[np.ix_(idx, idx)])


@dataclass(frozen=True)
class InequalitySpec:
    """Signed edge weights plus a classical bound.

    ``weights`` maps unordered pairs (i, j) with i < j to coefficients; the
    functional is ``sum_w weights[(i,j)] * r[i,j]`` and values above
    ``classical_bound`` witness coherence.
    """

    n: int
    weights: Mapping[tuple[int, int], float]
    classical_bound: float
    name: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("inequality needs at least 2 nodes")
        clean = {}
        for (i, j), w in self.weights.items():
            if not (0 <= i < j < self.n):
                raise ValidationError(f"edge ({i},{j}) invalid for n={self.n}")
            if not np.isfinite(w):
                raise ValidationError(f"non-finite coefficient on edge ({i},{j})")
            clean[(int(i), int(j))] = float(w)
        object.__setattr__(self, "weights", dict(sorted(clean.items())))
        if not np.isfinite(self.classical_bound):
            raise ValidationError("classical bound must be finite")

    def weight_matrix(self) -> np.ndarray:
        """Symmetric zero-diagonal coefficient matrix."""
        w = np.zeros((self.n, self.n))
        for (i, j), c in self.weights.items():
            w[i, j] = c
            w[j, i] = c
        return w


@dataclass(frozen=True)
class WitnessVerdict:
    """Outcome of classifying a functional value against dimension maxima.

    ``min_dimension`` is one more than the largest dimension whose maximum
    the value exceeds (1 when it exceeds none). ``min_dimension_known`` is
    False when no thresholds were supplied.
    """

    value: float
    coherence_witnessed: bool
    min_dimension: int
    thresholds_used: tuple[tuple[int, float], ...]
    min_dimension_known: bool = True


def make_hn(n: int) -> InequalitySpec:
    """The recursive h_n functional on the complete graph K_n.

    h_3 = r01 + r02 - r12, and each step to n adds +r_{0,n-1} and
    -r_{i,n-1} for 1 <= i <= n-2. Expanded: +1 on every edge from node 0,
    -1 on every edge among nodes 1..n-1. Classical bound 1.
    """
    if n < 3:
        raise ValidationError("h_n is defined for n >= 3")
    weights: dict[tuple[int, int], float] = {}
    for k in range(1, n):
        weights[(0, k)] = 1.0
    for i in range(1, n):
        for j in range(i + 1, n):
            weights[(i, j)] = -1.0
    return InequalitySpec(n=n, weights=weights, classical_bound=1.0, name=f"h{n}")


def make_h_mzi() -> InequalitySpec:
    """Pentagon functional tailored to two-level interferometers.

    +1 on the 5-cycle edges, -1 on the diagonals; classical bound 2. The
    quantum maximum is 5*sqrt(5)/4, reached by five states equally spaced
    on a great circle of the Bloch sphere.
    """
    plus = [(0, 1), (0, 4), (1, 2), (2, 3), (3, 4)]
    minus = [(0, 2), (0, 3), (1, 3), (1, 4), (2, 4)]
    weights = {e: 1.0 for e in plus}
    weights.update({e: -1.0 for e in minus})
    return InequalitySpec(n=5, weights=weights, classical_bound=2.0, name="hmzi")


def make_h3_robust() -> InequalitySpec:
    """Six-state noncontextuality functional for the hexagon fragment.

    Nodes follow the hexagon order (0, theta, -theta, 1, theta_perp,
    -theta_perp): +r01 +r02 -r12 -r03 -r14 -r25 <= 1 whenever the three
    antipodal preparation pairs are operationally equivalent.
    """
    weights = {(0, 1): 1.0, (0, 2): 1.0, (1, 2): -1.0,
               (0, 3): -1.0, (1, 4): -1.0, (2, 5): -1.0}
    return InequalitySpec(n=6, weights=weights, classical_bound=1.0, name="h3robust")


def evaluate(spec: InequalitySpec, overlaps: OverlapSet) -> float:
    """Apply the functional to an overlap set (upper-triangular entries only)."""
    if spec.n != overlaps.n:
        raise ValidationError(f"size mismatch: spec has n={spec.n}, overlaps n={overlaps.n}")
    return float(sum(w * overlaps.r[i, j] for (i, j), w in spec.weights.items()))


def evaluate_states(spec: InequalitySpec, states: Sequence[StateLike]) -> float:
    """Compose the overlap matrix of the states and evaluate the functional."""
    if len(states) != spec.n:
        raise ValidationError(f"spec expects {spec.n} states, got {len(states)}")
    return evaluate(spec, OverlapSet.from_states(states))


def hn_plus(overlaps: OverlapSet) -> float:
    """Sum of all pairwise overlaps, sum_{i<j} r_ij.

    For n pure states with mean projector X this equals
    (n^2/2) Tr(X^2) - n/2, and h_n decomposes as
    ``hn_plus(all) - 2 * hn_plus(restricted to nodes 1..n-1)``.
    """
    return float(np.sum(overlaps.upper()))


def classify(
    spec: InequalitySpec,
    value: float,
    thresholds: Sequence[tuple[int, float]],
    slack: float = 0.0,
) -> WitnessVerdict:
    """Classify a functional value against per-dimension maxima.

    ``thresholds`` is a list of (d, max_value) sorted ascending in d.
    Comparisons are strict with an additive ``slack`` for callers that need
    to absorb statistical uncertainty. With no thresholds the dimension is
    reported as 1 with ``min_dimension_known=False``.
    """
    thr = tuple((int(d), float(v)) for d, v in thresholds)
    if any(thr[k][0] >= thr[k + 1][0] for k in range(len(thr) - 1)):
        raise ValidationError("thresholds must be sorted strictly ascending in dimension")
    witnessed = value > spec.classical_bound + slack
    if not thr:
        return WitnessVerdict(value, witnessed, 1, thr, min_dimension_known=False)
    exceeded = [d for d, vmax in thr if value > vmax + slack]
    min_dim = 1 + max(exceeded) if exceeded else 1
    return WitnessVerdict(value, witnessed, min_dim, thr)


def qubit_triple_max_eigenvalue(theta, alpha, phi):
    """Largest eigenvalue of |0><0| + |theta><theta| + |alpha,phi><alpha,phi|.

    Closed form for the qubit frame operator of the three states
    cos(t)|0> + sin(t)|1> and cos(a)|0> + e^{i p} sin(a)|1>:
    ``3/2 + sqrt(2 sin2a sin2t cos p + 4 cos2a cos^2 t + 2 cos2t + 3) / 2``.
    Vectorized over array inputs.
    """
    theta, alpha, phi = np.asarray(theta), np.asarray(alpha), np.asarray(phi)
    rad = (2.0 * np.sin(2 * alpha) * np.sin(2 * theta) * np.cos(phi)
           + 4.0 * np.cos(2 * alpha) * np.cos(theta) ** 2
           + 2.0 * np.cos(2 * theta) + 3.0)
    return 1.5 + 0.5 * np.sqrt(np.maximum(rad, 0.0))


def qubit_h4_gap(theta, alpha, phi):
    """h_4 - 1 after optimizing the fourth state over all qubit states.

    The three fixed states are |0>, |theta>, |alpha,phi|; the optimal
    fourth state is the top eigenvector of their sum, giving the closed
    form ``lambda_max - 1 - (r_23 + r_24 + r_34)``. Nonpositive everywhere,
    which is exactly the statement that qubits cannot violate h_4.
    """
    theta, alpha, phi = np.asarray(theta), np.asarray(alpha), np.asarray(phi)
    lam = qubit_triple_max_eigenvalue(theta, alpha, phi)
    r23 = np.cos(theta) ** 2
    r24 = np.cos(alpha) ** 2
    r34 = (np.cos(theta) ** 2 * np.cos(alpha) ** 2
           + np.sin(theta) ** 2 * np.sin(alpha) ** 2
           + 0.5 * np.sin(2 * theta) * np.sin(2 * alpha) * np.cos(phi))
    return lam - 1.0 - r23 - r24 - r34
