"""Quantum-state primitives: pure and mixed states, overlaps, noise, sampling.

All values are immutable after construction (arrays are frozen), so they can
be shared freely across threads. Randomness always flows through an explicit
64-bit seed or a ``numpy.random.Generator``; see `make_rng` for the stream
convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "ValidationError",
    "NumericalError",
    "Tolerances",
    "DEFAULT_TOL",
    "PureState",
    "DensityMatrix",
    "overlap",
    "depolarize",
    "haar_random_pure",
    "max_eigenvalue",
    "basis_state",
    "qubit_state",
    "bloch_vector",
    "make_rng",
    "split_seeds",
]


class ValidationError(ValueError):
    """An input violates a documented precondition or invariant."""


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used for validation throughout the package.

    Kept in one record so tests can tighten or loosen them uniformly.

    Attributes
    ----------
    unit_norm : float
        Allowed deviation of a pure state's squared norm from 1.
    hermitian : float
        Allowed elementwise deviation from Hermiticity.
    trace : float
        Allowed deviation of a density matrix trace from 1.
    eigenvalue_floor : float
        Most negative eigenvalue accepted before a matrix is rejected as
        non-positive; eigenvalues in ``[eigenvalue_floor, 0)`` are clamped
        to zero and the trace is renormalized.
    overlap_range : float
        Slack allowed on the [0, 1] range of an overlap before clamping.
    """

    unit_norm: float = 1e-12
    hermitian: float = 1e-12
    trace: float = 1e-12
    eigenvalue_floor: float = -1e-10
    overlap_range: float = 1e-12


DEFAULT_TOL = Tolerances()

SeedLike = Union[int, np.random.Generator]


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Return the package's reference generator (PCG64) for a 64-bit seed.

    Generators pass through unchanged, so library code can accept either.
    Parallel work items must never share one generator; use `split_seeds`
    to derive independent child streams deterministically.
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def split_seeds(seed: int, n: int) -> list[np.random.SeedSequence]:
    """Split a root seed into ``n`` independent child streams.

    Children are spawned from ``SeedSequence(seed)``, so the split is
    deterministic and the streams are statistically independent regardless
    of how callers schedule them.
    """
    if n < 0:
        raise ValidationError("cannot split into a negative number of streams")
    return np.random.SeedSequence(int(seed)).spawn(n)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PureState:
    """Unit-norm complex amplitude vector representing a ray.

    Global phase carries no meaning: two states are physically equal when
    their overlap is 1.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128, copy=True)
        if amps.ndim != 1 or amps.size < 1:
            raise ValidationError("amplitudes must be a non-empty 1-d complex vector")
        norm_sq = float(np.sum(amps.real**2 + amps.imag**2))
        if abs(norm_sq - 1.0) > DEFAULT_TOL.unit_norm:
            raise ValidationError(f"squared norm is {norm_sq!r}, expected 1 within {DEFAULT_TOL.unit_norm}")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @classmethod
    def normalized(cls, vec: Sequence[complex]) -> "PureState":
        """Build a state from an unnormalized, nonzero amplitude vector."""
        v = np.asarray(vec, dtype=np.complex128)
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return cls(v / norm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        """Rank-one projector onto this state."""
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def same_ray(self, other: "PureState", tol: float = 1e-12) -> bool:
        """Equality up to global phase: overlap equal to 1 within ``tol``."""
        return abs(overlap(self, other) - 1.0) <= tol


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace complex matrix.

    Construction repairs tiny numerical negativity: eigenvalues in
    ``[eigenvalue_floor, 0)`` are clamped to zero and the trace is
    renormalized, which keeps downstream iterative solvers stable. Anything
    more negative is rejected.
    """

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=np.complex128, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise ValidationError("entries must be a square complex matrix")
        herm_err = float(np.max(np.abs(m - m.conj().T)))
        if herm_err > DEFAULT_TOL.hermitian:
            raise ValidationError(f"matrix deviates from Hermiticity by {herm_err:g}")
        m = (m + m.conj().T) / 2.0
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > DEFAULT_TOL.trace:
            raise ValidationError(f"trace is {tr!r}, expected 1 within {DEFAULT_TOL.trace}")
        w = np.linalg.eigvalsh(m)
        w_min = float(w[0])
        if w_min < DEFAULT_TOL.eigenvalue_floor:
            raise ValidationError(f"matrix has eigenvalue {w_min:g}, below the PSD floor")
        if w_min < 0.0:
            # PSD repair: clamp the offending eigenvalues, renormalize trace.
            vals, vecs = np.linalg.eigh(m)
            vals = np.clip(vals, 0.0, None)
            m = (vecs * vals) @ vecs.conj().T
            m = (m + m.conj().T) / 2.0
            m = m / float(np.trace(m).real)
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def purity(self) -> float:
        """Tr(rho^2); equals 1 exactly for pure states."""
        return float(np.vdot(self.entries, self.entries).real)

    @classmethod
    def maximally_mixed(cls, d: int) -> "DensityMatrix":
        if d < 1:
            raise ValidationError("dimension must be at least 1")
        return cls(np.eye(d, dtype=np.complex128) / d)


StateLike = Union[PureState, DensityMatrix]


def _as_density_array(x: StateLike) -> np.ndarray:
    if isinstance(x, PureState):
        return np.outer(x.amplitudes, x.amplitudes.conj())
    if isinstance(x, DensityMatrix):
        return x.entries
    raise ValidationError(f"expected PureState or DensityMatrix, got {type(x).__name__}")


def overlap(a: StateLike, b: StateLike, tol: Tolerances = DEFAULT_TOL) -> float:
    """Two-state overlap Tr(a b), in [0, 1].

    For pure inputs this equals ``|<a|b>|^2``. The implementation is
    bit-symmetric in its arguments: each elementwise term is the same float
    expression either way, summed in the same order.
    """
    if isinstance(a, PureState) and isinstance(b, PureState):
        if a.dim != b.dim:
            raise ValidationError(f"dimension mismatch: {a.dim} vs {b.dim}")
        z = np.vdot(a.amplitudes, b.amplitudes)
        val = z.real * z.real + z.imag * z.imag
    else:
        ma, mb = _as_density_array(a), _as_density_array(b)
        if ma.shape != mb.shape:
            raise ValidationError(f"dimension mismatch: {ma.shape[0]} vs {mb.shape[0]}")
        # Tr(AB) = sum_ij conj(A_ij) B_ij for Hermitian A.
        val = float(np.vdot(ma, mb).real)
    if val < 0.0:
        if val < -tol.overlap_range:
            raise NumericalError(f"overlap {val!r} fell below 0 beyond tolerance")
        val = 0.0
    elif val > 1.0:
        if val > 1.0 + tol.overlap_range:
            raise NumericalError(f"overlap {val!r} exceeded 1 beyond tolerance")
        val = 1.0
    return float(val)


def depolarize(x: StateLike, nu: float) -> DensityMatrix:
    """Depolarizing channel: ``(1 - nu) x + nu * (I/d) Tr(x)``.

    ``nu`` is the noise weight; ``nu = 0`` is the identity channel and
    ``nu = 1`` maps every state to the maximally mixed one.
    """
    if not 0.0 <= nu <= 1.0:
        raise ValidationError(f"noise weight nu must lie in [0, 1], got {nu!r}")
    m = _as_density_array(x)
    d = m.shape[0]
    tr = np.trace(m).real
    out = (1.0 - nu) * m + (nu * tr / d) * np.eye(d, dtype=np.complex128)
    return DensityMatrix(out)


def haar_random_pure(d: int, seed: SeedLike) -> PureState:
    """Draw a Haar-uniform pure state: normalized complex-Gaussian vector.

    A vector of i.i.d. standard complex normals has a unitarily invariant
    distribution, so its normalization is Haar-uniform on the sphere of
    rays. Deterministic for a fixed seed.
    """
    if d < 1:
        raise ValidationError("dimension must be at least 1")
    rng = make_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v))


def haar_random_pure_batch(num: int, n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """Array of shape (num, n, d): ``num`` independent n-tuples of Haar states."""
    z = rng.standard_normal((num, n, d)) + 1j * rng.standard_normal((num, n, d))
    return z / np.linalg.norm(z, axis=2, keepdims=True)


def max_eigenvalue(h: Union[np.ndarray, DensityMatrix], tol: Tolerances = DEFAULT_TOL) -> float:
    """Largest eigenvalue of a Hermitian matrix.

    Rejects inputs whose anti-Hermitian part exceeds ``tol.hermitian``
    relative to the matrix scale.
    """
    m = h.entries if isinstance(h, DensityMatrix) else np.asarray(h, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("expected a square matrix")
    scale = max(1.0, float(np.max(np.abs(m))))
    herm_err = float(np.max(np.abs(m - m.conj().T)))
    if herm_err > tol.hermitian * scale:
        raise ValidationError(f"matrix deviates from Hermiticity by {herm_err:g}")
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2.0)[-1])


def basis_state(d: int, k: int) -> PureState:
    """Computational basis vector |k> in dimension d."""
    if not 0 <= k < d:
        raise ValidationError(f"basis index {k} out of range for dimension {d}")
    v = np.zeros(d, dtype=np.complex128)
    v[k] = 1.0
    return PureState(v)


def qubit_state(theta: float, phi: float = 0.0) -> PureState:
    """cos(theta)|0> + e^{i phi} sin(theta)|1>.

    The orthogonal partner of |theta> is ``qubit_state(theta + pi/2, phi)``.
    """
    return PureState(np.array([np.cos(theta), np.exp(1j * phi) * np.sin(theta)], dtype=np.complex128))


def bloch_vector(rho: StateLike) -> np.ndarray:
    """Bloch vector (x, y, z) of a qubit state."""
    m = _as_density_array(rho)
    if m.shape != (2, 2):
        raise ValidationError("Bloch vector is defined for qubits only")
    x = 2.0 * m[0, 1].real
    y = -2.0 * m[0, 1].imag
    z = (m[0, 0] - m[1, 1]).real
    return np.array([x, y, z])
