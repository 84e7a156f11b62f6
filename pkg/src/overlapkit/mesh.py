"""Programmable rectangular interferometer: composition, decomposition,
qudit preparation circuits, photon-count overlap estimation, angle-noise
dispersion, and the thermo-optic calibration model.

Cell convention. Each tunable beam splitter is a Mach-Zehnder cell: an
external phase ``phi`` on the upper input, then two balanced couplers
(transmission 1/sqrt(2), reflection i/sqrt(2)) around an internal phase
``theta``. The resulting two-mode transfer matrix is

    T(theta, phi) = i e^{i theta/2} [[e^{i phi} sin(theta/2), cos(theta/2)],
                                     [e^{i phi} cos(theta/2), -sin(theta/2)]]

so the cross-port power is exactly (1 + cos(theta)) / 2, which is what the
calibration model fits; theta = pi is a mirror (all bar), theta = 0 a full
crossing. The rectangular tiling and the nulling order follow Clements et
al., Optica 3, 1460 (2016).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import curve_fit, minimize

from .inequalities import InequalitySpec, make_hn
from .optimize import uniform_pure_ensemble
from .states import (
    DensityMatrix,
    NumericalError,
    PureState,
    ValidationError,
    basis_state,
    make_rng,
    overlap,
    qubit_state,
    split_seeds,
)

__all__ = [
    "MeshCell",
    "MeshConfig",
    "CountRecord",
    "CountEstimate",
    "AngleNoise",
    "DispersionResult",
    "CalibrationModel",
    "CalibrationCoverageError",
    "FidelityStudy",
    "clements_layout",
    "mzi_transfer",
    "compose",
    "decompose",
    "haar_random_unitary",
    "prepare_qutrit",
    "prepare_ququart",
    "prepare_5mode",
    "pentagon_qubit_set",
    "qutrit_h4_set",
    "ququart_h5_set",
    "ququart_parameters",
    "h5_ququart_parameters",
    "five_mode_h6_parameters",
    "maximize_pure_family",
    "hyperspherical_angles",
    "state_from_hyperspherical",
    "overlap_via_counts",
    "estimate_inequality_via_counts",
    "dispersion",
    "calibration_forward",
    "calibration_fit",
    "fidelity",
    "perturbed_mesh_fidelity_study",
]


class CalibrationCoverageError(ValidationError):
    """Sweep does not cover enough induced phase to identify the model."""


def _mod_2pi(x: float) -> float:
    return float(np.mod(x, 2.0 * np.pi))


@dataclass(frozen=True)
class MeshCell:
    """One Mach-Zehnder cell: top mode index, layer column, and angles."""

    row: int
    column: int
    theta: float
    phi: float

    def __post_init__(self):
        object.__setattr__(self, "theta", _mod_2pi(self.theta))
        object.__setattr__(self, "phi", _mod_2pi(self.phi))


def clements_layout(m: int) -> list[tuple[int, int]]:
    """(row, column) slots of the rectangular tiling for m modes.

    Even columns host cells on rows 0, 2, ...; odd columns on rows 1, 3,
    ...; m(m-1)/2 cells in total.
    """
    if m < 2:
        raise ValidationError("a mesh needs at least 2 modes")
    slots = []
    for col in range(m):
        for row in range(col % 2, m - 1, 2):
            slots.append((row, col))
    return slots


@dataclass(frozen=True)
class MeshConfig:
    """Full rectangular mesh setting: one (theta, phi) pair per cell.

    The cell set must tile the rectangle exactly; ``output_phases`` holds
    the residual per-mode phases applied after the last column.
    """

    modes: int
    cells: tuple[MeshCell, ...]
    output_phases: tuple[float, ...] | None = None

    def __post_init__(self):
        expected = sorted(clements_layout(self.modes))
        got = sorted((c.row, c.column) for c in self.cells)
        if got != expected:
            raise ValidationError(
                f"cell layout does not tile the {self.modes}-mode rectangle "
                f"({len(got)} cells, expected {len(expected)})"
            )
        if self.output_phases is not None:
            if len(self.output_phases) != self.modes:
                raise ValidationError("output_phases must list one phase per mode")
            object.__setattr__(self, "output_phases",
                               tuple(_mod_2pi(p) for p in self.output_phases))
        object.__setattr__(self, "cells", tuple(self.cells))


def mzi_transfer(theta: float, phi: float) -> np.ndarray:
    """Two-mode transfer matrix of one cell (see module docstring)."""
    s, c = np.sin(theta / 2.0), np.cos(theta / 2.0)
    pre = 1j * np.exp(1j * theta / 2.0)
    ephi = np.exp(1j * phi)
    return pre * np.array([[ephi * s, c], [ephi * c, -s]], dtype=np.complex128)


def compose(config: MeshConfig) -> np.ndarray:
    """Multiply the mesh cells into an m x m unitary.

    Cells act in column order (cells within a column address disjoint mode
    pairs, so their order is immaterial), then the output phases.
    """
    m = config.modes
    u = np.eye(m, dtype=np.complex128)
    for cell in sorted(config.cells, key=lambda c: (c.column, c.row)):
        block = mzi_transfer(cell.theta, cell.phi)
        u[cell.row:cell.row + 2, :] = block @ u[cell.row:cell.row + 2, :]
    if config.output_phases is not None:
        u = np.exp(1j * np.asarray(config.output_phases))[:, None] * u
    return u


def haar_random_unitary(m: int, seed) -> np.ndarray:
    """Haar-distributed m x m unitary (QR of a complex Ginibre matrix)."""
    rng = make_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _null_from_right(u: np.ndarray, row: int, col: int) -> tuple[float, float]:
    """Angles so that (u @ T(theta, phi)^dagger)[row, col] vanishes."""
    a, b = u[row, col], u[row, col + 1]
    if abs(a) < 1e-300:
        return np.pi, 0.0
    z = -b / a
    phi = float(-np.angle(z)) if abs(z) > 0 else 0.0
    return 2.0 * np.arctan(abs(z)), phi


def _null_from_left(u: np.ndarray, row: int, col: int) -> tuple[float, float]:
    """Angles so that (T(theta, phi) @ u)[row, col] vanishes (T on rows row-1, row)."""
    a, b = u[row - 1, col], u[row, col]
    if abs(b) < 1e-300:
        return np.pi, 0.0
    theta = 2.0 * np.arctan2(abs(a), abs(b))
    phi = float(np.angle(b) - np.angle(a)) if abs(a) > 0 else 0.0
    return theta, phi


def decompose(u: np.ndarray, atol: float = 1e-10) -> MeshConfig:
    """Rectangular decomposition of a unitary into mesh cell settings.

    Nulls the lower triangle diagonal by diagonal, alternating right
    multiplications (column mixes) and left multiplications (row mixes),
    then commutes the residual diagonal through the left factors so the
    result reads as ``diag(output_phases) @ (product of cells)``.
    ``compose(decompose(u))`` reproduces ``u`` exactly (global phase
    included) up to floating-point rounding.
    """
    u = np.asarray(u, dtype=np.complex128)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValidationError("expected a square matrix")
    m = u.shape[0]
    if m < 2:
        raise ValidationError("a mesh needs at least 2 modes")
    unit_err = float(np.max(np.abs(u.conj().T @ u - np.eye(m))))
    if unit_err > max(atol, 1e-10):
        raise ValidationError(f"matrix deviates from unitarity by {unit_err:g}")

    work = u.copy()
    right_ops: list[tuple[int, float, float]] = []  # (top mode, theta, phi)
    left_ops: list[tuple[int, float, float]] = []
    for diag in range(1, m):
        if diag % 2 == 1:
            for j in range(diag):
                row, col = m - 1 - j, diag - 1 - j
                theta, phi = _null_from_right(work, row, col)
                block = mzi_transfer(theta, phi).conj().T
                work[:, col:col + 2] = work[:, col:col + 2] @ block
                right_ops.append((col, theta, phi))
        else:
            for j in range(1, diag + 1):
                row, col = m + j - diag - 1, j - 1
                theta, phi = _null_from_left(work, row, col)
                block = mzi_transfer(theta, phi)
                work[row - 1:row + 1, :] = block @ work[row - 1:row + 1, :]
                left_ops.append((row - 1, theta, phi))

    off = work - np.diag(np.diag(work))
    if float(np.max(np.abs(off))) > 1e-8:
        raise NumericalError("nulling failed to reach a diagonal matrix")
    phases = np.diag(work).copy()

    # Commute the diagonal through the left factors:
    # T(theta, phi)^dagger diag(d1, d2) = diag(d1', d2') T(theta, phi') with
    # phi' = arg(d1 conj(d2)), d1' = -e^{-i(theta+phi)} d2, d2' = -e^{-i theta} d2.
    # Innermost left factor commutes first, which already yields the
    # remaining factors in application order.
    physical: list[tuple[int, float, float]] = list(right_ops)
    for mode, theta, phi in reversed(left_ops):
        d1, d2 = phases[mode], phases[mode + 1]
        phi_new = float(np.angle(d1 * np.conj(d2)))
        phases[mode] = -np.exp(-1j * (theta + phi)) * d2
        phases[mode + 1] = -np.exp(-1j * theta) * d2
        physical.append((mode, theta, phi_new))

    # Greedy column assignment reproduces the rectangular tiling.
    avail = [0] * m
    cells = []
    for mode, theta, phi in physical:
        col = max(avail[mode], avail[mode + 1])
        avail[mode] = avail[mode + 1] = col + 1
        cells.append(MeshCell(row=mode, column=col, theta=theta, phi=phi))
    return MeshConfig(
        modes=m,
        cells=tuple(cells),
        output_phases=tuple(float(np.angle(p)) for p in phases),
    )


# --- qudit preparation circuits -------------------------------------------

def prepare_qutrit(theta1: float, theta2: float, phi1: float, phi2: float) -> PureState:
    """Three-mode chain encoding of a qutrit.

    ``cos(t1)|0> + sin(t1) cos(t2) e^{i p1}|1> + sin(t1) sin(t2) e^{i p2}|2>``
    (first splitter peels mode 0, the second splits the remainder); unit
    norm for any angles.
    """
    t1, t2 = float(theta1), float(theta2)
    return PureState(np.array([
        np.cos(t1),
        np.sin(t1) * np.cos(t2) * np.exp(1j * phi1),
        np.sin(t1) * np.sin(t2) * np.exp(1j * phi2),
    ], dtype=np.complex128))


def prepare_ququart(theta1, theta2, theta3, phi1, phi2, phi3) -> PureState:
    """Four-mode tree encoding of a ququart (photon enters the middle).

    ``cos(t2)cos(t1)|0> + sin(t2)cos(t1)e^{i p1}|1>
    + sin(t1)cos(t3)e^{i p2}|2> + sin(t1)sin(t3)e^{i p3}|3>``.
    """
    t1, t2, t3 = float(theta1), float(theta2), float(theta3)
    return PureState(np.array([
        np.cos(t2) * np.cos(t1),
        np.sin(t2) * np.cos(t1) * np.exp(1j * phi1),
        np.sin(t1) * np.cos(t3) * np.exp(1j * phi2),
        np.sin(t1) * np.sin(t3) * np.exp(1j * phi3),
    ], dtype=np.complex128))


def prepare_5mode(theta1, theta2, theta3, theta4, phi1, phi2, phi3) -> PureState:
    """Restricted five-mode family reachable by the six-mode device.

    Not universal: amplitudes on modes 0 and 1 always share a phase. The
    family still contains tuples maximizing the six-state functional.
    """
    t1, t2, t3, t4 = float(theta1), float(theta2), float(theta3), float(theta4)
    return PureState(np.array([
        np.sin(t1) * np.cos(t2) * np.sin(t4),
        np.sin(t1) * np.cos(t2) * np.cos(t4),
        np.sin(t1) * np.sin(t2) * np.exp(1j * phi1),
        np.cos(t1) * np.sin(t3) * np.exp(1j * phi2),
        np.cos(t1) * np.cos(t3) * np.exp(1j * phi3),
    ], dtype=np.complex128))


def pentagon_qubit_set() -> list[PureState]:
    """Five qubit states equally spaced on the Bloch equator.

    Polar angle pi/4 (so cos/sin amplitudes are balanced) and phases
    2 pi k / 5; this tuple maximizes the pentagon functional at
    5 sqrt(5) / 4.
    """
    return [qubit_state(np.pi / 4.0, 2.0 * np.pi * k / 5.0) for k in range(5)]


def qutrit_h4_set() -> list[PureState]:
    """Four qutrits reaching h_4 = 4/3, the d = 3 maximum.

    One reference state plus three states at equal overlap 5/9 with it and
    1/9 with each other.
    """
    s5 = np.sqrt(5.0) / 3.0
    return [
        PureState(np.array([1.0, 0.0, 0.0], dtype=np.complex128)),
        PureState(np.array([s5, 2.0 / 3.0, 0.0], dtype=np.complex128)),
        PureState(np.array([s5, -1.0 / 3.0, 1j / np.sqrt(3.0)])),
        PureState(np.array([s5, -1.0 / 3.0, -1j / np.sqrt(3.0)])),
    ]


def _star_ensemble_states(n: int, d: int) -> list[PureState]:
    """Reference state |0> plus n-1 states averaging to the optimal mean.

    The optimal mean operator is diagonal with top entry
    (n + d - 2) / (d (n - 1)); a uniform Fourier ensemble realizes it with
    n - 1 pure states, giving the exact h_n maximum at dimension d.
    """
    x = (n + d - 2) / (d * (n - 1))
    lam = np.full(d, (1.0 - x) / (d - 1))
    lam[0] = x
    rho = DensityMatrix(np.diag(lam).astype(np.complex128))
    return [basis_state(d, 0)] + uniform_pure_ensemble(rho, n - 1)


def ququart_h5_set() -> list[PureState]:
    """Five ququarts reaching h_5 = 11/8 = 1.375, the d = 4 maximum."""
    return _star_ensemble_states(5, 4)


def ququart_parameters(state: PureState) -> np.ndarray:
    """Invert `prepare_ququart`: angles (t1, t2, t3, p1, p2, p3) for a state.

    The global phase is fixed so the mode-0 amplitude is real nonnegative.
    """
    v = np.asarray(state.amplitudes)
    if v.size != 4:
        raise ValidationError("expected a 4-dimensional state")
    if abs(v[0]) > 0:
        v = v * np.exp(-1j * np.angle(v[0]))
    c1 = np.hypot(abs(v[0]), abs(v[1]))
    s1 = np.hypot(abs(v[2]), abs(v[3]))
    t1 = np.arctan2(s1, c1)
    t2 = np.arctan2(abs(v[1]), abs(v[0]))
    t3 = np.arctan2(abs(v[3]), abs(v[2]))
    p1 = float(np.angle(v[1])) if abs(v[1]) > 0 else 0.0
    p2 = float(np.angle(v[2])) if abs(v[2]) > 0 else 0.0
    p3 = float(np.angle(v[3])) if abs(v[3]) > 0 else 0.0
    return np.array([t1, t2, t3, p1, p2, p3])


def h5_ququart_parameters() -> list[np.ndarray]:
    """Circuit angles preparing the exact h_5-maximizing ququart tuple."""
    return [ququart_parameters(s) for s in ququart_h5_set()]


def maximize_pure_family(
    spec: InequalitySpec,
    family: Callable[[np.ndarray], PureState],
    params_per_state: int,
    restarts: int = 20,
    seed: int = 0,
) -> tuple[np.ndarray, float]:
    """Maximize an inequality functional within a parameterized state family.

    Multi-start quasi-Newton ascent over the stacked angle vector (one row
    of ``params_per_state`` angles per state). Returns the best parameter
    matrix and its functional value; deterministic for a fixed seed.
    """
    rng = make_rng(seed)
    n = spec.n
    w = spec.weight_matrix()

    def value_of(flat: np.ndarray) -> float:
        amps = np.array([family(flat[k * params_per_state:(k + 1) * params_per_state]).amplitudes
                         for k in range(n)])
        gram = amps @ amps.conj().T
        return 0.5 * float(np.sum(w * (gram.real**2 + gram.imag**2)))

    best_val, best_x = -np.inf, None
    for _ in range(restarts):
        x0 = rng.uniform(0.0, 2.0 * np.pi, n * params_per_state)
        res = minimize(lambda x: -value_of(x), x0, method="L-BFGS-B")
        if -res.fun > best_val:
            best_val, best_x = -float(res.fun), res.x.copy()
    return best_x.reshape(n, params_per_state), best_val


@lru_cache(maxsize=4)
def five_mode_h6_parameters(restarts: int = 20, seed: int = 7) -> tuple[np.ndarray, float]:
    """Angles of six restricted five-mode states maximizing h_6.

    Recomputed by restricted-family ascent rather than transcribed, since
    the family is expressive enough to reach the d = 5 maximum 1.400.
    """
    params, value = maximize_pure_family(
        make_hn(6),
        lambda p: prepare_5mode(*p),
        params_per_state=7,
        restarts=restarts,
        seed=seed,
    )
    params.setflags(write=False)
    return params, value


# --- counts, noise, dispersion --------------------------------------------

@dataclass(frozen=True)
class CountRecord:
    """Photon counts at the projection port and everywhere else.

    ``sigma_c`` is the Poissonian standard error sqrt(k)/N per port.
    Counts sum to at most ``total_trials`` (lost trials are unrecorded).
    """

    counts: tuple[int, ...]
    total_trials: int
    estimated_probability: tuple[float, ...]
    sigma_c: tuple[float, ...]


@dataclass(frozen=True)
class CountEstimate:
    """Inequality value assembled from per-edge count records."""

    value: float
    sigma: float
    records: dict[tuple[int, int], CountRecord]


@dataclass(frozen=True)
class AngleNoise:
    """Angle-setting error model: relative scale error and additive bias.

    Each angle a is drawn as ``a (1 + relative u) + additive v`` with u, v
    independent in [-1, 1].
    """

    relative: float = 0.0
    additive: float = 0.0

    def __post_init__(self):
        if self.relative < 0 or self.additive < 0:
            raise ValidationError("noise magnitudes must be nonnegative")

    def perturb(self, angles: np.ndarray, rng: np.random.Generator, corners: bool = False) -> np.ndarray:
        """One perturbation draw; ``corners=True`` samples the error-cube corners."""
        if corners:
            u = np.sign(rng.uniform(-1.0, 1.0, angles.shape))
            v = np.sign(rng.uniform(-1.0, 1.0, angles.shape))
        else:
            u = rng.uniform(-1.0, 1.0, angles.shape)
            v = rng.uniform(-1.0, 1.0, angles.shape)
        return angles * (1.0 + self.relative * u) + self.additive * v


@dataclass(frozen=True)
class DispersionResult:
    """Envelope of an inequality value under angle-setting errors."""

    min_value: float
    max_value: float
    values: np.ndarray
    ideal_value: float

    @property
    def half_width(self) -> float:
        return (self.max_value - self.min_value) / 2.0


def hyperspherical_angles(state: PureState) -> tuple[np.ndarray, np.ndarray]:
    """Chain angles (thetas, phis) of any pure state.

    ``a_0 = cos(t_1)``, ``a_k = prod_{j<=k} sin(t_j) cos(t_{k+1}) e^{i p_k}``
    with the last cosine absent on the final level; the global phase is
    fixed so a_0 is real nonnegative. Inverse of `state_from_hyperspherical`.
    """
    v = np.asarray(state.amplitudes)
    d = v.size
    if d < 2:
        return np.zeros(0), np.zeros(0)
    if abs(v[0]) > 0:
        v = v * np.exp(-1j * np.angle(v[0]))
    mags = np.abs(v)
    tails = np.sqrt(np.maximum(np.cumsum(mags[::-1] ** 2)[::-1], 0.0))
    thetas = np.array([np.arctan2(tails[k + 1] if k + 1 < d else 0.0, mags[k])
                       for k in range(d - 1)])
    phis = np.array([float(np.angle(v[k])) if mags[k] > 0 else 0.0 for k in range(1, d)])
    return thetas, phis


def state_from_hyperspherical(thetas: np.ndarray, phis: np.ndarray) -> PureState:
    """Rebuild a pure state from chain angles; unit norm by construction."""
    thetas, phis = np.asarray(thetas, dtype=float), np.asarray(phis, dtype=float)
    d = thetas.size + 1
    if phis.size != d - 1:
        raise ValidationError("need one phase per level past the first")
    amps = np.zeros(d, dtype=np.complex128)
    prefix = 1.0
    for k in range(d - 1):
        amps[k] = prefix * np.cos(thetas[k]) * (np.exp(1j * phis[k - 1]) if k >= 1 else 1.0)
        prefix *= np.sin(thetas[k])
    amps[d - 1] = prefix * np.exp(1j * phis[d - 2])
    return PureState.normalized(amps)


def overlap_via_counts(
    prep: PureState,
    meas: PureState,
    trials: int,
    seed,
    noise: AngleNoise | None = None,
    loss: float = 0.0,
    dark: float = 0.0,
) -> CountRecord:
    """Estimate |<meas|prep>|^2 from simulated photon counting.

    Each heralded photon is one Bernoulli trial at the projection port.
    With ``noise``, the chain angles of both stages are perturbed
    independently before computing the detection probability. Lost trials
    record nothing; dark counts fire on otherwise empty trials, so counts
    never exceed ``trials``.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    if not 0.0 <= loss < 1.0 or not 0.0 <= dark < 1.0:
        raise ValidationError("loss and dark rates must lie in [0, 1)")
    rng = make_rng(seed)
    if noise is not None:
        t_p, p_p = hyperspherical_angles(prep)
        t_m, p_m = hyperspherical_angles(meas)
        prep = state_from_hyperspherical(noise.perturb(t_p, rng), noise.perturb(p_p, rng))
        meas = state_from_hyperspherical(noise.perturb(t_m, rng), noise.perturb(p_m, rng))
    p = overlap(prep, meas)
    kept = int(rng.binomial(trials, 1.0 - loss)) if loss > 0 else trials
    hits = int(rng.binomial(kept, p))
    dark_hits = int(rng.binomial(trials - kept, dark)) if dark > 0 and trials > kept else 0
    port0 = hits + dark_hits
    port_rest = kept - hits
    n = trials
    return CountRecord(
        counts=(port0, port_rest),
        total_trials=n,
        estimated_probability=(port0 / n, port_rest / n),
        sigma_c=(float(np.sqrt(port0)) / n, float(np.sqrt(port_rest)) / n),
    )


def estimate_inequality_via_counts(
    spec: InequalitySpec,
    states: Sequence[PureState],
    trials_per_overlap: int,
    seed: int,
    noise: AngleNoise | None = None,
) -> CountEstimate:
    """Estimate an inequality value by count-sampling every edge overlap.

    Each edge gets its own child stream, so the result is deterministic
    and independent of evaluation order. The quoted ``sigma`` combines the
    per-edge Poissonian errors in quadrature with the edge weights.
    """
    if len(states) != spec.n:
        raise ValidationError(f"spec expects {spec.n} states, got {len(states)}")
    edges = sorted(spec.weights)
    seeds = split_seeds(seed, len(edges))
    records: dict[tuple[int, int], CountRecord] = {}
    value = 0.0
    var = 0.0
    for (i, j), ss in zip(edges, seeds):
        rec = overlap_via_counts(states[i], states[j], trials_per_overlap,
                                 np.random.Generator(np.random.PCG64(ss)), noise=noise)
        records[(i, j)] = rec
        w = spec.weights[(i, j)]
        value += w * rec.estimated_probability[0]
        var += (w * rec.sigma_c[0]) ** 2
    return CountEstimate(value=value, sigma=float(np.sqrt(var)), records=records)


def dispersion(
    spec: InequalitySpec,
    state_params: Sequence[np.ndarray],
    eps: float,
    delta: float,
    trials_mc: int,
    seed: int = 0,
    family: Callable[[np.ndarray], PureState] | None = None,
) -> DispersionResult:
    """Envelope of the inequality value under angle-setting errors.

    ``eps`` is the relative error and ``delta`` the additive bias (radians)
    on every circuit angle. Preparation and measurement stages are
    perturbed independently, so the sampled overlap matrix is generally
    not symmetric; the functional reads the (i, j), i < j entries with
    state i prepared and state j measured. Half of the Monte-Carlo draws
    sample the corners of the error cube, where the extremes of a locally
    linear response live, which tightens the envelope estimate.

    ``state_params`` holds one angle vector per state for ``family``
    (default: the hyperspherical chain, angles then phases concatenated).
    """
    if eps < 0 or delta < 0:
        raise ValidationError("error magnitudes must be nonnegative")
    if trials_mc < 1:
        raise ValidationError("need at least one Monte-Carlo trial")
    if family is None:
        family = _hyperspherical_family
    params = [np.asarray(p, dtype=float) for p in state_params]
    if len(params) != spec.n:
        raise ValidationError(f"spec expects {spec.n} parameter vectors")
    noise = AngleNoise(relative=eps, additive=delta)
    rng = make_rng(seed)
    ideal = [family(p) for p in params]
    ideal_value = evaluate_ordered(spec, ideal, ideal)
    values = np.empty(trials_mc)
    for t in range(trials_mc):
        corners = t % 2 == 1
        prep = [family(noise.perturb(p, rng, corners=corners)) for p in params]
        meas = [family(noise.perturb(p, rng, corners=corners)) for p in params]
        values[t] = evaluate_ordered(spec, prep, meas)
    values.setflags(write=False)
    return DispersionResult(
        min_value=float(values.min()),
        max_value=float(values.max()),
        values=values,
        ideal_value=ideal_value,
    )


def _hyperspherical_family(p: np.ndarray) -> PureState:
    # p concatenates d-1 chain angles and d-1 phases
    half = p.size // 2
    return state_from_hyperspherical(p[:half], p[half:])


def evaluate_ordered(spec: InequalitySpec, prep: Sequence[PureState], meas: Sequence[PureState]) -> float:
    """Apply the functional with edge (i, j) read as |<meas_j|prep_i>|^2."""
    total = 0.0
    for (i, j), w in spec.weights.items():
        z = np.vdot(meas[j].amplitudes, prep[i].amplitudes)
        total += w * (z.real**2 + z.imag**2)
    return float(total)


# --- thermo-optic calibration ----------------------------------------------

@dataclass(frozen=True)
class CalibrationModel:
    """Phase response of the heaters: theta_i = theta0_i + sum_j alpha_ij I_j^2 (1 + beta_j I_j^2).

    ``alpha`` couples heater currents to cell phases; thermal crosstalk is
    negligible between mesh columns, so entries pairing different columns
    must vanish.
    """

    theta0: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    heater_columns: tuple[int, ...]

    def __post_init__(self):
        t0 = np.array(self.theta0, dtype=float)
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        k = t0.size
        if a.shape != (k, k) or b.shape != (k,):
            raise ValidationError("alpha must be k x k and beta length k")
        cols = tuple(int(c) for c in self.heater_columns)
        if len(cols) != k:
            raise ValidationError("need one column index per heater")
        for i in range(k):
            for j in range(k):
                if a[i, j] != 0.0 and cols[i] != cols[j]:
                    raise ValidationError(
                        f"alpha[{i},{j}] couples heaters in different columns")
        for arr in (t0, a, b):
            arr.setflags(write=False)
        object.__setattr__(self, "theta0", t0)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "heater_columns", cols)


def calibration_forward(model: CalibrationModel, currents: Sequence[float]) -> np.ndarray:
    """Cell phases produced by the given heater currents (amperes)."""
    i = np.asarray(currents, dtype=float)
    if i.shape != model.theta0.shape:
        raise ValidationError("need one current per heater")
    if np.any(~np.isfinite(i)) or np.any(i < 0):
        raise ValidationError("currents must be finite and nonnegative")
    drive = i**2 * (1.0 + model.beta * i**2)
    return model.theta0 + model.alpha @ drive


def _demodulation_init(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """Initial (theta0, alpha) for y ~ cos(theta0 + alpha x).

    Scans the demodulated response z(a) = mean(y exp(-i a x)) over positive
    frequencies up to the sampling limit; the peak sits at the true alpha
    with phase theta0. Robust to the arccos fold ambiguity and to noise,
    unlike pointwise phase unwrapping.
    """
    x_span = float(x[-1] - x[0])
    dx = float(np.max(np.diff(x))) if x.size > 1 else 1.0
    a_lo = 0.2 * 2.0 * np.pi / max(x_span, 1e-12)
    a_hi = np.pi / max(dx, 1e-12)
    alphas = np.linspace(a_lo, a_hi, 4000)
    z = (y[None, :] * np.exp(-1j * alphas[:, None] * x[None, :])).mean(axis=1)
    k = int(np.argmax(np.abs(z)))
    return float(np.angle(z[k])), float(alphas[k])


def _power_model(i: np.ndarray, theta0: float, alpha: float, beta: float) -> np.ndarray:
    return (1.0 + np.cos(theta0 + alpha * i**2 * (1.0 + beta * i**2))) / 2.0


def _fit_single_heater(currents: np.ndarray, powers: np.ndarray) -> tuple[float, float, float, float]:
    """Staged fit of one heater's (theta0, alpha, beta) from a power sweep.

    Demodulation in the I^2 coordinate initializes (theta0, alpha) with
    beta = 0; a least-squares pass on the power curve then refines all
    three. Coverage is judged from the fitted model, not the raw sweep.
    """
    if currents.size < 8:
        raise CalibrationCoverageError(
            f"need at least 8 sweep points per heater, got {currents.size}")
    order = np.argsort(currents)
    i_s, p_s = currents[order], np.clip(powers[order], 0.0, 1.0)
    x = i_s**2
    theta0_0, alpha_0 = _demodulation_init(x, 2.0 * p_s - 1.0)
    try:
        popt, _ = curve_fit(_power_model, i_s, p_s,
                            p0=[theta0_0, alpha_0, 0.0], maxfev=20000)
        theta0_f, alpha_f, beta_f = (float(v) for v in popt)
    except RuntimeError:
        theta0_f, alpha_f, beta_f = theta0_0, alpha_0, 0.0
    if alpha_f < 0.0:
        # the power curve cannot tell (theta0, alpha) from (-theta0, -alpha);
        # heating only ever adds phase, so pin the positive branch
        theta0_f, alpha_f = -theta0_f, -alpha_f
    residual = float(np.sqrt(np.mean((_power_model(i_s, theta0_f, alpha_f, beta_f) - p_s) ** 2)))
    span = abs(alpha_f) * float(x[-1]) * abs(1.0 + beta_f * float(x[-1]))
    if span < 2.0 * np.pi:
        raise CalibrationCoverageError(
            f"sweep induces only {span:.3f} rad of phase; need at least 2*pi "
            "to identify the response")
    return float(np.mod(theta0_f, 2.0 * np.pi)), alpha_f, beta_f, residual


def calibration_fit(
    sweeps: Sequence[tuple[np.ndarray, np.ndarray]],
    heater_columns: Sequence[int] | None = None,
) -> tuple[CalibrationModel, np.ndarray]:
    """Fit the calibration model from per-heater (current, cross-power) sweeps.

    Heaters are characterized in isolation, so the fitted coupling matrix
    is diagonal. Returns the model and the per-heater RMS power residuals.
    Raises `CalibrationCoverageError` when a sweep is too short or spans
    less than 2*pi of induced phase (a flat sweep is unidentifiable).
    """
    k = len(sweeps)
    if k == 0:
        raise ValidationError("need at least one heater sweep")
    cols = tuple(range(k)) if heater_columns is None else tuple(int(c) for c in heater_columns)
    theta0 = np.zeros(k)
    alpha = np.zeros((k, k))
    beta = np.zeros(k)
    residuals = np.zeros(k)
    for h, (cur, pw) in enumerate(sweeps):
        cur = np.asarray(cur, dtype=float)
        pw = np.asarray(pw, dtype=float)
        if cur.shape != pw.shape:
            raise ValidationError(f"sweep {h}: current and power arrays differ in length")
        theta0[h], alpha[h, h], beta[h], residuals[h] = _fit_single_heater(cur, pw)
    return CalibrationModel(theta0=theta0, alpha=alpha, beta=beta, heater_columns=cols), residuals


# --- fidelity ---------------------------------------------------------------

def fidelity(t: np.ndarray, t_exp: np.ndarray) -> float:
    """Amplitude fidelity (1/m) Tr(|T^dagger| |T_exp|), moduli taken elementwise.

    Insensitive to output phases: multiplying ``t_exp`` by any diagonal
    phase matrix leaves it unchanged; equals 1 iff the moduli coincide.
    """
    a = np.asarray(t)
    b = np.asarray(t_exp)
    if a.shape != b.shape or a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError("fidelity needs two square matrices of equal dimension")
    return float(np.sum(np.abs(a) * np.abs(b)) / a.shape[0])


@dataclass(frozen=True)
class FidelityStudy:
    """Fidelity distribution of a mesh with mis-set phases."""

    mean: float
    std: float
    samples: np.ndarray
    sigma_rad: float


def perturbed_mesh_fidelity_study(
    modes: int = 6,
    n_unitaries: int = 100,
    sigma_rad: float = 0.1,
    seed: int = 0,
) -> FidelityStudy:
    """Implementation accuracy of random unitaries under phase-setting noise.

    For each Haar target: decompose, add independent Gaussian errors of
    ``sigma_rad`` radians to every internal and external phase, recompose,
    and score with `fidelity`. The default error scale is chosen so a
    six-mode mesh lands in the high-99% fidelity regime typical of a
    calibrated thermo-optic device.
    """
    rng = make_rng(seed)
    samples = np.empty(n_unitaries)
    for k in range(n_unitaries):
        target = haar_random_unitary(modes, rng)
        config = decompose(target)
        noisy_cells = tuple(
            MeshCell(c.row, c.column,
                     c.theta + rng.normal(0.0, sigma_rad),
                     c.phi + rng.normal(0.0, sigma_rad))
            for c in config.cells
        )
        noisy = MeshConfig(modes=modes, cells=noisy_cells, output_phases=config.output_phases)
        samples[k] = fidelity(target, compose(noisy))
    samples.setflags(write=False)
    return FidelityStudy(mean=float(samples.mean()), std=float(samples.std()),
                         samples=samples, sigma_rad=sigma_rad)
