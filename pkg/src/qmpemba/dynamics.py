"""Time evolution, distances to stationarity, and decay-rate fits.

Two independent propagation routes are provided: mode summation through a
spectral decomposition, and fixed-step fourth-order Runge-Kutta directly on
the master equation written with the model operators.  The second never
touches the eigendecomposition and serves as the cross-check for the first.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NoConvergence, PoorFit, ShapeMismatch, StepTooLarge, WindowEmpty
from .linalg import as_matrix
from .spectral import SpectralDecomposition
from .superop import LindbladModel, build_liouvillian, vec

RK4_STEP_FACTOR = 0.05

FIT_WINDOW_UNROTATED = (1e-1, 1e-4)
FIT_WINDOW_ROTATED = (1e-2, 1e-6)
FIT_R2_FLOOR = 0.99


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing, non-negative times with a spacing tag."""

    points: np.ndarray
    spacing: str = "linear"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("time grid needs at least two points")
        if pts[0] < 0 or np.any(np.diff(pts) <= 0):
            raise ValueError("time grid must be strictly increasing and start at t >= 0")
        object.__setattr__(self, "points", pts)

    @classmethod
    def linear(cls, t_start: float, t_stop: float, n: int) -> "TimeGrid":
        return cls(points=np.linspace(t_start, t_stop, n), spacing="linear")

    @classmethod
    def geometric(
        cls, t_start: float, t_stop: float, n: int, include_zero: bool = False
    ) -> "TimeGrid":
        if t_start <= 0:
            raise ValueError("geometric grid needs t_start > 0")
        pts = np.geomspace(t_start, t_stop, n - 1 if include_zero else n)
        if include_zero:
            pts = np.concatenate([[0.0], pts])
        return cls(points=pts, spacing="logarithmic")


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log-distance over a distance window."""

    rate: float
    r_squared: float
    window: tuple
    t_start: float
    t_stop: float
    n_points: int

    @property
    def poor(self) -> bool:
        return self.r_squared < FIT_R2_FLOOR


@dataclass(frozen=True)
class TrajectoryRecord:
    times: np.ndarray
    distances: np.ndarray
    slow_overlaps: np.ndarray  # Tr(l_2 rho_t) along the trajectory
    source: str  # "spectral" | "integrator" | "hybrid"
    fit: Optional[DecayFit] = None
    handoff_time: Optional[float] = None  # hybrid: first spectrally-evolved time


def _check_density(rho, d: int, tol: float = 1e-10) -> np.ndarray:
    rho = as_matrix(rho)
    if rho.shape != (d, d):
        raise ShapeMismatch(f"state shape {rho.shape} does not match dimension {d}")
    if abs(np.trace(rho) - 1.0) > tol:
        raise ValueError(f"state trace {np.trace(rho):.12g} differs from 1 beyond {tol:g}")
    if float(np.max(np.abs(rho - rho.conj().T))) > tol:
        raise ValueError(f"state is not Hermitian within {tol:g}")
    return rho


def evolve_spectral(dec: SpectralDecomposition, rho0, t: float) -> np.ndarray:
    """State at time t from the mode expansion.

    Sums ``r_1 + sum_k exp(t lam_k) Tr(l_k rho0) r_k``; conjugate mode pairs
    contribute adjoint terms, so symmetrizing the sum removes their O(eps)
    anti-Hermitian residue without touching the physics.
    """
    if t < 0:
        raise ValueError(f"time must be non-negative, got {t}")
    return _evolve_times(dec, rho0, np.array([float(t)]))[0]


def evolve_spectral_grid(dec: SpectralDecomposition, rho0, grid: TimeGrid) -> np.ndarray:
    """Stack of states at all grid times via one mode-summation product."""
    return _evolve_times(dec, rho0, grid.points)


def _evolve_times(dec: SpectralDecomposition, rho0, times: np.ndarray) -> np.ndarray:
    d = dec.dim
    rho0 = _check_density(rho0, d)
    coeff = dec.left_pairing_rows() @ vec(rho0)
    phases = np.exp(np.outer(times, dec.eigenvalues[1:]))
    flat = (phases * coeff[1:][None, :]) @ dec.right_vectors().T[1:, :]
    states = flat.reshape(-1, d, d).transpose(0, 2, 1)
    states = states + dec.stationary_state[None, :, :] * coeff[0]
    return (states + states.conj().transpose(0, 2, 1)) / 2


def _lindblad_rhs(h: np.ndarray, jumps, rho: np.ndarray) -> np.ndarray:
    out = -1j * (h @ rho - rho @ h)
    for l_op in jumps:
        ld = l_op.conj().T
        ldl = ld @ l_op
        out += l_op @ rho @ ld - 0.5 * (ldl @ rho + rho @ ldl)
    return out


def integrator_step_bound(model: LindbladModel) -> float:
    """Largest stable RK4 step: 0.05 over the generator's infinity norm."""
    gen = build_liouvillian(model).matrix
    return RK4_STEP_FACTOR / float(np.linalg.norm(gen, np.inf))


def evolve_integrator(
    model: LindbladModel, rho0, grid: TimeGrid, h_max: Optional[float] = None
) -> np.ndarray:
    """Fixed-step RK4 integration of the master equation, one state per grid time.

    The right-hand side is evaluated directly from the model operators; the
    step size is ``h_max`` (default: the stability bound) subdivided to land
    exactly on every grid point, so a given (model, state, grid) is bitwise
    reproducible.
    """
    d = model.dim
    rho = _check_density(rho0, d).copy()
    bound = integrator_step_bound(model)
    if h_max is None:
        h_max = bound
    elif h_max > bound:
        raise StepTooLarge(f"step {h_max:g} exceeds stability bound {bound:g}")
    h_op = model.hamiltonian
    jumps = model.jumps
    out = np.empty((grid.points.size, d, d), dtype=complex)
    t_prev = grid.points[0]
    if t_prev > 0:
        _integrate_interval(h_op, jumps, rho, 0.0, t_prev, h_max)
    out[0] = rho
    for i in range(1, grid.points.size):
        _integrate_interval(h_op, jumps, rho, t_prev, grid.points[i], h_max)
        out[i] = rho
        t_prev = grid.points[i]
    return out


def _integrate_interval(h_op, jumps, rho, t0, t1, h_max):
    span = t1 - t0
    n_steps = max(1, int(np.ceil(span / h_max)))
    h = span / n_steps
    for _ in range(n_steps):
        k1 = _lindblad_rhs(h_op, jumps, rho)
        k2 = _lindblad_rhs(h_op, jumps, rho + 0.5 * h * k1)
        k3 = _lindblad_rhs(h_op, jumps, rho + 0.5 * h * k2)
        k4 = _lindblad_rhs(h_op, jumps, rho + h * k3)
        rho += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def hs_distance(rho, sigma) -> float:
    """Hilbert-Schmidt (Frobenius) distance sqrt(Tr[(rho - sigma)^2])."""
    rho, sigma = as_matrix(rho), as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise ShapeMismatch(f"shapes {rho.shape} and {sigma.shape} differ")
    for name, m in (("rho", rho), ("sigma", sigma)):
        if float(np.max(np.abs(m - m.conj().T))) > 1e-8:
            raise ValueError(f"{name} is not Hermitian within 1e-8")
    return float(np.linalg.norm(rho - sigma, "fro"))


def fit_decay_rate(
    times: np.ndarray, distances: np.ndarray, window: tuple
) -> DecayFit:
    """|slope| of log-distance over the longest contiguous run inside ``window``.

    ``window = (hi, lo)`` selects times with ``lo <= E_t <= hi``.  A fit with
    R^2 below 0.99 is reported with a ``PoorFit`` warning, not an error.
    """
    hi, lo = window
    if not (hi > lo > 0):
        raise ValueError(f"window must satisfy hi > lo > 0, got {window}")
    times = np.asarray(times, dtype=float)
    distances = np.asarray(distances, dtype=float)
    idx = np.flatnonzero((distances <= hi) & (distances >= lo))
    if idx.size < 2:
        raise WindowEmpty(f"fewer than two trajectory points inside window {window}")
    runs = np.split(idx, np.flatnonzero(np.diff(idx) != 1) + 1)
    run = max(runs, key=len)
    if run.size < 2:
        raise WindowEmpty(f"no contiguous run of two points inside window {window}")
    tt = times[run]
    log_e = np.log(distances[run])
    design = np.vstack([tt, np.ones_like(tt)]).T
    sol, *_ = np.linalg.lstsq(design, log_e, rcond=None)
    resid = log_e - design @ sol
    ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    fit = DecayFit(
        rate=float(abs(sol[0])),
        r_squared=r2,
        window=(float(hi), float(lo)),
        t_start=float(tt[0]),
        t_stop=float(tt[-1]),
        n_points=int(run.size),
    )
    if fit.poor:
        warnings.warn(
            f"decay fit R^2 = {r2:.4f} below {FIT_R2_FLOOR}", PoorFit, stacklevel=2
        )
    return fit


def _record(dec, states, grid, source) -> TrajectoryRecord:
    ell2 = dec.left_modes[1]
    dists = np.array([hs_distance(s, dec.stationary_state) for s in states])
    overlaps = np.einsum("ij,tji->t", ell2, states)
    return TrajectoryRecord(
        times=grid.points.copy(),
        distances=dists,
        slow_overlaps=overlaps,
        source=source,
    )


def spectral_trajectory(
    dec: SpectralDecomposition, rho0, grid: TimeGrid
) -> TrajectoryRecord:
    """Distances to stationarity and slow-mode overlaps via mode summation."""
    return _record(dec, evolve_spectral_grid(dec, rho0, grid), grid, "spectral")


def integrator_trajectory(
    model: LindbladModel, dec: SpectralDecomposition, rho0, grid: TimeGrid
) -> TrajectoryRecord:
    """Same observables with states from the RK4 route."""
    return _record(dec, evolve_integrator(model, rho0, grid), grid, "integrator")


def robust_trajectory(
    model: LindbladModel,
    dec: SpectralDecomposition,
    rho0,
    grid: TimeGrid,
    agreement_tol: float = 1e-6,
    max_burn_steps: int = 2_000_000,
) -> TrajectoryRecord:
    """Trajectory that is valid at every grid time, even on hard eigenbases.

    The mode sum is exact once the ill-conditioned fast modes have decayed,
    but near t=0 its reconstruction defect (measurable as the distance between
    the summed modes and the actual initial state) can be large when the
    eigenvector basis is close to defective.  When that happens, the early
    segment is integrated directly with RK4 and handed over to the mode sum at
    the first grid time where the two routes agree to ``agreement_tol``; the
    agreement check makes the handoff self-validating.
    """
    d = dec.dim
    rho0 = _check_density(rho0, d)
    states = evolve_spectral_grid(dec, rho0, grid)
    defect0 = float(np.max(np.abs(_evolve_times(dec, rho0, np.zeros(1))[0] - rho0)))
    zero_rows = grid.points == 0.0
    states[zero_rows] = rho0
    if defect0 <= agreement_tol:
        return _record(dec, states, grid, "spectral")

    h_max = integrator_step_bound(model)
    rho = rho0.copy()
    t_prev = 0.0
    spent = 0
    handoff = None
    for i, t in enumerate(grid.points):
        if t == 0.0:
            continue
        spent += max(1, int(np.ceil((t - t_prev) / h_max)))
        if spent > max_burn_steps:
            raise NoConvergence(
                "mode sum and integrator never agreed within the step budget; "
                f"initial reconstruction defect was {defect0:.3e}"
            )
        _integrate_interval(model.hamiltonian, model.jumps, rho, t_prev, t, h_max)
        t_prev = t
        if float(np.max(np.abs(states[i] - rho))) <= agreement_tol:
            handoff = float(t)
            states[i] = rho
            break
        states[i] = rho
    return dataclasses.replace(_record(dec, states, grid, "hybrid"), handoff_time=handoff)


def find_plateau(
    times: np.ndarray,
    values: np.ndarray,
    span: float,
    max_rel_variation: float = 0.10,
) -> Optional[tuple[int, int]]:
    """Earliest flat stretch of length >= span, extended while it stays flat.

    Returns ``(i, j)`` with ``times[j] >= times[i] + span`` and
    ``(max - min)/max < max_rel_variation`` over ``values[i:j+1]``, where j is
    pushed as far right as the variation bound allows; None if no window of
    the minimum span qualifies.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)

    def flat(i, j):
        seg = values[i : j + 1]
        top = float(np.max(seg))
        return top > 0 and (top - float(np.min(seg))) / top < max_rel_variation

    for i in range(times.size):
        j = int(np.searchsorted(times, times[i] + span))
        if j >= times.size:
            return None
        if flat(i, j):
            while j + 1 < times.size and flat(i, j + 1):
                j += 1
            return i, j
    return None
