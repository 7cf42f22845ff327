"""Construction of the overlap-removing initial unitary.

Given the Hermitian slow left mode and a pure initial state, builds the
unitary ``U = U2 @ U1`` that makes the rotated state trace-orthogonal to the
slow mode: ``U1`` maps the state onto the slow mode's leading eigenvector, and
``U2`` is either a two-level rotation by the closing angle (generic case) or a
basis transposition onto a null eigenvector (zero-eigenvalue case).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    NoOppositeSign,
    NotNormalized,
    NoZeroEigenvalue,
    SameSign,
    ShapeMismatch,
    ZeroBranch,
)
from .linalg import hermitian_eig
from .spectral import SpectralDecomposition, hermitize_slow_mode

TOL_ALPHA_FACTOR = 1e-10

ROTATION = "rotation"
PERMUTATION = "permutation"


@dataclass(frozen=True)
class SlowModeSpectrum:
    """Eigensystem of the Hermitian slow mode with the two selected levels.

    ``alphas`` are sorted descending with ``phis`` the matching orthonormal
    column eigenvectors.  ``index_1`` points at the largest-modulus eigenvalue
    (ties resolved toward the positive one); ``index_n`` at the rotation
    partner: the largest-modulus eigenvalue of opposite sign, or the
    near-zero eigenvalue when the zero branch is taken.
    """

    alphas: np.ndarray
    phis: np.ndarray
    index_1: int
    index_n: int
    zero_branch: bool
    tol_alpha: float

    @property
    def alpha_1(self) -> float:
        return float(self.alphas[self.index_1])

    @property
    def alpha_n(self) -> float:
        return float(self.alphas[self.index_n])


@dataclass(frozen=True)
class MpembaRotation:
    """The assembled unitary with its ingredients and achieved residual."""

    u1: np.ndarray
    u2: np.ndarray
    unitary: np.ndarray
    branch: str
    s_bar: Optional[float]
    coupling: Optional[np.ndarray]  # Hermitian two-level generator of U2
    residual_overlap: float
    initial_overlap: float
    slow_spectrum: SlowModeSpectrum


def slow_mode_spectrum(ell2, tol_alpha_factor: float = TOL_ALPHA_FACTOR) -> SlowModeSpectrum:
    """Diagonalize the Hermitian slow mode and select the working levels.

    The eigenvalue set of a valid slow mode is trace-orthogonal to a positive
    matrix, so it must contain two opposite signs or a zero; if neither is
    found the input is corrupt and ``NoOppositeSign`` is raised.
    """
    eig = hermitian_eig(ell2)
    alphas = eig.eigenvalues[::-1].copy()
    phis = eig.eigenvectors[:, ::-1].copy()
    tol_alpha = tol_alpha_factor * float(np.max(np.abs(alphas)))

    mods = np.abs(alphas)
    top = float(np.max(mods))
    candidates = np.flatnonzero(mods == top)
    index_1 = int(candidates[0])
    for c in candidates:
        if alphas[c] > 0:
            index_1 = int(c)
            break

    sign_1 = np.sign(alphas[index_1])
    opposite = np.flatnonzero((np.sign(alphas) == -sign_1) & (mods > tol_alpha))
    near_zero = np.flatnonzero(mods <= tol_alpha)
    if opposite.size:
        index_n = int(opposite[np.argmax(mods[opposite])])
        zero_branch = False
    elif near_zero.size:
        index_n = int(near_zero[np.argmin(mods[near_zero])])
        zero_branch = True
    else:
        raise NoOppositeSign(
            "all eigenvalues of the slow mode share one strict sign; "
            "a valid slow mode cannot be sign-definite"
        )
    return SlowModeSpectrum(
        alphas=alphas,
        phis=phis,
        index_1=index_1,
        index_n=index_n,
        zero_branch=zero_branch,
        tol_alpha=tol_alpha,
    )


def _check_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ShapeMismatch(f"state must be a vector, got shape {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-12:
        raise NotNormalized(f"state norm {np.linalg.norm(psi):.15g} is not 1")
    return psi


def build_u1(psi, phis) -> np.ndarray:
    """Unitary mapping an auxiliary basis with ``psi`` first onto ``phis``.

    The auxiliary basis starts from ``psi`` and is completed by Gram-Schmidt
    over the standard basis, dropping the standard vector with the largest
    overlap with ``psi`` (processed in index order); any completion yields a
    valid map, this one is deterministic.  The result sends ``psi`` to the
    first column of ``phis``.
    """
    psi = _check_state(psi)
    phis = np.asarray(phis, dtype=complex)
    d = psi.size
    if phis.shape != (d, d):
        raise ShapeMismatch(f"basis shape {phis.shape} does not match state length {d}")
    if float(np.max(np.abs(phis.conj().T @ phis - np.eye(d)))) > 1e-10:
        raise ValueError("phis columns are not orthonormal within 1e-10")

    drop = int(np.argmax(np.abs(psi)))
    aux = np.empty((d, d), dtype=complex)
    aux[:, 0] = psi
    col = 1
    for j in range(d):
        if j == drop:
            continue
        v = np.zeros(d, dtype=complex)
        v[j] = 1.0
        for _ in range(2):  # re-orthogonalize once ("twice is enough")
            v -= aux[:, :col] @ (aux[:, :col].conj().T @ v)
        norm = np.linalg.norm(v)
        if norm < 1e-10:
            raise ValueError("auxiliary basis completion degenerated")
        aux[:, col] = v / norm
        col += 1
    return phis @ aux.conj().T


def rotation_angle(alpha_1: float, alpha_n: float) -> float:
    """Angle closing the two-level overlap: arctan(sqrt(|alpha_1/alpha_n|))."""
    if alpha_1 * alpha_n >= 0:
        raise SameSign(
            f"rotation angle requires opposite signs, got {alpha_1:.6g} and {alpha_n:.6g}"
        )
    return float(np.arctan(np.sqrt(abs(alpha_1 / alpha_n))))


def two_level_coupling(levels: SlowModeSpectrum) -> np.ndarray:
    """Hermitian generator |phi_1><phi_n| + |phi_n><phi_1| of the rotation."""
    p1 = levels.phis[:, levels.index_1]
    pn = levels.phis[:, levels.index_n]
    return np.outer(p1, pn.conj()) + np.outer(pn, p1.conj())


def build_rotation(levels: SlowModeSpectrum, s: float) -> np.ndarray:
    """Two-level rotation ``1 + (cos s - 1) F^2 - i sin(s) F`` (unitary, U(0)=1)."""
    if levels.zero_branch:
        raise ZeroBranch(
            "rotation undefined on the zero branch; use build_permutation"
        )
    p1 = levels.phis[:, levels.index_1]
    pn = levels.phis[:, levels.index_n]
    f = np.outer(p1, pn.conj()) + np.outer(pn, p1.conj())
    f2 = np.outer(p1, p1.conj()) + np.outer(pn, pn.conj())
    d = p1.size
    return np.eye(d, dtype=complex) + (np.cos(s) - 1.0) * f2 - 1j * np.sin(s) * f


def build_permutation(levels: SlowModeSpectrum) -> np.ndarray:
    """Transposition of phi_1 with the null eigenvector, identity elsewhere."""
    if not levels.zero_branch:
        raise NoZeroEigenvalue(
            "permutation branch requires a near-zero eigenvalue of the slow mode"
        )
    p1 = levels.phis[:, levels.index_1]
    ph = levels.phis[:, levels.index_n]
    d = p1.size
    u = np.eye(d, dtype=complex)
    u -= np.outer(p1, p1.conj()) + np.outer(ph, ph.conj())
    u += np.outer(ph, p1.conj()) + np.outer(p1, ph.conj())
    return u


def _overlap(ell2: np.ndarray, u: np.ndarray, rho0: np.ndarray) -> complex:
    return complex(np.trace(ell2 @ u @ rho0 @ u.conj().T))


def optimal_unitary(dec: SpectralDecomposition, psi) -> MpembaRotation:
    """Compose the full slow-mode-removing unitary for a pure initial state.

    Uses the rotation branch whenever opposite-sign eigenvalues exist (it
    zeroes the overlap exactly in exact arithmetic); the permutation branch,
    which leaves a residual bounded by the zero tolerance, only otherwise.
    """
    psi = _check_state(psi)
    ell2 = hermitize_slow_mode(dec)
    levels = slow_mode_spectrum(ell2)

    d = psi.size
    order = [levels.index_1] + [k for k in range(d) if k != levels.index_1]
    u1 = build_u1(psi, levels.phis[:, order])

    if levels.zero_branch:
        u2 = build_permutation(levels)
        s_bar = None
        coupling = None
        branch = PERMUTATION
    else:
        s_bar = rotation_angle(levels.alpha_1, levels.alpha_n)
        u2 = build_rotation(levels, s_bar)
        coupling = two_level_coupling(levels)
        branch = ROTATION

    unitary = u2 @ u1
    rho0 = np.outer(psi, psi.conj())
    return MpembaRotation(
        u1=u1,
        u2=u2,
        unitary=unitary,
        branch=branch,
        s_bar=s_bar,
        coupling=coupling,
        residual_overlap=abs(_overlap(ell2, unitary, rho0)),
        initial_overlap=float(np.real(np.vdot(psi, ell2 @ psi))),
        slow_spectrum=levels,
    )


def overlap_scan(dec: SpectralDecomposition, psi, s_grid) -> list[tuple[float, float]]:
    """Slow-mode overlap of the rotated state at each angle of ``s_grid``.

    The scan evaluates the overlap through the actual rotated state; it
    equals ``alpha_1 cos^2(s) + alpha_n sin^2(s)`` pointwise, with the
    endpoints reproducing the two selected eigenvalues.
    """
    psi = _check_state(psi)
    ell2 = hermitize_slow_mode(dec)
    levels = slow_mode_spectrum(ell2)
    if levels.zero_branch:
        raise ZeroBranch("overlap scan requires an opposite-sign partner level")
    d = psi.size
    order = [levels.index_1] + [k for k in range(d) if k != levels.index_1]
    u1 = build_u1(psi, levels.phis[:, order])
    rho0 = np.outer(psi, psi.conj())
    rho1 = u1 @ rho0 @ u1.conj().T
    out = []
    for s in np.asarray(s_grid, dtype=float):
        u2 = build_rotation(levels, float(s))
        val = _overlap(ell2, u2, rho1)
        out.append((float(s), float(val.real)))
    return out
