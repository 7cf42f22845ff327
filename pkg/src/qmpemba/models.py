"""Collective spin operators and the two driven-dissipative spin models.

Everything lives in the maximal total-spin sector of N two-level systems: an
(N+1)-dimensional space spanned by the S_z eigenstates |m>, ordered by
descending m (m = N/2 first).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateDenominator, InvalidN
from .superop import LindbladModel


@dataclass(frozen=True)
class CollectiveSpinBasis:
    """Descending-m basis of the maximal-spin sector."""

    n_spins: int

    def __post_init__(self):
        if not isinstance(self.n_spins, (int, np.integer)) or self.n_spins < 1:
            raise InvalidN(f"spin count must be a positive integer, got {self.n_spins!r}")

    @property
    def dim(self) -> int:
        return self.n_spins + 1

    @property
    def m_values(self) -> np.ndarray:
        j = self.n_spins / 2
        return j - np.arange(self.dim)


def spin_operators(n_spins: int):
    """Collective (Sx, Sy, Sz, S-) matrices in the descending-m basis."""
    basis = CollectiveSpinBasis(n_spins)
    m = basis.m_values
    j = n_spins / 2
    sz = np.diag(m).astype(complex)
    sp = np.zeros((basis.dim, basis.dim), dtype=complex)
    for i in range(1, basis.dim):
        mm = m[i]
        sp[i - 1, i] = np.sqrt(j * (j + 1) - mm * (mm + 1))
    sm = sp.conj().T
    sx = (sp + sm) / 2
    sy = (sp - sm) / 2j
    return sx, sy, sz, sm


@dataclass(frozen=True)
class DickeParams:
    """Spin splitting Omega, boson frequency omega, coupling g, boson loss kappa."""

    omega: float
    g: float
    kappa: float
    Omega: float = 1.0

    def __post_init__(self):
        vals = (self.omega, self.g, self.kappa, self.Omega)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"parameters must be finite, got {vals}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


@dataclass(frozen=True)
class AllToAllParams:
    """Rabi frequency Omega, detuning Delta, interaction V, collective loss kappa."""

    Delta: float
    V: float
    kappa: float
    Omega: float = 1.0

    def __post_init__(self):
        vals = (self.Delta, self.V, self.kappa, self.Omega)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"parameters must be finite, got {vals}")
        if self.kappa <= 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")


def adiabatic_coefficients(p: DickeParams) -> tuple[float, float]:
    """Closed-form coefficients from eliminating the fast boson mode.

    Returns ``(chi, gamma_prefactor)``: chi multiplies -Sx^2/N in the
    effective Hamiltonian, gamma_prefactor multiplies Sx/sqrt(N) in the
    effective jump operator::

        chi = 4 omega g^2 / (4 omega^2 + kappa^2)
        gamma_prefactor = 2 |g| sqrt(kappa) / sqrt(4 omega^2 + kappa^2)
    """
    denom = 4 * p.omega**2 + p.kappa**2
    if denom == 0:
        raise DegenerateDenominator("4*omega^2 + kappa^2 vanished")
    chi = 4 * p.omega * p.g**2 / denom
    gamma_prefactor = 2 * abs(p.g) * np.sqrt(p.kappa) / np.sqrt(denom)
    return float(chi), float(gamma_prefactor)


def dicke_model(p: DickeParams, n_spins: int) -> LindbladModel:
    """Boson-eliminated collective-spin model:

    H = Omega Sz - chi Sx^2 / N, single jump gamma_prefactor Sx / sqrt(N).
    """
    sx, _, sz, _ = spin_operators(n_spins)
    chi, gamma_prefactor = adiabatic_coefficients(p)
    h = p.Omega * sz - chi * (sx @ sx) / n_spins
    jump = gamma_prefactor * sx / np.sqrt(n_spins)
    return LindbladModel(hamiltonian=h, jumps=(jump,), label="dicke")


def all_to_all_model(p: AllToAllParams, n_spins: int) -> LindbladModel:
    """Driven interacting spin ensemble with collective decay:

    H = Omega Sx - Delta Sz + V Sz^2 / N, single jump sqrt(kappa/N) S-.

    The collective loss carries a 1/N so that its rates stay comparable to
    the drives as N grows; this is what produces the slow near-stationary
    regime at the reference parameters.
    """
    sx, _, sz, sm = spin_operators(n_spins)
    h = p.Omega * sx - p.Delta * sz + (p.V / n_spins) * (sz @ sz)
    jump = np.sqrt(p.kappa / n_spins) * sm
    return LindbladModel(hamiltonian=h, jumps=(jump,), label="all-to-all")


def random_pure_state(n_spins: int, seed: int) -> np.ndarray:
    """Normalized random state with components a_m + i b_m, a,b ~ U[0,1).

    Draws come from numpy's default PCG64 generator seeded with ``seed``
    (first the N+1 real parts, then the N+1 imaginary parts), so the same
    seed reproduces the same state bit for bit on any platform.
    """
    basis = CollectiveSpinBasis(n_spins)
    rng = np.random.default_rng(seed)
    a = rng.random(basis.dim)
    b = rng.random(basis.dim)
    psi = a + 1j * b
    return psi / np.linalg.norm(psi)
