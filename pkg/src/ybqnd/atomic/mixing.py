"""Zeeman sublevel mixing in 3P1 F=3/2 from the tweezer AC Stark operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .polarizability import PolarizabilitySet, PolarizationState, TweezerConfig, default_models

F_EXCITED = 1.5
MF_VALUES = np.array([-1.5, -0.5, 0.5, 1.5])


def spin_matrices(F: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cartesian angular-momentum matrices in the basis mF = -F..F (ascending)."""
    m = np.arange(-F, F + 0.5, 1.0)
    fz = np.diag(m).astype(complex)
    # <m+1|F+|m> = sqrt(F(F+1) - m(m+1))
    fp = np.diag(np.sqrt(F * (F + 1) - m[:-1] * (m[:-1] + 1)), k=-1).astype(complex)
    fm = fp.conj().T
    fx = (fp + fm) / 2
    fy = (fp - fm) / 2j
    return fx, fy, fz


def stark_operator(pol: PolarizabilitySet, polarization: PolarizationState, F: float = F_EXCITED) -> np.ndarray:
    """Dimensionless polarizability operator (a.u.) for a hyperfine manifold.

    ``alpha_S - i alpha_V (u* x u).F/(2F) + alpha_T (3{u*.F, u.F} - 2F^2)/(2F(2F-1))``
    """
    fx, fy, fz = spin_matrices(F)
    fvec = (fx, fy, fz)
    u = polarization.unit_vector()
    uc = u.conj()
    n = fx.shape[0]
    op = pol.alpha_scalar * np.eye(n, dtype=complex)
    cross = np.cross(uc, u)
    op += -1j * pol.alpha_vector * sum(cross[k] * fvec[k] for k in range(3)) / (2 * F)
    if F >= 1:
        uf = sum(u[k] * fvec[k] for k in range(3))
        ucf = sum(uc[k] * fvec[k] for k in range(3))
        f2 = F * (F + 1) * np.eye(n)
        op += pol.alpha_tensor * (3 * (ucf @ uf + uf @ ucf) - 2 * f2) / (2 * F * (2 * F - 1))
    return op


@dataclass(frozen=True)
class MixingResult:
    """Eigen-decomposition of the 3P1 F=3/2 Zeeman + Stark Hamiltonian.

    Attributes
    ----------
    energies : ndarray
        Eigenvalues in Hz, ordered to follow the bare states of ``labels``.
    populations : ndarray
        ``populations[i, j] = |<mF_j | psi_i>|^2``; rows sum to 1.
    labels : ndarray
        Bare mF that dominates each eigenstate.
    """

    energies: np.ndarray
    populations: np.ndarray
    labels: np.ndarray

    def admixture(self, eigenstate_mF: float = -1.5, bare_mF: float = -0.5) -> float:
        """Population of bare ``bare_mF`` in the eigenstate tracking ``eigenstate_mF``."""
        i = int(np.flatnonzero(np.isclose(self.labels, eigenstate_mF))[0])
        j = int(np.flatnonzero(np.isclose(MF_VALUES, bare_mF))[0])
        return float(self.populations[i, j])


def default_excited_polarizability(tweezer: TweezerConfig) -> PolarizabilitySet:
    """Corrected 3P1 F=3/2 polarizabilities at the tweezer wavelength."""
    return default_models()["3P1"].set_at(tweezer.omega)


def stark_zeeman_mixing(B: float, tweezer: TweezerConfig, polarization: PolarizationState,
                        pol: PolarizabilitySet | None = None, g_factor: float = 1.4e6) -> MixingResult:
    """Diagonalize Zeeman plus tweezer Stark shifts in 3P1 F=3/2.

    Parameters
    ----------
    B : float
        Magnetic field in G along the quantization axis.
    tweezer : TweezerConfig
        Sets the peak intensity and wavelength.
    polarization : PolarizationState
        Ellipticity and tilt of the tweezer polarization.
    pol : PolarizabilitySet, optional
        3P1 F=3/2 polarizabilities; corrected model values when omitted.
    g_factor : float
        Zeeman coefficient in Hz/G per mF.
    """
    if B <= 0:
        raise ValueError("B must be positive")
    if pol is None:
        pol = default_excited_polarizability(tweezer)
    h = np.diag(g_factor * B * MF_VALUES).astype(complex)
    h += -tweezer.intensity_factor_hz() * stark_operator(pol, polarization)
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    pops = (np.abs(v) ** 2).T
    # follow each bare state to the eigenvector it dominates
    order = np.argmax(pops, axis=0)
    if len(set(order.tolist())) != len(order):
        order = np.arange(len(w))
    return MixingResult(w[order], pops[order], MF_VALUES.copy())
