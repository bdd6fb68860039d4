"""Exact dual-space evolver for the homogeneous Hadamard walk.

One Fourier mode per lattice site makes the transform an exact unitary on
the periodic ring; agreement with the open-line engine is therefore purely
a domain condition (no support near the edges), not an approximation.
Also provides the stationary-phase split-Gaussian closed form used as a
second, analytic cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OracleDomainError, ParameterError
from .state import BlochSpin, GaussianSpec, Lattice, SpinorField

SQRT2 = math.sqrt(2.0)

# fixed orthonormal spin pair carried by the right- and left-moving branches
SPIN_R = np.array([1.0 + SQRT2, 1.0]) / math.sqrt(2.0 * (2.0 + SQRT2))
SPIN_L = np.array([1.0 - SQRT2, 1.0]) / math.sqrt(2.0 * (2.0 - SQRT2))
SPIN_R.setflags(write=False)
SPIN_L.setflags(write=False)

SUPPORT_EPS = 1e-24


@dataclass(frozen=True)
class KMode:
    """Eigensystem of the one-step transfer matrix at momentum k."""

    k: float
    omega: float
    lam_plus: complex
    lam_minus: complex
    u_plus: np.ndarray
    u_minus: np.ndarray

    def matrix(self) -> np.ndarray:
        return transfer_matrix(self.k)


def transfer_matrix(k: float) -> np.ndarray:
    """One-step matrix acting on the (up, down) mode amplitudes at k."""
    eik = np.exp(1j * k)
    return np.array([[eik, eik], [1 / eik, -1 / eik]]) / SQRT2


def mk_eigensystem(k: float) -> KMode:
    """Closed-form eigenpairs of the transfer matrix.

    The dispersion satisfies sin(omega) = sin(k)/sqrt(2) with omega in
    [-pi/2, pi/2]; eigenvalues are +-exp(+-i omega).
    """
    if not -math.pi - 1e-12 <= k <= math.pi + 1e-12:
        raise ParameterError(f"k={k} outside [-pi, pi]")
    omega = math.asin(math.sin(k) / SQRT2)
    lam_p = np.exp(1j * omega)
    lam_m = -np.exp(-1j * omega)
    cos2 = math.cos(k) ** 2
    root = math.sqrt(1.0 + cos2)
    up = np.array([1.0 + SQRT2 * np.exp(1j * (k + omega)), 1.0])
    up = up / math.sqrt(2.0 * (1.0 + cos2 + math.cos(k) * root))
    um = np.array([1.0 - SQRT2 * np.exp(1j * (k - omega)), 1.0])
    um = um / math.sqrt(2.0 * (1.0 + cos2 - math.cos(k) * root))
    return KMode(k, omega, lam_p, lam_m, up, um)


def _support_margin(state: SpinorField, eps: float = SUPPORT_EPS) -> int:
    """Distance (sites) from the outermost non-negligible amplitude to an edge."""
    p = state.probability()
    idx = np.nonzero(p > eps)[0]
    if idx.size == 0:
        return state.lattice.size
    return int(min(idx[0], state.lattice.size - 1 - idx[-1]))


def fft_evolve(state0: SpinorField, t: int) -> SpinorField:
    """Evolve t homogeneous-Hadamard steps exactly via the mode basis.

    Requires the support of ``state0`` to sit at least ``t + 5`` sites from
    both lattice edges, far enough that the periodic ring and the open line
    cannot disagree.
    """
    if t < 0:
        raise ParameterError("t must be >= 0")
    if t == 0:
        return state0
    if _support_margin(state0) < t + 5:
        raise OracleDomainError(
            f"support within {t + 5} sites of the lattice edge; "
            "grow the lattice or shorten t")
    n = state0.lattice.size
    k = 2.0 * np.pi * np.fft.fftfreq(n)

    # forward transform psi~(k) = sum_j psi(j) e^{ikj}; the j_min phase
    # convention cancels between the forward and inverse passes.
    ut = np.fft.ifft(state0.up) * n
    dt = np.fft.ifft(state0.down) * n

    omega = np.arcsin(np.sin(k) / SQRT2)
    cosk = np.cos(k)
    root = np.sqrt(1.0 + cosk ** 2)
    a_p = 1.0 + SQRT2 * np.exp(1j * (k + omega))
    a_m = 1.0 - SQRT2 * np.exp(1j * (k - omega))
    n_p = 2.0 * (1.0 + cosk ** 2 + cosk * root)
    n_m = 2.0 * (1.0 + cosk ** 2 - cosk * root)

    # eigenprojections of the mode spinor, evolved by lambda^t
    c_p = (np.conj(a_p) * ut + dt) / n_p
    c_m = (np.conj(a_m) * ut + dt) / n_m
    ph_p = np.exp(1j * omega * t)
    ph_m = (-1.0) ** t * np.exp(-1j * omega * t)
    ut_t = ph_p * c_p * a_p + ph_m * c_m * a_m
    dt_t = ph_p * c_p + ph_m * c_m

    up = np.fft.fft(ut_t) / n
    down = np.fft.fft(dt_t) / n
    return SpinorField(state0.lattice, up, down, check_norm=False)


def split_weights(spin: BlochSpin) -> tuple[complex, complex]:
    """Projections (h+, h-) of the spin onto the (R, L) branch pair."""
    s = spin.spinor()
    return complex(SPIN_R @ s), complex(SPIN_L @ s)


def analytic_split_state(spin: BlochSpin, s: float, t: int,
                         lattice: Lattice, center: int = 0) -> SpinorField:
    """Dispersionless two-branch approximation of the free Hadamard walk.

    Builds h+ R f(j - t/sqrt(2)) + (-1)^t h- L f(j + t/sqrt(2)) from a
    width-s Gaussian and normalizes on the lattice.  Intended regime:
    s of a few sites or more, t small enough that dispersion is negligible.
    """
    if s <= 0:
        raise ParameterError("s must be positive")
    hp, hm = split_weights(spin)
    j = lattice.sites().astype(np.float64)
    fr = np.exp(-((j - center - t / SQRT2) ** 2) / (4.0 * s * s))
    fr /= np.sqrt(np.sum(fr * fr))
    fl = np.exp(-((j - center + t / SQRT2) ** 2) / (4.0 * s * s))
    fl /= np.sqrt(np.sum(fl * fl))
    sign = -1.0 if t % 2 else 1.0
    up = hp * SPIN_R[0] * fr + sign * hm * SPIN_L[0] * fl
    down = hp * SPIN_R[1] * fr + sign * hm * SPIN_L[1] * fl
    nrm = np.sqrt(np.sum(np.abs(up) ** 2 + np.abs(down) ** 2))
    return SpinorField(lattice, up / nrm, down / nrm, check_norm=False)


def free_walk_lattice(spec: GaussianSpec, t_max: int, margin: int = 5) -> Lattice:
    """Lattice sized so a free walk from ``spec`` stays oracle-safe to ``t_max``."""
    half = int(math.ceil(12.0 * spec.s)) + t_max + margin
    return Lattice(spec.center - half, spec.center + half)
