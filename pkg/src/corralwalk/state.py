"""Walker state on a finite one-dimensional lattice.

The walker is a two-component complex amplitude field (spin up / spin down)
over integer sites ``j_min..j_max``.  Fields are immutable snapshots: the
underlying arrays are marked read-only, so a returned state can be shared
freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError, SizingError

NORM_TOL = 1e-10


@dataclass(frozen=True)
class Lattice:
    """Closed integer site range ``[j_min, j_max]``."""

    j_min: int
    j_max: int

    def __post_init__(self):
        if self.j_min >= self.j_max:
            raise ParameterError(f"need j_min < j_max, got [{self.j_min}, {self.j_max}]")
        if self.size < 3:
            raise ParameterError("lattice needs at least 3 sites")

    @property
    def size(self) -> int:
        return self.j_max - self.j_min + 1

    def sites(self) -> np.ndarray:
        return np.arange(self.j_min, self.j_max + 1)

    def index(self, site: int) -> int:
        if not self.j_min <= site <= self.j_max:
            raise SizingError(f"site {site} outside lattice [{self.j_min}, {self.j_max}]")
        return site - self.j_min

    def __contains__(self, site: int) -> bool:
        return self.j_min <= site <= self.j_max


@dataclass(frozen=True)
class BlochSpin:
    """Spin state (cos(alpha), e^{i beta} sin(alpha)).

    ``alpha`` is half the Bloch polar angle, restricted to [0, pi/2];
    ``beta`` is the azimuthal angle in [0, 2 pi].
    """

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= math.pi / 2 + 1e-12:
            raise ParameterError(f"alpha {self.alpha} outside [0, pi/2]")
        if not 0.0 <= self.beta <= 2 * math.pi + 1e-12:
            raise ParameterError(f"beta {self.beta} outside [0, 2*pi]")

    def spinor(self) -> np.ndarray:
        return np.array([math.cos(self.alpha),
                         np.exp(1j * self.beta) * math.sin(self.alpha)],
                        dtype=np.complex128)


SPIN_UP = BlochSpin(0.0)
SPIN_DOWN = BlochSpin(math.pi / 2, 0.0)


@dataclass(frozen=True)
class GaussianSpec:
    """Gaussian envelope with standard deviation ``s`` centered on a site."""

    s: float
    center: int = 0

    def __post_init__(self):
        if self.s <= 0:
            raise ParameterError(f"standard deviation must be positive, got {self.s}")


class SpinorField:
    """Two-component amplitude field; unit norm enforced at construction."""

    __slots__ = ("lattice", "up", "down")

    def __init__(self, lattice: Lattice, up: np.ndarray, down: np.ndarray,
                 check_norm: bool = True):
        up = np.ascontiguousarray(up, dtype=np.complex128)
        down = np.ascontiguousarray(down, dtype=np.complex128)
        if up.shape != (lattice.size,) or down.shape != (lattice.size,):
            raise ShapeError(f"amplitude arrays must have shape ({lattice.size},)")
        if check_norm:
            n = float(np.sum(np.abs(up) ** 2 + np.abs(down) ** 2))
            if abs(n - 1.0) > NORM_TOL:
                raise ParameterError(f"state norm {n} deviates from 1 beyond {NORM_TOL}")
        up.setflags(write=False)
        down.setflags(write=False)
        self.lattice = lattice
        self.up = up
        self.down = down

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.up) ** 2 + np.abs(self.down) ** 2)))

    def probability(self) -> np.ndarray:
        """Position distribution P(j), writable copy."""
        return (np.abs(self.up) ** 2 + np.abs(self.down) ** 2)

    def amplitude_at(self, site: int) -> np.ndarray:
        i = self.lattice.index(site)
        return np.array([self.up[i], self.down[i]])

    def same_lattice(self, other: "SpinorField") -> None:
        if self.lattice != other.lattice:
            raise ShapeError(f"lattice mismatch: {self.lattice} vs {other.lattice}")


def gaussian_envelope(spec: GaussianSpec, lattice: Lattice) -> np.ndarray:
    """Discrete Gaussian f(j) with unit sum of squares over the lattice."""
    j = lattice.sites().astype(np.float64)
    f = np.exp(-((j - spec.center) ** 2) / (4.0 * spec.s ** 2))
    return f / np.sqrt(np.sum(f * f))


def gaussian_norm_constant(spec: GaussianSpec, lattice: Lattice) -> float:
    """Normalization constant A fixing the truncated discrete sum to 1."""
    j = lattice.sites().astype(np.float64)
    raw = np.sum(np.exp(-((j - spec.center) ** 2) / (2.0 * spec.s ** 2)))
    return float(np.sqrt(np.sqrt(2.0 * np.pi * spec.s ** 2) / raw))


def gaussian_state(spec: GaussianSpec, spin: BlochSpin, lattice: Lattice) -> SpinorField:
    """Product state: Gaussian envelope times a Bloch spinor.

    Raises :class:`SizingError` unless the lattice holds the center plus
    five standard deviations on both sides.
    """
    pad = 5.0 * spec.s
    if spec.center - pad < lattice.j_min or spec.center + pad > lattice.j_max:
        raise SizingError(
            f"lattice [{lattice.j_min}, {lattice.j_max}] cannot hold a Gaussian "
            f"at {spec.center} with s={spec.s} (needs +-5s)")
    f = gaussian_envelope(spec, lattice)
    s = spin.spinor()
    return SpinorField(lattice, f * s[0], f * s[1])


def delta_state(lattice: Lattice, site: int, spin: BlochSpin = SPIN_UP) -> SpinorField:
    """All amplitude on one site; handy for small exact checks."""
    up = np.zeros(lattice.size, dtype=np.complex128)
    down = np.zeros(lattice.size, dtype=np.complex128)
    s = spin.spinor()
    i = lattice.index(site)
    up[i] = s[0]
    down[i] = s[1]
    return SpinorField(lattice, up, down)
