"""Coin operators: the (q, theta, phi) family and its two named members.

A coin acts on the (up, down) spinor at one site before the conditional
shift.  The general unitary used here is

    [[ sqrt(q),            sqrt(1-q) e^{i theta} ],
     [ sqrt(1-q) e^{i phi}, -sqrt(q) e^{i (theta+phi)} ]]

with q in [0, 1] and theta, phi in [-pi, pi].  (1/2, 0, 0) gives the
Hadamard gate; (0, 0, 0) gives sigma_x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

_ANGLE_TOL = 1e-12


@dataclass(frozen=True)
class CoinParams:
    q: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ParameterError(f"coin bias q={self.q} outside [0, 1]")
        for name, val in (("theta", self.theta), ("phi", self.phi)):
            if not -math.pi - _ANGLE_TOL <= val <= math.pi + _ANGLE_TOL:
                raise ParameterError(f"coin phase {name}={val} outside [-pi, pi]")


HADAMARD_PARAMS = CoinParams(0.5, 0.0, 0.0)
SIGMA_X_PARAMS = CoinParams(0.0, 0.0, 0.0)


def make_coin(params: CoinParams) -> np.ndarray:
    """2x2 unitary for the given parameters."""
    rq = math.sqrt(params.q)
    r1 = math.sqrt(1.0 - params.q)
    et = np.exp(1j * params.theta)
    ep = np.exp(1j * params.phi)
    m = np.array([[rq, r1 * et],
                  [r1 * ep, -rq * et * ep]], dtype=np.complex128)
    m.setflags(write=False)
    return m


HADAMARD = make_coin(HADAMARD_PARAMS)
SIGMA_X = make_coin(SIGMA_X_PARAMS)


def is_unitary(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) <= tol)


def coin_entries_from_params(q: np.ndarray, theta: np.ndarray, phi: np.ndarray):
    """Vectorized coin matrix entries from per-site parameter arrays."""
    rq = np.sqrt(q)
    r1 = np.sqrt(1.0 - q)
    et = np.exp(1j * theta)
    ep = np.exp(1j * phi)
    return rq.astype(np.complex128), r1 * et, r1 * ep, -rq * et * ep
