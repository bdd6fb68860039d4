"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

The walk spends essentially all of its time in :func:`run_segment` (apply a
per-site 2x2 coin, then shift the spin-up amplitudes right and the spin-down
amplitudes left).  Disorder sweeps additionally hammer
:func:`perturb_params`, whose randomness comes from a counter-based
splitmix64 stream so that every draw is a pure function of
``(seed, realization, site, epoch, component)``.

Backend selection: set ``CORRALWALK_BACKEND=numpy`` or
``CORRALWALK_BACKEND=numba`` in the environment before import.  The default
is numba when importable.  Both implementations of each kernel stay exposed
(``run_segment_numba`` / ``run_segment_numpy``) so the benchmark and the
equivalence tests can compare them in one process.
"""

from __future__ import annotations

import os

import numpy as np

from .errors import ParameterError

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D049BB133111EB)
_SEED_TAG = _U64(0xD1B54A32D192ED03)
_INV_2_53 = 2.0 ** -53

# Sentinel site key used for dynamic disorder: every lattice site folds the
# same key, hence draws the same deltas.  Must fit in int64 for numba.
SHARED_SITE_KEY = 2 ** 62


def _splitmix64_np(x: np.ndarray) -> np.ndarray:
    z = x + _GOLDEN
    z = (z ^ (z >> _U64(30))) * _MIX1
    z = (z ^ (z >> _U64(27))) * _MIX2
    return z ^ (z >> _U64(31))


def keyed_units(seed: int, realization: int, sites: np.ndarray, epoch: int,
                components: int = 3) -> np.ndarray:
    """Uniform [0, 1) draws keyed by (seed, realization, site, epoch, comp).

    Vectorized over ``sites``; returns shape ``(len(sites), components)``.
    Pure integer arithmetic, so results are identical on every platform and
    identical between the numpy and numba paths.
    """
    sites = np.asarray(sites, dtype=np.uint64)
    with np.errstate(over="ignore"):
        h = _splitmix64_np(np.full_like(sites, _U64(seed) ^ _SEED_TAG))
        h = _splitmix64_np(h ^ _U64(realization))
        h = _splitmix64_np(h ^ sites)
        h = _splitmix64_np(h ^ _U64(epoch))
        out = np.empty((sites.shape[0], components), dtype=np.float64)
        for c in range(components):
            hc = _splitmix64_np(h ^ _U64(c))
            out[:, c] = (hc >> _U64(11)).astype(np.float64) * _INV_2_53
    return out


# ---------------------------------------------------------------------------
# pure-numpy kernels
# ---------------------------------------------------------------------------

def run_segment_numpy(up, down, c00, c01, c10, c11, n_steps):
    """Advance ``n_steps`` walk steps under a fixed coin field.

    Returns ``(up, down, lost, max_edge)`` where ``lost`` is the total
    probability that shifted past either lattice edge (dropped) and
    ``max_edge`` the largest probability seen within two sites of an edge
    after any step.
    """
    up = up.copy()
    down = down.copy()
    n = up.shape[0]
    lost = 0.0
    max_edge = 0.0
    new_up = np.empty_like(up)
    new_down = np.empty_like(down)
    for _ in range(n_steps):
        top = c00[-1] * up[-1] + c01[-1] * down[-1]
        bot = c10[0] * up[0] + c11[0] * down[0]
        lost += abs(top) ** 2 + abs(bot) ** 2
        new_up[1:] = c00[:-1] * up[:-1] + c01[:-1] * down[:-1]
        new_up[0] = 0.0
        new_down[:-1] = c10[1:] * up[1:] + c11[1:] * down[1:]
        new_down[-1] = 0.0
        up, new_up = new_up, up
        down, new_down = new_down, down
        edge = (abs(up[0]) ** 2 + abs(up[1]) ** 2 + abs(down[0]) ** 2
                + abs(down[1]) ** 2 + abs(up[-1]) ** 2 + abs(up[-2]) ** 2
                + abs(down[-1]) ** 2 + abs(down[-2]) ** 2)
        if edge > max_edge:
            max_edge = edge
    return up, down, lost, max_edge


def perturb_params_numpy(q, theta, phi, p, shared_sites, seed, realization,
                         epoch, do_q, do_phase):
    """Fold one epoch of coin-parameter noise into (q, theta, phi) in place.

    Deltas are uniform on [-p, p]; q picks up ``|q + dq|`` clamped to 1,
    the phases pick up ``pi * d`` and are wrapped back into [-pi, pi].
    ``shared_sites`` makes every site fold the same draw (dynamic noise).
    Returns the number of q values clamped at 1.
    """
    n = q.shape[0]
    if shared_sites:
        site_keys = np.full(n, SHARED_SITE_KEY, dtype=np.uint64)
    else:
        site_keys = np.arange(n, dtype=np.uint64)
    u = keyed_units(seed, realization, site_keys, epoch)
    clamped = 0
    if do_q:
        dq = p * (2.0 * u[:, 0] - 1.0)
        qn = np.abs(q + dq)
        clamped = int((qn > 1.0).sum())
        np.minimum(qn, 1.0, out=q)
    if do_phase:
        theta += np.pi * (p * (2.0 * u[:, 1] - 1.0))
        phi += np.pi * (p * (2.0 * u[:, 2] - 1.0))
        theta[:] = (theta + np.pi) % (2.0 * np.pi) - np.pi
        phi[:] = (phi + np.pi) % (2.0 * np.pi) - np.pi
    return clamped


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    HAS_NUMBA = False


if HAS_NUMBA:

    @njit(cache=True)
    def _run_segment_jit(up, down, c00, c01, c10, c11, n_steps):
        n = up.shape[0]
        a = up.copy()
        b = down.copy()
        ta = np.empty_like(a)
        tb = np.empty_like(b)
        lost = 0.0
        max_edge = 0.0
        for _ in range(n_steps):
            top = c00[n - 1] * a[n - 1] + c01[n - 1] * b[n - 1]
            bot = c10[0] * a[0] + c11[0] * b[0]
            lost += abs(top) ** 2 + abs(bot) ** 2
            ta[0] = 0.0
            for j in range(n - 1):
                ta[j + 1] = c00[j] * a[j] + c01[j] * b[j]
            tb[n - 1] = 0.0
            for j in range(1, n):
                tb[j - 1] = c10[j] * a[j] + c11[j] * b[j]
            a, ta = ta, a
            b, tb = tb, b
            edge = (abs(a[0]) ** 2 + abs(a[1]) ** 2 + abs(b[0]) ** 2
                    + abs(b[1]) ** 2 + abs(a[n - 1]) ** 2 + abs(a[n - 2]) ** 2
                    + abs(b[n - 1]) ** 2 + abs(b[n - 2]) ** 2)
            if edge > max_edge:
                max_edge = edge
        return a, b, lost, max_edge

    def run_segment_numba(up, down, c00, c01, c10, c11, n_steps):
        return _run_segment_jit(up, down, c00, c01, c10, c11, n_steps)

    @njit(cache=True)
    def _splitmix64_jit(x):
        z = x + _GOLDEN
        z = (z ^ (z >> _U64(30))) * _MIX1
        z = (z ^ (z >> _U64(27))) * _MIX2
        return z ^ (z >> _U64(31))

    @njit(cache=True)
    def _keyed_unit_jit(seed, realization, site, epoch, comp):
        h = _splitmix64_jit(_U64(seed) ^ _SEED_TAG)
        h = _splitmix64_jit(h ^ _U64(realization))
        h = _splitmix64_jit(h ^ _U64(site))
        h = _splitmix64_jit(h ^ _U64(epoch))
        h = _splitmix64_jit(h ^ _U64(comp))
        return (h >> _U64(11)) * _INV_2_53

    @njit(cache=True)
    def _perturb_params_jit(q, theta, phi, p, shared_sites, seed, realization,
                            epoch, do_q, do_phase):
        n = q.shape[0]
        clamped = 0
        for i in range(n):
            site = SHARED_SITE_KEY if shared_sites else i
            if do_q:
                dq = p * (2.0 * _keyed_unit_jit(seed, realization, site, epoch, 0) - 1.0)
                qn = abs(q[i] + dq)
                if qn > 1.0:
                    qn = 1.0
                    clamped += 1
                q[i] = qn
            if do_phase:
                dt = p * (2.0 * _keyed_unit_jit(seed, realization, site, epoch, 1) - 1.0)
                dp = p * (2.0 * _keyed_unit_jit(seed, realization, site, epoch, 2) - 1.0)
                theta[i] = (theta[i] + np.pi * dt + np.pi) % (2.0 * np.pi) - np.pi
                phi[i] = (phi[i] + np.pi * dp + np.pi) % (2.0 * np.pi) - np.pi
        return clamped

    def perturb_params_numba(q, theta, phi, p, shared_sites, seed, realization,
                             epoch, do_q, do_phase):
        return _perturb_params_jit(q, theta, phi, p, shared_sites, seed,
                                   realization, epoch, do_q, do_phase)

else:  # pragma: no cover
    run_segment_numba = None
    perturb_params_numba = None


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

def _pick_backend() -> str:
    env = os.environ.get("CORRALWALK_BACKEND", "").strip().lower()
    if env == "numpy":
        return "numpy"
    if env == "numba":
        if not HAS_NUMBA:
            raise ParameterError("CORRALWALK_BACKEND=numba but numba is not importable")
        return "numba"
    if env:
        raise ParameterError(f"unknown CORRALWALK_BACKEND {env!r}")
    return "numba" if HAS_NUMBA else "numpy"


BACKEND = _pick_backend()

run_segment = run_segment_numba if BACKEND == "numba" else run_segment_numpy
perturb_params = perturb_params_numba if BACKEND == "numba" else perturb_params_numpy


def set_backend(name: str) -> None:
    """Switch the active kernel backend at runtime (mainly for tests)."""
    global BACKEND, run_segment, perturb_params
    if name == "numba":
        if not HAS_NUMBA:
            raise ParameterError("numba backend requested but numba is not importable")
        run_segment, perturb_params = run_segment_numba, perturb_params_numba
    elif name == "numpy":
        run_segment, perturb_params = run_segment_numpy, perturb_params_numpy
    else:
        raise ParameterError(f"unknown backend {name!r}")
    BACKEND = name
