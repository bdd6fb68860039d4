"""One-step and many-step unitary evolution.

A step applies the local coin at every site, then shifts the up component
one site right and the down component one site left.  The lattice is an
open line: amplitude that would shift past an edge is dropped, its
probability accumulated, and :class:`EdgeOverflowError` raised once the
total exceeds the edge budget.  Properly auto-sized lattices keep that
budget at effectively zero; the error only fires on under-sized lattices.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .coins import HADAMARD, SIGMA_X
from .errors import EdgeOverflowError, ParameterError
from .state import Lattice, SpinorField

EDGE_LOSS_LIMIT = 1e-9


class CoinField:
    """Per-site 2x2 coins over a lattice, stored as four entry arrays."""

    __slots__ = ("lattice", "c00", "c01", "c10", "c11")

    def __init__(self, lattice: Lattice, c00, c01, c10, c11):
        self.lattice = lattice
        for name, arr in (("c00", c00), ("c01", c01), ("c10", c10), ("c11", c11)):
            a = np.ascontiguousarray(arr, dtype=np.complex128)
            if a.shape != (lattice.size,):
                raise ParameterError(f"{name} must cover every lattice site")
            a.setflags(write=False)
            setattr(self, name, a)

    @classmethod
    def uniform(cls, lattice: Lattice, matrix: np.ndarray) -> "CoinField":
        n = lattice.size
        return cls(lattice,
                   np.full(n, matrix[0, 0]), np.full(n, matrix[0, 1]),
                   np.full(n, matrix[1, 0]), np.full(n, matrix[1, 1]))

    @classmethod
    def with_walls(cls, lattice: Lattice, closed_sites: Iterable[int],
                   default: np.ndarray = HADAMARD,
                   wall: np.ndarray = SIGMA_X) -> "CoinField":
        n = lattice.size
        c00 = np.full(n, default[0, 0])
        c01 = np.full(n, default[0, 1])
        c10 = np.full(n, default[1, 0])
        c11 = np.full(n, default[1, 1])
        for site in closed_sites:
            i = lattice.index(site)
            c00[i], c01[i], c10[i], c11[i] = wall[0, 0], wall[0, 1], wall[1, 0], wall[1, 1]
        return cls(lattice, c00, c01, c10, c11)

    @classmethod
    def from_site_map(cls, lattice: Lattice,
                      coin_at: Mapping[int, np.ndarray]) -> "CoinField":
        """Build from an explicit site -> matrix map covering every site."""
        missing = [j for j in range(lattice.j_min, lattice.j_max + 1) if j not in coin_at]
        if missing:
            raise ParameterError(f"coin map missing {len(missing)} sites, e.g. {missing[0]}")
        n = lattice.size
        c00 = np.empty(n, np.complex128)
        c01 = np.empty(n, np.complex128)
        c10 = np.empty(n, np.complex128)
        c11 = np.empty(n, np.complex128)
        for site, m in coin_at.items():
            i = lattice.index(site)
            c00[i], c01[i], c10[i], c11[i] = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
        return cls(lattice, c00, c01, c10, c11)

    def entries(self):
        return self.c00, self.c01, self.c10, self.c11


def _as_coin_field(lattice: Lattice, coin_at) -> CoinField:
    if isinstance(coin_at, CoinField):
        if coin_at.lattice != lattice:
            raise ParameterError("coin field lives on a different lattice")
        return coin_at
    if isinstance(coin_at, Mapping):
        return CoinField.from_site_map(lattice, coin_at)
    raise ParameterError(f"cannot interpret {type(coin_at).__name__} as a coin field")


def step(state: SpinorField, coin_at) -> SpinorField:
    """One walk step: coin, then conditional shift.  Norm preserving."""
    cf = _as_coin_field(state.lattice, coin_at)
    up, down, lost, _ = kernels.run_segment(
        state.up, state.down, *cf.entries(), 1)
    if lost > EDGE_LOSS_LIMIT:
        raise EdgeOverflowError(
            f"probability {lost:.3e} shifted past the lattice edge")
    return SpinorField(state.lattice, up, down, check_norm=False)


@dataclass(frozen=True)
class RecordPolicy:
    """What evolve() keeps: P(j) rows every ``distribution_stride`` steps
    (plus the final step), and full spinor snapshots at ``state_times``."""

    distribution_stride: int | None = None
    state_times: frozenset = field(default_factory=frozenset)

    @classmethod
    def distributions(cls, stride: int = 1) -> "RecordPolicy":
        return cls(distribution_stride=stride)

    @classmethod
    def states_at(cls, times: Iterable[int]) -> "RecordPolicy":
        return cls(state_times=frozenset(int(t) for t in times))

    def wants_distribution(self, t: int, n_steps: int) -> bool:
        if self.distribution_stride is None:
            return False
        return t % self.distribution_stride == 0 or t == n_steps


class Trajectory:
    """Recorded output of one evolve() run."""

    def __init__(self, initial: SpinorField):
        self.initial = initial
        self.final = initial
        self.n_steps = 0
        self.distribution_times: list[int] = []
        self.distributions: list[np.ndarray] = []
        self.states: dict[int, SpinorField] = {}
        self.lost_probability = 0.0
        self.max_edge_probability = 0.0

    @property
    def lattice(self) -> Lattice:
        return self.initial.lattice

    def _record(self, t: int, state: SpinorField, policy: RecordPolicy, n_steps: int):
        if policy.wants_distribution(t, n_steps):
            self.distribution_times.append(t)
            self.distributions.append(state.probability())
        if t in policy.state_times:
            self.states[t] = state

    def state_at(self, t: int) -> SpinorField:
        if t == 0:
            return self.initial
        if t == self.n_steps:
            return self.final
        return self.states[t]


def evolve(state0: SpinorField, schedule, n_steps: int,
           record: RecordPolicy | None = None,
           edge_limit: float = EDGE_LOSS_LIMIT) -> Trajectory:
    """Run ``n_steps`` steps of the time-dependent walk.

    ``schedule`` is anything with ``segments(n_steps)`` yielding
    ``(t_start, t_end, CoinField)`` triples covering steps
    ``t_start+1 .. t_end`` with a constant coin field, in order
    (a bare :class:`CoinField` is promoted to a single homogeneous
    segment).  Recording pauses the hot kernel only at requested times.
    """
    if n_steps < 0:
        raise ParameterError("n_steps must be >= 0")
    policy = record or RecordPolicy()
    traj = Trajectory(state0)
    traj._record(0, state0, policy, n_steps)
    if n_steps == 0:
        return traj

    if isinstance(schedule, CoinField):
        segments = [(0, n_steps, schedule)]
    else:
        segments = list(schedule.segments(n_steps))

    pauses = set(policy.state_times)
    if policy.distribution_stride is not None:
        pauses.update(range(0, n_steps + 1, policy.distribution_stride))
    pauses.add(n_steps)

    up, down = state0.up, state0.down
    lost_total = 0.0
    for t_start, t_end, cf in segments:
        entries = cf.entries()
        t = t_start
        stops = sorted(p for p in pauses if t_start < p <= t_end)
        if not stops or stops[-1] != t_end:
            stops.append(t_end)
        for stop in stops:
            up, down, lost, edge = kernels.run_segment(up, down, *entries, stop - t)
            t = stop
            lost_total += lost
            if edge > traj.max_edge_probability:
                traj.max_edge_probability = edge
            if lost_total > edge_limit:
                raise EdgeOverflowError(
                    f"probability {lost_total:.3e} shifted past the lattice edge "
                    f"by step {t} (limit {edge_limit:.1e})")
            if stop in pauses and stop != n_steps:
                snap = SpinorField(state0.lattice, up, down, check_norm=False)
                traj._record(stop, snap, policy, n_steps)

    traj.final = SpinorField(state0.lattice, up, down, check_norm=False)
    traj.n_steps = n_steps
    traj.lost_probability = lost_total
    traj._record(n_steps, traj.final, policy, n_steps)
    return traj
