"""Coin-parameter noise models and the ensemble sweep harness.

Noise folds into the per-site coin parameters by the recursion

    q     <- |q + dq|   (clamped at 1, occurrences counted)
    theta <- theta + pi * dtheta
    phi   <- phi + pi * dphi

with every delta uniform on [-p, p].  The three kinds differ only in which
key fields of the counter-based stream vary:

* static       one independent draw per site, folded once at t=0;
* dynamic      one shared draw for all sites at every t = n tau, n >= 1;
* fluctuating  independent per-site draws at every t = n tau.

Draws are keyed by (master_seed, realization, site, epoch, component), so a
realization is bit-reproducible in isolation and kinds share the same
stream discipline.  Walls get perturbed exactly like Hadamard sites.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .analysis import fidelity
from .coins import coin_entries_from_params
from .errors import EdgeOverflowError, ParameterError
from .schedule import CompiledProtocol
from .state import SpinorField, gaussian_state

KINDS = ("static", "dynamic", "fluctuating")
VARIANTS = ("all", "q_only", "phase_only")

# Perturbed walls transmit a little probability, which then walks off the
# open lattice and never returns; dropping it at the edge is exact for the
# measured fidelity, so disordered runs get a loose sanity budget instead
# of the clean-run edge limit.
LOSS_BUDGET = 0.05


@dataclass(frozen=True)
class DisorderSpec:
    kind: str
    p: float
    tau: int = 0
    variant: str = "all"
    master_seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown disorder kind {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ParameterError(f"unknown disorder variant {self.variant!r}")
        if self.p < 0:
            raise ParameterError("deviation bound p must be >= 0")
        if self.tau < 0:
            raise ParameterError("period tau must be >= 1 (0 = resolve at use)")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ParameterError("master_seed must fit an unsigned 64-bit integer")


class CoinParamsField:
    """Mutable (q, theta, phi) arrays over a lattice, one triple per site."""

    __slots__ = ("q", "theta", "phi")

    def __init__(self, q, theta, phi):
        self.q = np.asarray(q, dtype=np.float64)
        self.theta = np.asarray(theta, dtype=np.float64)
        self.phi = np.asarray(phi, dtype=np.float64)

    @classmethod
    def clean(cls, lattice, closed_sites) -> "CoinParamsField":
        n = lattice.size
        q = np.full(n, 0.5)
        theta = np.zeros(n)
        phi = np.zeros(n)
        for site in closed_sites:
            q[lattice.index(site)] = 0.0
        return cls(q, theta, phi)

    def copy(self) -> "CoinParamsField":
        return CoinParamsField(self.q.copy(), self.theta.copy(), self.phi.copy())

    def coin_entries(self):
        return coin_entries_from_params(self.q, self.theta, self.phi)


def perturb_coins(params: CoinParamsField, spec: DisorderSpec, t: int,
                  realization: int) -> tuple[CoinParamsField, int]:
    """One noise epoch applied to a parameter field.

    ``t`` must be 0 for static disorder and a multiple of tau otherwise.
    Returns the new field and the number of q values clamped at 1.
    """
    if spec.kind == "static":
        if t != 0:
            raise ParameterError("static disorder folds only at t=0")
        epoch = 0
    else:
        if spec.tau < 1:
            raise ParameterError(f"{spec.kind} disorder needs a period tau >= 1")
        if t <= 0 or t % spec.tau != 0:
            raise ParameterError(f"{spec.kind} disorder folds at t = n*tau, got t={t}")
        epoch = t // spec.tau
    out = params.copy()
    clamped = kernels.perturb_params(
        out.q, out.theta, out.phi, spec.p,
        spec.kind == "dynamic", spec.master_seed, realization, epoch,
        spec.variant in ("all", "q_only"), spec.variant in ("all", "phase_only"))
    return out, clamped


def disordered_final_state(compiled: CompiledProtocol, spec: DisorderSpec,
                           realization: int,
                           spin=None) -> tuple[SpinorField, int]:
    """Evolve one disordered realization to the clean measurement time.

    Gate events reset the switched sites to their clean coins; static
    disorder immediately re-folds those sites' frozen per-site deltas so a
    site's imperfection survives gate switching.  Returns the final state
    and the total q-clamp count.
    """
    sched = compiled.schedule
    lat = sched.lattice
    t_end = compiled.t_measure
    psi = gaussian_state(compiled.plan.gaussian, spin or compiled.plan.spin, lat)
    up, down = psi.up, psi.down

    if spec.kind != "static" and spec.p > 0 and spec.tau < 1:
        raise ParameterError(f"{spec.kind} disorder needs a period tau >= 1")
    params = CoinParamsField.clean(lat, sched.closed_sites(0))
    clamps = 0
    if spec.kind == "static" and spec.p > 0:
        params, c = perturb_coins(params, spec, 0, realization)
        clamps += c

    epochs = (set(range(spec.tau, t_end + 1, spec.tau))
              if spec.kind != "static" and spec.p > 0 else set())
    event_times = set(sched.change_times())
    bps = sorted(event_times | epochs | {t_end})
    entries = params.coin_entries()
    t = 0
    lost_total = 0.0
    for bp in bps:
        if bp > t_end:
            break
        n_before = bp - 1 - t
        if n_before > 0:
            up, down, lost, _ = kernels.run_segment(up, down, *entries, n_before)
            t += n_before
            lost_total += lost
        changed = False
        if bp in event_times:
            prev = sched.closed_sites(bp - 1)
            now = sched.closed_sites(bp)
            for site in prev ^ now:
                i = lat.index(site)
                params.q[i] = 0.0 if site in now else 0.5
                params.theta[i] = 0.0
                params.phi[i] = 0.0
            if spec.kind == "static" and spec.p > 0:
                flipped = np.array([lat.index(s) for s in sorted(prev ^ now)])
                scratch, c = perturb_coins(
                    CoinParamsField.clean(lat, now), spec, 0, realization)
                params.q[flipped] = scratch.q[flipped]
                params.theta[flipped] = scratch.theta[flipped]
                params.phi[flipped] = scratch.phi[flipped]
            changed = True
        if bp in epochs:
            params, c = perturb_coins(params, spec, bp, realization)
            clamps += c
            changed = True
        if changed:
            entries = params.coin_entries()
        up, down, lost, _ = kernels.run_segment(up, down, *entries, 1)
        t += 1
        lost_total += lost
    if lost_total > LOSS_BUDGET:
        raise EdgeOverflowError(
            f"probability {lost_total:.3e} shifted past the lattice edge; "
            "the lattice is undersized for this noise level")
    return SpinorField(lat, up, down, check_norm=False), clamps


def disordered_fidelity(compiled: CompiledProtocol, spec: DisorderSpec,
                        realization: int, spin=None) -> float:
    """Fidelity of one realization at the clean (t_measure, x)."""
    lat = compiled.schedule.lattice
    psi0 = gaussian_state(compiled.plan.gaussian, spin or compiled.plan.spin, lat)
    fin, _ = disordered_final_state(compiled, spec, realization, spin)
    return fidelity(psi0, fin, compiled.x)


@dataclass(frozen=True)
class SweepEntry:
    p: float
    kind: str
    variant: str
    fidelities: tuple[float, ...]
    mean: float
    std: float
    clamp_count: int

    def as_dict(self) -> dict:
        return {"p": self.p, "kind": self.kind, "variant": self.variant,
                "mean": self.mean, "std": self.std,
                "clamp_count": self.clamp_count,
                "fidelities": list(self.fidelities)}


@dataclass(frozen=True)
class SweepReport:
    t_measure: int
    x: int
    tau: int
    realizations: int
    master_seed: int
    entries: tuple[SweepEntry, ...]

    def entry(self, p: float, kind: str) -> SweepEntry:
        for e in self.entries:
            if math.isclose(e.p, p) and e.kind == kind:
                return e
        raise KeyError(f"no sweep entry for p={p}, kind={kind}")

    def as_dict(self) -> dict:
        return {"t_measure": self.t_measure, "x": self.x, "tau": self.tau,
                "realizations": self.realizations,
                "master_seed": self.master_seed,
                "entries": [e.as_dict() for e in self.entries]}


def default_tau(compiled: CompiledProtocol) -> int:
    """Noise period used by the sweeps: 10% of the measurement time."""
    return max(1, int(round(0.1 * compiled.t_measure)))


def disorder_sweep(compiled: CompiledProtocol, p_values, kinds=KINDS,
                   variant: str = "all", realizations: int = 100,
                   master_seed: int = 0, tau: int | None = None,
                   spin=None) -> SweepReport:
    """Ensemble fidelity statistics over a (p, kind) grid.

    Every realization evolves the compiled protocol with its own keyed
    noise stream and measures fidelity at the clean measurement time.
    Realizations are independent; the per-entry list is kept in
    realization order and the statistics are computed on a sorted copy so
    the reduction is order-independent.
    """
    if realizations < 1:
        raise ParameterError("need at least one realization")
    tau_val = default_tau(compiled) if tau is None else tau
    psi0 = gaussian_state(compiled.plan.gaussian, spin or compiled.plan.spin,
                          compiled.schedule.lattice)
    entries = []
    for kind in kinds:
        for p in p_values:
            spec = DisorderSpec(kind=kind, p=float(p), tau=tau_val,
                                variant=variant, master_seed=master_seed)
            fids = []
            clamps = 0
            for r in range(realizations):
                fin, c = disordered_final_state(compiled, spec, r, spin)
                fids.append(fidelity(psi0, fin, compiled.x))
                clamps += c
            ordered = np.sort(np.asarray(fids))
            entries.append(SweepEntry(
                p=float(p), kind=kind, variant=variant,
                fidelities=tuple(fids),
                mean=float(ordered.mean()), std=float(ordered.std()),
                clamp_count=clamps))
    return SweepReport(t_measure=compiled.t_measure, x=compiled.x,
                       tau=tau_val, realizations=realizations,
                       master_seed=master_seed, entries=tuple(entries))
