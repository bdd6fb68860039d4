"""Plan documents, run reports, and CSV exporters.

Plans are JSON with four sections: ``initial`` (Gaussian + spin),
``stations`` (wall pairs with optional holds), optional ``lattice``
override, optional ``disorder`` block and optional ``output`` preferences.
Reports are JSON with a stable top-level key set; heatmaps and frame dumps
are plain CSV with fixed 12-significant-digit scientific formatting so
diffs are clean across platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .disorder import DisorderSpec
from .engine import Trajectory
from .errors import PlanError, PlanParseError
from .schedule import CorralPlan, Station
from .state import BlochSpin, GaussianSpec, Lattice

_PLAN_KEYS = {"initial", "stations", "lattice", "disorder", "output", "measurement"}
_INITIAL_KEYS = {"s", "center", "alpha", "beta"}
_STATION_KEYS = {"left", "right", "hold"}
_LATTICE_KEYS = {"j_min", "j_max"}
_DISORDER_KEYS = {"kind", "p", "tau", "variant", "master_seed"}
_OUTPUT_KEYS = {"heatmap_stride", "frames", "report"}

REPORT_KEYS = ("protocol", "parameters", "fidelity", "seeds", "versions",
               "timings", "error")


@dataclass(frozen=True)
class PlanFile:
    plan: CorralPlan
    disorder: DisorderSpec | None
    lattice: Lattice | None
    output: dict


def _require_keys(d: dict, allowed: set, field: str):
    if not isinstance(d, dict):
        raise PlanParseError(f"expected an object, got {type(d).__name__}", field)
    unknown = set(d) - allowed
    if unknown:
        raise PlanParseError(f"unknown keys {sorted(unknown)}", field)


def _num(d: dict, key: str, field: str, default=None, integer=False):
    if key not in d:
        if default is None:
            raise PlanParseError(f"missing required key {key!r}", field)
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise PlanParseError(f"{key!r} must be a number", field)
    if integer and int(v) != v:
        raise PlanParseError(f"{key!r} must be an integer", field)
    return int(v) if integer else float(v)


def plan_from_dict(doc: dict, source: str = "plan") -> PlanFile:
    _require_keys(doc, _PLAN_KEYS, source)
    if "initial" not in doc:
        raise PlanParseError("missing required section 'initial'", source)
    ini = doc["initial"]
    _require_keys(ini, _INITIAL_KEYS, f"{source}.initial")
    s = _num(ini, "s", f"{source}.initial")
    center = _num(ini, "center", f"{source}.initial", default=0, integer=True)
    alpha = _num(ini, "alpha", f"{source}.initial", default=0.0)
    beta = _num(ini, "beta", f"{source}.initial", default=0.0)

    raw_stations = doc.get("stations")
    if not isinstance(raw_stations, list) or not raw_stations:
        raise PlanParseError("'stations' must be a non-empty list", f"{source}.stations")
    stations = []
    for i, st in enumerate(raw_stations):
        fld = f"{source}.stations[{i}]"
        _require_keys(st, _STATION_KEYS, fld)
        stations.append(Station(
            left=_num(st, "left", fld, integer=True),
            right=_num(st, "right", fld, integer=True),
            hold=_num(st, "hold", fld, default=0, integer=True)))

    measurement = doc.get("measurement", "numeric-refine")
    try:
        plan = CorralPlan(gaussian=GaussianSpec(s=s, center=center),
                          spin=BlochSpin(alpha=alpha, beta=beta),
                          stations=tuple(stations),
                          measurement=measurement)
    except PlanError as exc:
        raise PlanParseError(str(exc), f"{source}.stations") from exc

    lattice = None
    if "lattice" in doc:
        lt = doc["lattice"]
        _require_keys(lt, _LATTICE_KEYS, f"{source}.lattice")
        lattice = Lattice(_num(lt, "j_min", f"{source}.lattice", integer=True),
                          _num(lt, "j_max", f"{source}.lattice", integer=True))

    disorder = None
    if "disorder" in doc:
        dd = doc["disorder"]
        fld = f"{source}.disorder"
        _require_keys(dd, _DISORDER_KEYS, fld)
        kind = dd.get("kind")
        if kind not in ("static", "dynamic", "fluctuating"):
            raise PlanParseError(f"unknown disorder kind {kind!r}", fld)
        variant = dd.get("variant", "all")
        disorder = DisorderSpec(
            kind=kind,
            p=_num(dd, "p", fld),
            tau=_num(dd, "tau", fld, default=0, integer=True),
            variant=variant,
            master_seed=_num(dd, "master_seed", fld, default=0, integer=True))

    output = dict(doc.get("output", {}))
    _require_keys(output, _OUTPUT_KEYS, f"{source}.output")
    return PlanFile(plan=plan, disorder=disorder, lattice=lattice, output=output)


def parse_plan(path) -> PlanFile:
    """Load and validate a plan document."""
    p = Path(path)
    if not p.exists():
        raise PlanParseError(f"no such plan file: {p}", str(p))
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise PlanParseError(f"malformed JSON: {exc}", str(p)) from exc
    return plan_from_dict(doc, source=p.name)


def plan_to_dict(pf: PlanFile) -> dict:
    doc: dict = {
        "initial": {"s": pf.plan.gaussian.s, "center": pf.plan.gaussian.center,
                    "alpha": pf.plan.spin.alpha, "beta": pf.plan.spin.beta},
        "stations": [{"left": st.left, "right": st.right, "hold": st.hold}
                     for st in pf.plan.stations],
        "measurement": pf.plan.measurement,
    }
    if pf.lattice is not None:
        doc["lattice"] = {"j_min": pf.lattice.j_min, "j_max": pf.lattice.j_max}
    if pf.disorder is not None:
        doc["disorder"] = {"kind": pf.disorder.kind, "p": pf.disorder.p,
                           "tau": pf.disorder.tau, "variant": pf.disorder.variant,
                           "master_seed": pf.disorder.master_seed}
    if pf.output:
        doc["output"] = dict(pf.output)
    return doc


def serialize_plan(pf: PlanFile, path) -> None:
    Path(path).write_text(json.dumps(plan_to_dict(pf), indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _versions() -> dict:
    import numpy
    from . import kernels
    versions = {"corralwalk": __version__, "numpy": numpy.__version__,
                "backend": kernels.BACKEND}
    if kernels.HAS_NUMBA:
        import numba
        versions["numba"] = numba.__version__
    else:
        versions["numba"] = None
    return versions


def build_report(protocol: str, parameters: dict, fidelity: dict,
                 seeds: dict | None = None, timings: dict | None = None,
                 error: str | None = None) -> dict:
    """Assemble the stable report structure shared by every subcommand.

    Everything except ``timings`` is deterministic for a given plan and
    seed set; wall-clock data is quarantined in that one key so reports
    can be compared byte for byte after dropping it.
    """
    return {
        "protocol": protocol,
        "parameters": parameters,
        "fidelity": fidelity,
        "seeds": seeds or {},
        "versions": _versions(),
        "timings": timings or {},
        "error": error,
    }


def write_report(report: dict, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")


def fmt(v: float) -> str:
    """Fixed 12-significant-digit scientific text, clean to diff."""
    return f"{v:.11e}"


def export_heatmap(trajectory: Trajectory, path, stride: int = 1,
                   floor: float = 0.0) -> int:
    """Write recorded P(j, t) rows as ``t,j,P`` CSV; returns rows written.

    Only recorded times divisible by ``stride`` (plus the final time) are
    kept, and only sites with P strictly above ``floor``.
    """
    if stride < 1:
        raise PlanError("stride must be >= 1")
    sites = trajectory.lattice.sites()
    n_rows = 0
    with open(path, "w") as fh:
        fh.write("t,j,P\n")
        for t, row in zip(trajectory.distribution_times, trajectory.distributions):
            if t % stride and t != trajectory.n_steps:
                continue
            keep = row > floor
            for j, p in zip(sites[keep], row[keep]):
                fh.write(f"{t},{j},{fmt(p)}\n")
                n_rows += 1
    return n_rows


def export_grid_heatmap(times, rows, lattice: Lattice, path,
                        floor: float = 0.0) -> int:
    """Same CSV layout for externally averaged distributions."""
    sites = lattice.sites()
    n_rows = 0
    with open(path, "w") as fh:
        fh.write("t,j,P\n")
        for t, row in zip(times, rows):
            keep = row > floor
            for j, p in zip(sites[keep], row[keep]):
                fh.write(f"{t},{j},{fmt(p)}\n")
                n_rows += 1
    return n_rows


def export_frames(trajectory: Trajectory, path, floor: float = 0.0) -> int:
    """Per-step spin-resolved frames as ``frame,j,P_up,P_down`` CSV.

    The trajectory must hold state snapshots for every step 0..n; returns
    the number of frames written.
    """
    import numpy as np

    sites = trajectory.lattice.sites()
    n_frames = 0
    with open(path, "w") as fh:
        fh.write("frame,j,P_up,P_down\n")
        for t in range(trajectory.n_steps + 1):
            st = trajectory.state_at(t)
            pu = np.abs(st.up) ** 2
            pd = np.abs(st.down) ** 2
            keep = (pu + pd) > floor
            for j, a, b in zip(sites[keep], pu[keep], pd[keep]):
                fh.write(f"{t},{j},{fmt(a)},{fmt(b)}\n")
            n_frames += 1
    return n_frames
