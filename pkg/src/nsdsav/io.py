"""Run configuration, tables, field files and reports."""

import csv
import inspect
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .mesh import Subdomain
from .scenarios.convergence import ConvergenceRow, ConvergenceTable, default_h
from .scenarios.library import SCENARIOS

SCHEMES = ("be-sav", "bdf2-sav", "implicit-ref")

CSV_HEADER = ["dt", "h", "err_u_l2H1", "rate_u", "err_p_linfL2", "rate_p",
              "err_phi_l2H1", "rate_phi"]

# (final time, dt, h) when the document leaves them out
SCENARIO_DEFAULTS = {
    "manufactured": (1.0, 1.0 / 16.0, None),
    "cavity": (0.5, 0.01, 1.0 / 64.0),
    "filtration": (0.5, 0.01, 1.0 / 32.0),
    "yshape": (0.5, 0.01, None),
    "quiescent": (1.0, 0.1, 1.0 / 8.0),
}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending entry."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass
class RunConfig:
    scenario: str
    scheme: str
    dt: float
    n_steps: int
    final_time: float
    h: Optional[float]
    mesh: Optional[str] = None
    output_dir: str = "output"
    stride: int = 10
    bjs_compensation: Optional[bool] = None
    energy_monitor: bool = False
    picard_tol: float = 1e-10
    picard_max: int = 50
    scenario_params: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


_KEYS = {
    "scenario": str, "scheme": str, "dt": float, "n_steps": int, "final_time": float,
    "h": float, "mesh": str, "output_dir": str, "stride": int, "bjs_compensation": bool,
    "energy_monitor": bool, "picard_tol": float, "picard_max": int, "scenario_params": dict,
}


def _typed(doc, key, kind, path):
    v = doc[key]
    if kind is float:
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    elif kind is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, kind)
    if not ok:
        raise ConfigError(path, f"expected {kind.__name__}, got {type(v).__name__}")
    return float(v) if kind is float else v


def _positive(value, path):
    if not (value > 0 and math.isfinite(value)):
        raise ConfigError(path, f"must be positive, got {value!r}")
    return value


def parse_config(text):
    """Validate a JSON run description and fill in defaults."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("", "the document must be a JSON object")
    for key in doc:
        if key not in _KEYS:
            raise ConfigError(key, "unknown key")
    vals = {k: _typed(doc, k, kind, k) for k, kind in _KEYS.items() if k in doc}

    name = vals.get("scenario", "manufactured")
    if name not in SCENARIOS:
        raise ConfigError("scenario", f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    scheme = vals.get("scheme", "be-sav")
    if scheme not in SCHEMES:
        raise ConfigError("scheme", f"unknown scheme {scheme!r}; choose from {list(SCHEMES)}")

    params = vals.get("scenario_params", {})
    accepted = inspect.signature(SCENARIOS[name]).parameters
    for key, v in params.items():
        path = f"scenario_params.{key}"
        if key not in accepted or key in ("T", "dt", "h", "mesh_path"):
            raise ConfigError(path, f"unknown parameter for scenario {name!r}")
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            if not (key == "bjs_compensation" and isinstance(v, bool)):
                raise ConfigError(path, f"expected a number, got {type(v).__name__}")
        elif not v > 0 and key != "c":
            raise ConfigError(path, f"must be positive, got {v!r}")

    T_def, dt_def, h_def = SCENARIO_DEFAULTS[name]
    dt = _positive(vals.get("dt", dt_def), "dt")
    if "n_steps" in vals and "final_time" in vals:
        raise ConfigError("n_steps", "give either n_steps or final_time, not both")
    if "n_steps" in vals:
        n_steps = vals["n_steps"]
        if n_steps < 0:
            raise ConfigError("n_steps", f"must be non-negative, got {n_steps}")
        final_time = n_steps * dt
    else:
        final_time = _positive(vals.get("final_time", T_def), "final_time")
        n_steps = int(round(final_time / dt))
        if abs(n_steps * dt - final_time) > 1e-12:
            raise ConfigError("final_time", f"{final_time!r} is not a multiple of dt={dt!r}")

    if "h" in vals:
        h = _positive(vals["h"], "h")
    elif name == "manufactured":
        h = default_h("bdf2-sav" if scheme == "bdf2-sav" else "be-sav", dt)
    else:
        h = h_def
    if "mesh" in vals and name != "yshape":
        raise ConfigError("mesh", f"scenario {name!r} builds its own mesh")
    stride = vals.get("stride", 10)
    if stride < 1:
        raise ConfigError("stride", f"must be at least 1, got {stride}")
    picard_tol = _positive(vals.get("picard_tol", 1e-10), "picard_tol")
    picard_max = vals.get("picard_max", 50)
    if picard_max < 1:
        raise ConfigError("picard_max", "must be at least 1")
    return RunConfig(scenario=name, scheme=scheme, dt=dt, n_steps=n_steps,
                     final_time=final_time, h=h, mesh=vals.get("mesh"),
                     output_dir=vals.get("output_dir", "output"), stride=stride,
                     bjs_compensation=vals.get("bjs_compensation"),
                     energy_monitor=vals.get("energy_monitor", False),
                     picard_tol=picard_tol, picard_max=picard_max,
                     scenario_params=dict(params))


def build_scenario(cfg):
    """Scenario object for a :class:`RunConfig`."""
    ctor = SCENARIOS[cfg.scenario]
    kwargs = dict(cfg.scenario_params)
    accepted = inspect.signature(ctor).parameters
    if "T" in accepted:
        kwargs["T"] = cfg.final_time
    if cfg.scenario == "yshape":
        kwargs["mesh_path"] = cfg.mesh
    sc = ctor(**kwargs)
    changes = {"final_time": cfg.final_time, "dt": cfg.dt, "h": cfg.h}
    if cfg.bjs_compensation is not None:
        changes["bjs_compensation"] = cfg.bjs_compensation
    return sc.with_options(**changes)


# -- convergence tables ---------------------------------------------------------


def _fmt(v):
    return "" if v is None else repr(float(v))


def write_convergence_csv(table, path):
    if not table.rows:
        raise ValueError("cannot write an empty convergence table")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in table.rows:
            w.writerow([_fmt(r.dt), _fmt(r.h), _fmt(r.err_u), _fmt(r.rate_u), _fmt(r.err_p),
                        _fmt(r.rate_p), _fmt(r.err_phi), _fmt(r.rate_phi)])


def read_convergence_csv(path, scheme=""):
    def num(s):
        return None if s == "" else float(s)

    table = ConvergenceTable(scheme)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            v = [num(s) for s in row]
            table.rows.append(ConvergenceRow(dt=v[0], h=v[1], err_u=v[2], rate_u=v[3],
                                             err_p=v[4], rate_p=v[5], err_phi=v[6],
                                             rate_phi=v[7]))
    return table


# -- field output ---------------------------------------------------------------


def _vtk_floats(arr):
    return "\n".join(" ".join(repr(float(x)) for x in row) for row in np.atleast_2d(arr))


def write_vtk(path, mesh, velocity=None, pressure=None, head=None, k=None):
    """Legacy ASCII VTK of vertex-sampled fields.

    Missing fields are written as zeros; NaNs (values off a subdomain) become
    zero as well.
    """
    nv, nt = mesh.n_vertices, mesh.n_triangles

    def clean(a, shape):
        a = np.zeros(shape) if a is None else np.asarray(a, dtype=float).reshape(shape)
        return np.nan_to_num(a, nan=0.0)

    vel = clean(velocity, (nv, 2))
    pres = clean(pressure, (nv,))
    hd = clean(head, (nv,))
    kk = clean(k, (nt,)) if k is not None else np.ones(nt)
    pts = np.column_stack([mesh.vertices, np.zeros(nv)])
    lines = ["# vtk DataFile Version 3.0", "nsdsav fields", "ASCII",
             "DATASET UNSTRUCTURED_GRID", f"POINTS {nv} double", _vtk_floats(pts),
             f"CELLS {nt} {4 * nt}"]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    lines += [f"CELL_TYPES {nt}"] + ["5"] * nt
    lines += [f"POINT_DATA {nv}", "VECTORS velocity double",
              _vtk_floats(np.column_stack([vel, np.zeros(nv)])),
              "SCALARS pressure double 1", "LOOKUP_TABLE default", _vtk_floats(pres[:, None]),
              "SCALARS head double 1", "LOOKUP_TABLE default", _vtk_floats(hd[:, None]),
              f"CELL_DATA {nt}", "SCALARS subdomain int 1", "LOOKUP_TABLE default"]
    lines += [str(int(s)) for s in mesh.subdomain]
    lines += ["SCALARS k double 1", "LOOKUP_TABLE default", _vtk_floats(kk[:, None])]
    Path(path).write_text("\n".join(lines) + "\n")


def write_state_vtk(path, disc, state, global_field=True):
    """VTK snapshot of a solver state; the velocity is the global ``U``."""
    from .scenarios.diagnostics import global_velocity

    mesh = disc.mesh
    if global_field:
        vel = global_velocity(disc, state).U
    else:
        vel = disc.spaces.velocity.vertex_values(state.u, mesh)
    pres = disc.spaces.pressure.vertex_values(state.p, mesh)[:, 0]
    head = disc.spaces.head.vertex_values(state.phi, mesh)[:, 0]
    write_vtk(path, mesh, vel, pres, head, disc.assembler.regions.k)


def export_msh(mesh, path):
    """Write a mesh as Gmsh MSH 2.2 ASCII (FLUID / POROUS surfaces, labelled lines)."""
    labels = mesh.labels()
    names = [(2, 1, "FLUID"), (2, 2, "POROUS")]
    names += [(1, 10 + i, lab) for i, lab in enumerate(labels)]
    tag = {lab: 10 + i for i, lab in enumerate(labels)}
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$PhysicalNames", str(len(names))]
    out += [f'{d} {t} "{n}"' for d, t, n in names]
    out += ["$EndPhysicalNames", "$Nodes", str(mesh.n_vertices)]
    out += [f"{i + 1} {x!r} {y!r} 0" for i, (x, y) in enumerate(mesh.vertices.tolist())]
    out += ["$EndNodes", "$Elements", str(len(mesh.boundary_edges) + mesh.n_triangles)]
    eid = 1
    for (a, b), lab in zip(mesh.boundary_edges, mesh.boundary_labels):
        out.append(f"{eid} 1 2 {tag[str(lab)]} {tag[str(lab)]} {a + 1} {b + 1}")
        eid += 1
    for (a, b, c), s in zip(mesh.triangles, mesh.subdomain):
        phys = 1 if s == Subdomain.FLUID else 2
        out.append(f"{eid} 2 2 {phys} {phys} {a + 1} {b + 1} {c + 1}")
        eid += 1
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")


# -- reports --------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def step_records(reports):
    return [{"step": r.step, "t": r.t, "S": r.S, "A": r.A, "B": r.B, "r": r.r,
             "r_error": r.r_error, "solve_residuals": r.solve_residuals,
             "energy_residual": r.energy_residual, "energy_terms": r.energy_terms}
            for r in reports]


def write_report(path, payload):
    Path(path).write_text(json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n")
