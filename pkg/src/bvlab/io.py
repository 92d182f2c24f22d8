"""Config parsing and every file the package writes or reads.

Config files are flat ``key = value`` text with ``#`` comments. Keys are
lowercase snake_case and unknown keys are rejected with the line they came
from. Command-line ``key=value`` overrides are applied after the file.
"""
from __future__ import annotations

import csv
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .core import ConfigError, DomainError, FluidField, InitialData, KineticField, PhaseGrid, SimConfig

OUT_ENV = "BVLAB_OUT"
DEFAULT_OUT = "bvlab_out"
SNAPSHOT_MAGIC = "BVLAB1"

_KEY = re.compile(r"^[a-z][a-z0-9_]*$")


def _float(text):
    return float(text)


def _int(text):
    val = float(text)
    if val != int(val):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _floats(text):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    return tuple(float(p) for p in parts)


def _pair(text):
    vals = _floats(text)
    if len(vals) != 2:
        raise ValueError(f"expected two numbers, got {text!r}")
    return vals


def _name(text):
    if not re.match(r"^[A-Za-z0-9_.\-]+$", text):
        raise ValueError(f"not a plain name: {text!r}")
    return text


def _width(text):
    """A length, or a multiple of epsilon written like ``4eps``."""
    t = text.strip()
    if t.endswith("eps"):
        return ("eps", float(t[:-3] or 1.0))
    return ("abs", float(t))


# key -> (parser, help); the README schema table mirrors this
SCHEMA = {
    "epsilon": (_float, "viscosity, in [0, 1)"),
    "t_final": (_float, "final time, >= 0"),
    "cfl": (_float, "Courant number, in (0, 1)"),
    "x_min": (_float, "left end of the x-domain"),
    "x_max": (_float, "right end of the x-domain"),
    "nx": (_int, "x-cells, >= 4"),
    "v_min": (_float, "lower velocity bound, < 0"),
    "v_max": (_float, "upper velocity bound, > 0"),
    "nv": (_int, "velocity cells, >= 4"),
    "l0": (_float, "connector half-width"),
    "u_minus": (_float, "far-field state on the left"),
    "u_plus": (_float, "far-field state on the right"),
    "u_family": (str, "riemann | bump | connector"),
    "u_center": (_float, "centre of the riemann step or bump"),
    "u_width": (_width, "tanh width or bump radius; '4eps' means 4*epsilon"),
    "u_amp": (_float, "bump amplitude"),
    "f_family": (str, "zero | gaussian | box"),
    "f_mass": (_float, "gaussian mass"),
    "f_x0": (_float, "f centre in x"),
    "f_v0": (_float, "f centre in v"),
    "f_sx": (_float, "gaussian std or box half-width in x"),
    "f_sv": (_float, "gaussian std or box half-width in v"),
    "f_height": (_float, "box height"),
    "f_cut": (_float, "gaussian cutoff in standard deviations"),
    "output_times": (_floats, "snapshot times, comma separated"),
    "window": (_pair, "compact window K as 'a, b'"),
    "run_name": (_name, "output subdirectory name"),
    "eps_list": (_floats, "sweep viscosities, strictly decreasing"),
    "cells_per_eps": (_float, "sweep grid rule dx <= epsilon / cells_per_eps"),
    "t_samples": (_int, "sweep comparison times on [0, T]"),
    "workers": (_int, "sweep worker processes"),
}

_GRID_KEYS = ("x_min", "x_max", "nx", "v_min", "v_max", "nv")
_INITIAL_KEYS = tuple(f.name for f in fields(InitialData))


@dataclass
class Settings:
    """Everything a command needs: the simulation config plus run/sweep knobs."""

    sim: SimConfig
    run_name: str = "run"
    eps_list: tuple = ()
    cells_per_eps: float = 4.0
    t_samples: int = 21
    workers: int = 1
    values: dict = field(default_factory=dict)
    origin: dict = field(default_factory=dict)


def _where(origin, key):
    return origin.get(key)


def parse_lines(lines):
    """Raw ``{key: (text, line_number)}`` from config lines."""
    out = {}
    for num, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line.split()[0], "expected 'key = value'", num)
        key, text = (s.strip() for s in line.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(key, "keys are lowercase snake_case", num)
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key", num)
        if key in out:
            raise ConfigError(key, f"duplicate key (first set on line {out[key][1]})", num)
        if not text:
            raise ConfigError(key, "missing value", num)
        out[key] = (text, num)
    return out


def parse_overrides(items):
    """``key=value`` strings from the command line; later ones win."""
    out = {}
    for k, item in enumerate(items, start=1):
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value", f"override {k}")
        key, text = (s.strip() for s in item.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(key, "unknown key", f"override {k}")
        out[key] = (text, f"override {k}")
    return out


def load_settings(path=None, overrides=(), base=None):
    """Build Settings from an optional file, then the overrides on top.

    ``base`` (a SimConfig) supplies defaults for keys set in neither place.
    """
    raw = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError("config", f"cannot read {path}: {exc.strerror or exc}") from exc
        raw.update(parse_lines(text.splitlines()))
    raw.update(parse_overrides(overrides))
    values, origin = {}, {}
    for key, (text, where) in raw.items():
        try:
            values[key] = SCHEMA[key][0](text)
        except ValueError as exc:
            raise ConfigError(key, f"bad value {text!r} ({exc})", where) from None
        origin[key] = where
    return settings_from_values(values, origin, base)


def settings_from_values(values, origin=None, base=None):
    origin = origin or {}
    base = base or SimConfig()
    try:
        grid_kw = {k: values[k] for k in _GRID_KEYS if k in values}
        try:
            grid = replace(base.grid, **grid_kw)
        except DomainError as exc:
            key = next(iter(grid_kw), "nx")
            raise ConfigError(key, str(exc), _where(origin, key)) from None
        ini_kw = {k: values[k] for k in _INITIAL_KEYS if k in values and k != "u_width"}
        if "u_width" in values:
            kind, w = values["u_width"]
            ini_kw["u_width_eps"] = w if kind == "eps" else 0.0
            if kind == "abs":
                ini_kw["u_width"] = w
        initial = replace(base.initial, **ini_kw)
        sim_kw = {k: values[k] for k in ("epsilon", "t_final", "cfl", "u_minus", "u_plus",
                                         "output_times", "window") if k in values}
        if "l0" in values:
            sim_kw["L0"] = values["l0"]
        sim = SimConfig(**{**_sim_fields(base), **sim_kw, "grid": grid, "initial": initial})
    except ConfigError as exc:
        key = {"L0": "l0"}.get(exc.key, exc.key)
        if exc.line is None and key in origin:
            raise ConfigError(key, _bare(exc), origin[key]) from None
        raise
    st = Settings(sim=sim, values=dict(values), origin=dict(origin))
    for key in ("run_name", "eps_list", "cells_per_eps", "t_samples", "workers"):
        if key in values:
            setattr(st, key, values[key])
    _check_run_knobs(st)
    return st


def _sim_fields(cfg):
    return {f.name: getattr(cfg, f.name) for f in fields(cfg)}


def _bare(exc):
    return str(exc).split(": ", 1)[-1] if exc.line is None else str(exc)


def _check_run_knobs(st):
    o = st.origin
    eps = st.eps_list
    if eps:
        if any(e <= 0 or e >= 1 for e in eps):
            raise ConfigError("eps_list", "values must lie in (0, 1)", o.get("eps_list"))
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps_list", "must be strictly decreasing", o.get("eps_list"))
    if not st.cells_per_eps > 0:
        raise ConfigError("cells_per_eps", "must be positive", o.get("cells_per_eps"))
    if st.t_samples < 2:
        raise ConfigError("t_samples", "need at least 2", o.get("t_samples"))
    if st.workers < 1:
        raise ConfigError("workers", "need at least 1", o.get("workers"))


def dump_settings(st):
    """Resolved settings as config text that loads back to the same values."""
    c, g, ini = st.sim, st.sim.grid, st.sim.initial
    width = f"{ini.u_width_eps!r}eps" if ini.u_width_eps > 0 else repr(ini.u_width)
    rows = [
        ("epsilon", c.epsilon), ("t_final", c.t_final), ("cfl", c.cfl),
        ("x_min", g.x_min), ("x_max", g.x_max), ("nx", g.nx),
        ("v_min", g.v_min), ("v_max", g.v_max), ("nv", g.nv),
        ("l0", c.L0), ("u_minus", c.u_minus), ("u_plus", c.u_plus),
        ("u_family", ini.u_family), ("u_center", ini.u_center), ("u_width", width),
        ("u_amp", ini.u_amp), ("f_family", ini.f_family), ("f_mass", ini.f_mass),
        ("f_x0", ini.f_x0), ("f_v0", ini.f_v0), ("f_sx", ini.f_sx), ("f_sv", ini.f_sv),
        ("f_height", ini.f_height), ("f_cut", ini.f_cut),
        ("window", ", ".join(repr(w) for w in c.window)),
        ("run_name", st.run_name), ("cells_per_eps", st.cells_per_eps),
        ("t_samples", st.t_samples), ("workers", st.workers),
    ]
    if c.output_times:
        rows.append(("output_times", ", ".join(repr(t) for t in c.output_times)))
    if st.eps_list:
        rows.append(("eps_list", ", ".join(repr(e) for e in st.eps_list)))
    return "".join(f"{k} = {v}\n" for k, v in rows)


def output_root():
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


# snapshots ----------------------------------------------------------------

@dataclass
class Snapshot:
    grid: PhaseGrid
    epsilon: float
    t: float
    u: np.ndarray
    f: np.ndarray


def _g17(x):
    return "%.17g" % x


def write_snapshot(path, u, f, grid, epsilon, t):
    """Header, then u on one line, then f one x-row per line, all '%.17g'."""
    u = u.u if isinstance(u, FluidField) else np.asarray(u)
    f = f.f if isinstance(f, KineticField) else np.asarray(f)
    head = [SNAPSHOT_MAGIC, str(grid.nx), str(grid.nv)] + [
        _g17(x) for x in (grid.x_min, grid.x_max, grid.v_min, grid.v_max, epsilon, t)]
    with open(path, "w") as fh:
        fh.write(" ".join(head) + "\n")
        fh.write(" ".join(_g17(x) for x in u) + "\n")
        for row in f:
            fh.write(" ".join(_g17(x) for x in row) + "\n")


def read_snapshot(path):
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 9 or head[0] != SNAPSHOT_MAGIC:
            raise ValueError(f"{path}: not a {SNAPSHOT_MAGIC} snapshot")
        nx, nv = int(head[1]), int(head[2])
        x_min, x_max, v_min, v_max, eps, t = (float(s) for s in head[3:])
        u = np.array(fh.readline().split(), dtype=float)
        f = np.array(fh.read().split(), dtype=float)
    if u.size != nx or f.size != nx * nv:
        raise ValueError(f"{path}: sizes do not match the header")
    grid = PhaseGrid(x_min, x_max, nx, v_min, v_max, nv)
    return Snapshot(grid, eps, t, u, f.reshape(nx, nv))


def snapshot_name(index, t):
    return f"snapshot_{index:03d}_t{t:.6f}.txt"


# csv -----------------------------------------------------------------------

def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return _g17(x)
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(x) for x in r])


def read_csv(path):
    """(header, rows) with numeric cells converted to float where possible."""
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[_num(c) for c in r] for r in rd]
    return header, rows


def _num(c):
    try:
        return float(c)
    except ValueError:
        return c


def write_diagnostics(path, records):
    from .diagnostics import DiagnosticsRecord
    write_csv(path, DiagnosticsRecord.FIELDS, (r.row() for r in records))


def write_run(directory, settings, traj):
    """Config echo, diagnostics CSV and every stored snapshot of a trajectory."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.txt").write_text(dump_settings(settings))
    write_diagnostics(d / "diagnostics.csv", traj.records)
    g, eps = traj.grid, traj.config.epsilon
    for k, (t, (u, f)) in enumerate(zip(traj.times, traj.snapshots)):
        write_snapshot(d / snapshot_name(k, t), u, f, g, eps, t)
    return d


def write_gnuplot(path, header, columns):
    """Whitespace columns with a '#' header line, readable by gnuplot."""
    cols = [np.asarray(c) for c in columns]
    with open(path, "w") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in zip(*cols):
            fh.write(" ".join(_cell(x) for x in row) + "\n")


def write_sweep(directory, settings, report):
    """Per-epsilon run directories plus the CSV tables and a text summary."""
    from .study import MOMENT_NAMES

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.txt").write_text(dump_settings(settings))
    tag = report.tag()
    eps = report.plan.eps_list
    for o in report.outcomes:
        g = o.grid
        sub = d / f"eps{o.epsilon:g}_nx{g.nx}_nv{g.nv}"
        sub.mkdir(exist_ok=True)
        write_diagnostics(sub / "diagnostics.csv", o.records)
        if o.final is not None:
            t, u, f = o.final
            write_snapshot(sub / snapshot_name(0, t), u, f, g, o.epsilon, t)
        (sub / "status.txt").write_text(o.status + "\n")

    keys = list(report.outcomes[0].summary)
    write_csv(d / f"runs_{tag}.csv", ["epsilon", "nx", "nv", "dx", "dv", "status", "wall_s"] + keys,
              [[o.epsilon, o.grid.nx, o.grid.nv, o.grid.dx, o.grid.dv, o.status, o.wall]
               + [o.summary.get(k, "") for k in keys] for o in report.outcomes])
    rs = report.plan.r_list
    write_csv(d / f"distances_{tag}.csv", ["eps_coarse", "eps_fine"] + [f"d{r}" for r in rs],
              [[eps[k], eps[k + 1]] + [report.distances[r][k] for r in rs]
               for k in range(len(eps) - 1)])
    names = [f"phi{k}_{m}" for k in range(len(report.plan.space_time)) for m in MOMENT_NAMES]
    write_csv(d / f"functionals_{tag}.csv", ["epsilon"] + names,
              [[o.epsilon] + (list(o.functionals.ravel()) if o.ok else [""] * len(names))
               for o in report.outcomes])
    write_csv(d / f"functional_differences_{tag}.csv", ["eps_coarse", "eps_fine"] + names,
              [[eps[k], eps[k + 1]] + list(report.functional_diffs[k]) for k in range(len(eps) - 1)])
    write_csv(d / f"residuals_{tag}.csv",
              ["epsilon", "test", "burgers_residual", "viscous_pairing", "vlasov_residual"],
              report.residual_table())
    (d / f"summary_{tag}.txt").write_text(sweep_summary(report))
    return d


def sweep_summary(report):
    lines = [f"sweep over eps = {', '.join(f'{e:g}' for e in report.plan.eps_list)}"]
    for o in report.outcomes:
        s = o.summary
        lines.append(f"  eps={o.epsilon:g} nx={o.grid.nx} nv={o.grid.nv} steps={o.steps} "
                     f"wall={o.wall:.1f}s sup E={s.get('energy_sup', float('nan')):.6g} "
                     f"l4={s.get('l4_window', float('nan')):.6g} status={o.status}")
    for r in report.plan.r_list:
        d = report.distances[r]
        rate = report.rates.get(r)
        rate_s = rate if isinstance(rate, str) else ("n/a" if rate is None else f"{rate:.3f}")
        lines.append(f"d{r}: {' '.join(f'{x:.6g}' for x in d)}  rate={rate_s}")
    lines.append(f"L4 max/min over eps: {report.l4_ratio:.4g}")
    lines.append(f"sup E relative spread over eps: {report.energy_spread:.4g}")
    if report.shock_distance is not None:
        lines.append(f"finest L1(K) distance to inviscid Riemann solution: {report.shock_distance:.6g}")
    if report.failures:
        lines.append("failures:")
        lines += [f"  eps={e:g}: {msg}" for e, msg in report.failures]
    return "\n".join(lines) + "\n"
