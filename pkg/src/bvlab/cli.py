"""``bvlab run|sweep|verify|report [--config PATH] [key=value ...]``.

Exit codes: 0 ok, 1 verification failed, 2 bad config or input directory,
3 numerical blowup, 4 sweep finished with failed runs.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .core import ConfigError, DomainError

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_BLOWUP, EXIT_PARTIAL = 0, 1, 2, 3, 4

log = logging.getLogger("bvlab")


def _settings(args):
    return io.load_settings(args.config, args.overrides)


def _config_error(args, exc):
    where = f"{args.config}: " if args.config and isinstance(exc.line, int) else ""
    print(f"bvlab: config error: {where}{exc}", file=sys.stderr)
    return EXIT_CONFIG


def run_summary(traj):
    """Final energy plus relative mass and absolute momentum drift."""
    E = traj.column("energy")
    mass = traj.column("mass")
    P = traj.column("momentum")
    m0 = mass[0] if mass[0] > 0 else 1.0
    return {
        "t": float(traj.records[-1].t),
        "steps": len(traj.records) - 1,
        "energy": float(E[-1]),
        "mass_drift": float((mass[-1] - mass[0]) / m0),
        "momentum_drift": float(P[-1] - P[0]),
        "boundary_mass_max": float(traj.column("boundary_mass_indicator").max()),
    }


def _summary_text(s):
    return (f"t={s['t']:.6g} steps={s['steps']}\n"
            f"E(t)={s['energy']:.10g}\n"
            f"mass drift (relative)={s['mass_drift']:.3e}\n"
            f"momentum drift={s['momentum_drift']:.3e}\n")


def cmd_run(args):
    from .coupling import RunFailed, run
    from .study import BOUNDARY_LIMIT

    try:
        st = _settings(args)
    except ConfigError as exc:
        return _config_error(args, exc)
    out = io.output_root() / st.run_name
    try:
        traj = run(st.sim)
    except RunFailed as exc:
        traj = exc.trajectory
        io.write_run(out, st, traj)
        print(f"bvlab: numerical blowup: {exc}; last good state written to {out}", file=sys.stderr)
        return EXIT_BLOWUP
    except DomainError as exc:
        print(f"bvlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    io.write_run(out, st, traj)
    s = run_summary(traj)
    text = _summary_text(s)
    (out / "summary.txt").write_text(text)
    print(text, end="")
    if s["boundary_mass_max"] > BOUNDARY_LIMIT:
        print(f"warning: boundary mass fraction reached {s['boundary_mass_max']:.2e}; "
              "the velocity or space truncation is too tight", file=sys.stderr)
    print(f"output: {out}")
    return EXIT_OK


def cmd_sweep(args):
    from .presets import SWEEP_EPS
    from .study import SweepPlan, run_sweep

    try:
        st = _settings(args)
        plan = SweepPlan(st.sim, eps_list=st.eps_list or SWEEP_EPS, cells_per_eps=st.cells_per_eps,
                         window=st.sim.window, t_samples=st.t_samples, workers=st.workers)
    except ConfigError as exc:
        return _config_error(args, exc)
    except DomainError as exc:
        print(f"bvlab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for eps, cells, steps in plan.estimate():
        print(f"eps={eps:g}: {cells} cells x ~{steps} steps")
    report = run_sweep(plan)
    out = io.write_sweep(io.output_root() / st.run_name, st, report)
    print(io.sweep_summary(report), end="")
    print(f"output: {out}")
    if report.failures:
        for eps, msg in report.failures:
            print(f"bvlab: eps={eps:g} failed: {msg}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_all

    if args.config is not None or args.overrides:
        # the suite uses built-in benchmarks; a given config must still be valid
        try:
            _settings(args)
        except ConfigError as exc:
            return _config_error(args, exc)
    drag = -1.0 if args.debug_flip_drag else 1.0
    results = run_all(drag_sign=drag, report=lambda r: print(r.line(), flush=True))
    bad = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(bad)}/{len(results)} criteria passed"
          + (f"; failed: {', '.join(map(str, bad))}" if bad else ""))
    return EXIT_VERIFY if bad else EXIT_OK


def report_run_dir(d):
    """Gnuplot files and summary for one run directory; returns the summary text."""
    from .diagnostics import DiagnosticsRecord

    header, rows = io.read_csv(d / "diagnostics.csv")
    if tuple(header) != DiagnosticsRecord.FIELDS or not rows:
        raise ValueError(f"{d / 'diagnostics.csv'}: unexpected columns or empty")
    a = np.array(rows, dtype=float)
    col = {h: a[:, k] for k, h in enumerate(header)}
    t = col["t"]
    diss = col["drag_dissipation"] + col["viscous_dissipation"]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * (diss[1:] + diss[:-1]) * np.diff(t))))
    io.write_gnuplot(d / "energy.dat", ["t", "energy", "dissipated", "energy_plus_dissipated"],
                     [t, col["energy"], cum, col["energy"] + cum])
    io.write_gnuplot(d / "dissipation.dat", ["t", "drag_dissipation", "viscous_dissipation"],
                     [t, col["drag_dissipation"], col["viscous_dissipation"]])
    io.write_gnuplot(d / "conserved.dat", ["t", "mass", "momentum", "l4_window"],
                     [t, col["mass"], col["momentum"], col["l4_window"]])
    m0 = col["mass"][0] if col["mass"][0] > 0 else 1.0
    text = (f"{d}: {len(t) - 1} steps to t={t[-1]:.6g}\n"
            f"  E(0)={col['energy'][0]:.8g} E(T)={col['energy'][-1]:.8g} dissipated={cum[-1]:.8g}\n"
            f"  mass drift={(col['mass'][-1] - col['mass'][0]) / m0:.3e} "
            f"momentum drift={col['momentum'][-1] - col['momentum'][0]:.3e}\n")
    (d / "report.txt").write_text(text)
    return text


def report_sweep_tables(d):
    texts = []
    for path in sorted(d.glob("distances_*.csv")):
        header, rows = io.read_csv(path)
        if not header[:2] == ["eps_coarse", "eps_fine"]:
            raise ValueError(f"{path}: unexpected columns")
        cols = list(zip(*rows)) if rows else [[] for _ in header]
        io.write_gnuplot(path.with_suffix(".dat"), header, cols)
        texts.append(f"{path.name}: {len(rows)} pairs -> {path.with_suffix('.dat').name}\n")
    return "".join(texts)


def cmd_report(args):
    if args.dir is not None:
        d = Path(args.dir)
    else:
        try:
            d = io.output_root() / _settings(args).run_name
        except ConfigError as exc:
            return _config_error(args, exc)
    if not d.is_dir():
        print(f"bvlab: no such run directory: {d}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        texts = []
        if (d / "diagnostics.csv").exists():
            texts.append(report_run_dir(d))
        sweep = report_sweep_tables(d)
        if sweep:
            texts.append(sweep)
            for sub in sorted(p for p in d.iterdir() if (p / "diagnostics.csv").exists()):
                texts.append(report_run_dir(sub))
    except (ValueError, OSError) as exc:
        print(f"bvlab: malformed run directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not texts:
        print(f"bvlab: {d} holds neither run nor sweep output", file=sys.stderr)
        return EXIT_CONFIG
    text = "".join(texts)
    (d / "report_summary.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "verify": cmd_verify, "report": cmd_report}


def build_parser():
    p = argparse.ArgumentParser(prog="bvlab", description="Burgers-Vlasov numerical lab")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file")
        sp.add_argument("overrides", nargs="*", metavar="key=value",
                        help="config overrides, applied after the file")
        if name == "verify":
            sp.add_argument("--debug-flip-drag", action="store_true",
                            help="flip the sign of the drag felt by the fluid (mutation check)")
        if name == "report":
            sp.add_argument("--dir", help="run or sweep directory (default: output root / run_name)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
