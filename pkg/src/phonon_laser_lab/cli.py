"""``phonon-laser-lab`` command-line front end.

Every command writes ``<command>_<tag>.csv`` into ``--out``: a ``#``-prefixed
metadata header (engine version, command, full effective configuration, wall
time and command-specific results) followed by a plain CSV body. Bodies depend
only on the configuration, never on the number of worker processes.

Exit codes: 0 success, 1 numerical failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
import time
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, UsageError, parse_grid, parse_list, read_config_file
from .dynamics import amplitude_sweep, integrate_classical, scaling_fits, simulate_attractor
from .entanglement import (
    boundary_constant_scan,
    boundary_samples,
    entanglement_sweep,
    fluctuation_sweep,
    temperature_sweep,
)
from .errors import PhononLabError
from .parallel import THREADS_ENV, resolve_workers
from .phase_diagram import (
    REGION_I,
    REGION_II,
    REGION_UNKNOWN,
    classify_cell,
    sweep_phase_diagram,
)

log = logging.getLogger("phonon_laser_lab")

PROG = "phonon-laser-lab"
EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2
MAX_UNKNOWN_FRACTION = 0.01
MARKED_POINTS = ((3.0, None), (5.01, None), (8.0, None))  # (Lambda, Delta); None -> J
REGION_NAMES = {REGION_UNKNOWN: "unknown", REGION_I: "I", REGION_II: "II"}


# ---------------------------------------------------------------------------
# tables


class Table:
    """Column schema, numeric rows and ``key: value`` metadata."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []
        self.meta = []

    def add(self, *row):
        if len(row) != len(self.columns):
            raise ValueError("row length does not match the column schema")
        self.rows.append(row)

    def note(self, key, value):
        self.meta.append((key, value))


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def render_body(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_table(path: Path, command: str, cfg: RunConfig, table: Table, wall: float) -> Path:
    lines = [
        f"# engine: {PROG} {__version__}",
        f"# command: {command}",
        f"# workers: {resolve_workers(cfg.threads)}",
    ]
    lines += [f"# config.{k}: {v}" for k, v in cfg.items()]
    lines += [f"# {k}: {_cell(v)}" for k, v in table.meta]
    lines.append(f"# wall_time_s: {wall:.3f}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n" + render_body(table))
    return path


def read_body(path) -> str:
    """CSV body of an output file, without the metadata header."""
    return "".join(l for l in Path(path).read_text().splitlines(True) if not l.startswith("#"))


# ---------------------------------------------------------------------------
# commands; each returns (tables keyed by file suffix, exit code)


def cmd_phase_diagram(cfg: RunConfig):
    template = cfg.model()
    Lambdas = parse_grid(cfg.grid or "0:12:0.1")
    Deltas = parse_grid(cfg.delta_grid)
    diagram = sweep_phase_diagram(
        template,
        (Lambdas[0], Lambdas[-1]),
        (Deltas[0], Deltas[-1]),
        (Lambdas.size, Deltas.size),
        crosscheck_fraction=cfg.crosscheck_fraction,
        config=cfg.integrator(),
        n_jobs=cfg.threads,
    )
    grid_t = Table(["Lambda", "Delta", "region", "max_real"])
    for i, D in enumerate(diagram.Delta):
        for j, L in enumerate(diagram.Lambda):
            grid_t.add(float(L), float(D), int(diagram.region[i, j]), float(diagram.max_real[i, j]))
    for L, D in MARKED_POINTS:
        D = template.J if D is None else D
        region, growth = classify_cell(template.replace(Lambda=L, Delta=D))
        grid_t.note(f"marked({L:g},{D:g})", f"{REGION_NAMES[region]} max_real={growth:.6e}")
    grid_t.note("unknown_fraction", diagram.unknown_fraction)
    grid_t.note("crosscheck_cells", len(diagram.crosscheck))
    grid_t.note("crosscheck_disagreements", sum(not c.agree for c in diagram.crosscheck))
    for c in diagram.discrepancies:
        grid_t.note(
            "discrepancy",
            f"Lambda={diagram.Lambda[c.j]:g} Delta={diagram.Delta[c.i]:g} "
            f"eigen={REGION_NAMES[c.eigen_region]} integration={REGION_NAMES[c.integration_region]}",
        )
    bnd = Table(["Delta", "Lambda_th"])
    for D, th in zip(diagram.Delta, diagram.threshold):
        bnd.add(float(D), float(th))
    code = EXIT_OK
    if diagram.unknown_fraction > MAX_UNKNOWN_FRACTION:
        log.error("%.1f%% of the cells could not be classified", 100 * diagram.unknown_fraction)
        code = EXIT_NUMERICAL
    return {"": grid_t, "_boundary": bnd}, code


def cmd_trajectory(cfg: RunConfig):
    params = cfg.model()
    config = cfg.integrator()
    report = simulate_attractor(params, None, config)
    traj = integrate_classical(params, report.state, config, t_start=0.0)
    t = Table(["t", "x1", "y1", "x2", "y2", "q", "p"])
    for ti, s in zip(traj.t, traj.states):
        t.add(float(ti), *(float(v) for v in s))
    t.note("kind", report.kind.value)
    t.note("q0", report.q0)
    t.note("A", report.A)
    t.note("period", report.period)
    t.note("extrema_per_period", report.extrema_per_period)
    return {"": t}, EXIT_OK


def cmd_amplitude(cfg: RunConfig):
    template = cfg.model()
    path = cfg.cut()
    results = amplitude_sweep(template, path, cfg.integrator(), n_jobs=cfg.threads)
    t = Table([path.swept, "kind", "A", "q0", "period", "extrema_per_period"])
    for value, r in results:
        t.add(float(value), r.kind.value, r.A, r.q0, r.period, r.extrema_per_period)
    values = [v for v, _ in results]
    amps = [r.A for _, r in results]
    for k, fit in enumerate(scaling_fits(template, path, values, amps)):
        t.note(
            f"threshold_{k}",
            f"{fit.threshold!r} side={fit.side:+d} exponent={fit.exponent:.6g} n_fit={fit.n_points}",
        )
    return {"": t}, EXIT_OK


def cmd_entanglement(cfg: RunConfig):
    template = cfg.model()
    path = cfg.cut()
    traces = entanglement_sweep(template, path, cfg.integrator(), cfg.entanglement(), n_jobs=cfg.threads)
    t = Table([path.swept, "kind", "E_max", "E_min", "is_constant", "period", "converged", "min_symplectic"])
    series = Table([path.swept, "t", "E_N"])
    for value, tr in zip(path.values, traces):
        t.add(float(value), tr.kind.value, tr.E_max, tr.E_min, tr.is_constant, tr.period,
              tr.converged, tr.min_symplectic)
        if cfg.series:
            for ti, e in zip(tr.t, tr.E_N):
                series.add(float(value), float(ti), float(e))
    tables = {"": t}
    if cfg.series:
        tables["_series"] = series
    return tables, EXIT_OK


def cmd_fluctuation(cfg: RunConfig):
    template = cfg.model()
    path = cfg.cut()
    points = fluctuation_sweep(template, path, convention=cfg.convention, n_jobs=cfg.threads)
    t = Table([path.swept, "region", "radius_q", "radius_p", "excluded"])
    for p in points:
        t.add(p.value, p.region, p.radius_q, p.radius_p, p.excluded)
    return {"": t}, EXIT_OK


def cmd_temperature(cfg: RunConfig):
    nbars = cfg.nbars()
    template = cfg.model()
    path = cfg.cut()
    rows = temperature_sweep(
        template, path, nbars, cfg.integrator(), cfg.entanglement(), n_jobs=cfg.threads
    )
    t = Table([path.swept, "nbar", "E_max", "E_min", "is_constant"])
    for value, nbar, tr in rows:
        t.add(value, nbar, tr.E_max, tr.E_min, tr.is_constant)
    return {"": t}, EXIT_OK


def cmd_boundary_constant(cfg: RunConfig):
    template = cfg.model()
    samples = boundary_samples(
        template,
        parse_list(cfg.delta_cuts, "delta cuts"),
        parse_list(cfg.lambda_cuts, "lambda cuts"),
    )
    scan = boundary_constant_scan(
        template, samples, cfg.offset, convention=cfg.convention, n_jobs=cfg.threads
    )
    t = Table(["label", "along", "Delta", "Lambda", "E_N", "radius_q", "excluded"])
    for p in scan.points:
        t.add(p.sample.label, p.sample.along, p.params.Delta, p.params.Lambda, p.E_N, p.radius, p.excluded)
    t.note("mean", scan.mean)
    t.note("std", scan.std)
    t.note("relative_spread", scan.relative_spread)
    t.note("n_admissible", len(scan.admissible))
    code = EXIT_OK if scan.admissible else EXIT_NUMERICAL
    return {"": t}, code


COMMANDS = {
    "phase-diagram": (cmd_phase_diagram, "region I/II map of the (Lambda, Delta) plane"),
    "trajectory": (cmd_trajectory, "classical time series on the attractor at one point"),
    "amplitude": (cmd_amplitude, "oscillation amplitude along a cut, with threshold exponents"),
    "entanglement": (cmd_entanglement, "E_max / E_min of the c2-mechanics entanglement along a cut"),
    "fluctuation": (cmd_fluctuation, "stationary mechanical fluctuation radius along a cut"),
    "temperature": (cmd_temperature, "entanglement along a cut for several thermal occupations"),
    "boundary-constant": (cmd_boundary_constant, "stationary entanglement next to the lasing boundary"),
}

DEFAULT_TAGS = {"phase-diagram": "default", "trajectory": "point", "boundary-constant": "default"}


# ---------------------------------------------------------------------------
# argument handling


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Classical dynamics and fluctuation entanglement of a two-cavity phonon laser.",
        epilog=f"Thread count falls back to ${THREADS_ENV}, then to the CPU count.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS), help="what to compute")
    parser.add_argument("--config", metavar="FILE", help="flat key = value file; flags win")
    defaults = dict(RunConfig().items())
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        aliases = [flag]
        if f.name != f.name.lower():
            aliases.append("--" + f.name.lower().replace("_", "-"))
        parser.add_argument(
            *dict.fromkeys(aliases),
            dest=f.name,
            default=argparse.SUPPRESS,
            metavar=f.name.upper(),
            help=f"default: {defaults[f.name]}",
        )
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    mapping = read_config_file(args.config) if args.config else {}
    for key in RunConfig.keys():
        if hasattr(args, key):
            mapping[key] = getattr(args, key)
    return RunConfig.from_mapping(mapping)


def run(command: str, cfg: RunConfig) -> tuple[list[Path], int]:
    func, _ = COMMANDS[command]
    default_tag = DEFAULT_TAGS.get(command, "custom" if cfg.sweep else f"path{cfg.path}")
    tag = cfg.output_tag(default_tag)
    t0 = time.perf_counter()
    tables, code = func(cfg)
    wall = time.perf_counter() - t0
    out = Path(cfg.out)
    written = [
        write_table(out / f"{command}_{tag}{suffix}.csv", command, cfg, table, wall)
        for suffix, table in tables.items()
    ]
    return written, code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        logging.basicConfig(
            level=getattr(logging, cfg.log_level.upper(), logging.WARNING),
            format="%(levelname)s %(name)s: %(message)s",
        )
        written, code = run(args.command, cfg)
    except (UsageError, ValueError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except PhononLabError as exc:
        print(f"{PROG}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for path in written:
        print(path)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
