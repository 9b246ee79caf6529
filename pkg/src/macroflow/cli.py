"""Command-line driver: scenario in, CSV out.

Subcommands: riemann | simulate | converge | stability | network.
Every output file starts with '#'-prefixed header lines carrying the tool
version, the fully resolved scenario (replayable TOML), and the seed;
numbers are written with 17 significant digits so downstream checks can
compare files exactly. Exit codes: 0 success, 2 scenario problems,
3 runtime model failures.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import __version__, convergence, godunov, lwr, resonant
from . import scenario as scenario_mod
from . import second_order
from .errors import MacroflowError, ScenarioError, StepError

FMT = "%.17g"


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return FMT % float(value)


class CsvWriter:
    def __init__(self, path, scn, seed):
        self.lines = []
        self.path = path
        self.comment(f"macroflow {__version__}")
        self.comment(f"seed = {seed}")
        self.comment("scenario:")
        for line in scenario_mod.resolved_document(scn).splitlines():
            self.comment("  " + line)

    def comment(self, text):
        self.lines.append("# " + text if text else "#")

    def columns(self, *names):
        self.lines.append(",".join(names))

    def row(self, *values):
        self.lines.append(",".join(_fmt(v) for v in values))

    def write(self):
        text = "\n".join(self.lines) + "\n"
        if self.path == "-":
            sys.stdout.write(text)
        else:
            with open(self.path, "w") as handle:
                handle.write(text)


def scenario_from_header(path):
    """Re-parse the scenario embedded in a result file's header."""
    lines = []
    with open(path) as handle:
        in_scenario = False
        for line in handle:
            if line.startswith("# scenario:"):
                in_scenario = True
                continue
            if in_scenario:
                if not line.startswith("#   "):
                    break
                lines.append(line[4:])
    return scenario_mod.parse_scenario("".join(lines))


# -- subcommands ---------------------------------------------------------------


def run_riemann(scn, out, seed):
    model, left, right = scenario_mod.build_riemann_inputs(scn)
    writer = CsvWriter(out, scn, seed)
    if model.kind == "lwr":
        sol = lwr.solve_riemann(lwr.ScalarRiemann(model.fd, left, right))
        writer.columns("kind", "speed_left", "speed_right", "rho_edge", "flux")
        writer.row(sol.kind, sol.edge_left, sol.edge_right, sol.rho_edge,
                   sol.flux)
    elif model.kind == "resonant":
        sol = resonant.classify(left, right, model.fd)
        writer.columns("case_id", "n_waves", "boundary_flux",
                       "mid1_lanes", "mid1_rho", "mid2_lanes", "mid2_rho")
        mids = list(sol.intermediates) + [None, None]
        cells = []
        for m in mids[:2]:
            cells += [m.lanes, m.rho] if m else [float("nan")] * 2
        writer.row(sol.case_id, len(sol.waves), sol.boundary_flux, *cells)
    else:
        pattern, mid = second_order.solve_intermediate(model, left, right)
        avg = second_order.boundary_average(model, left, right)
        writer.columns("pattern", "rho_mid", "v_mid", "rho_edge", "v_edge")
        writer.row(pattern, mid.rho, mid.v, avg.rho, avg.v)
    writer.write()


def run_simulate(scn, out, seed, n_cells=None, scheme=None):
    cfg = scenario_mod.build_sim_config(scn, n_cells=n_cells, scheme=scheme)
    snapshots = godunov.run_simulation(cfg)
    writer = CsvWriter(out, scn, seed)
    x = cfg.grid.cell_centers()
    has_speed = cfg.model.kind in ("zhang", "pw")
    writer.columns(*(("t", "cell", "x", "rho", "v") if has_speed
                     else ("t", "cell", "x", "rho")))
    for t, state in snapshots:
        v = state.speed_field(cfg.model) if has_speed else None
        for i in range(cfg.grid.n_cells):
            if has_speed:
                writer.row(t, i, x[i], state.rho[i], v[i])
            else:
                writer.row(t, i, x[i], state.rho[i])
    writer.write()


def run_converge(scn, out, seed, grids=None, scheme=None):
    grids = grids or scn.table("convergence")["grids"]
    report = convergence.convergence_study(
        lambda n: scenario_mod.build_sim_config(scn, n_cells=n, scheme=scheme),
        grids, norm_kinds=tuple(scn.table("convergence")["norms"]))
    writer = CsvWriter(out, scn, seed)
    writer.columns("n_coarse", "n_fine", "field", "norm", "error", "rate")
    for r in report.rows:
        writer.row(r.pair[0], r.pair[1], r.field, r.norm_kind, r.error,
                   "" if r.rate is None else FMT % r.rate)
    writer.write()
    return report


def run_stability(scn, out, seed, grids=None):
    grids = grids or scn.table("stability")["grids"]
    report = convergence.stability_probe(
        lambda n: scenario_mod.build_sim_config(scn, n_cells=n), grids)
    writer = CsvWriter(out, scn, seed)
    writer.comment(f"verdict = {report.verdict}")
    if report.aborted:
        writer.comment("aborted_grids = " + ",".join(map(str, report.aborted)))
    writer.columns("n_coarse", "n_fine", "l1_error")
    pairs = [p for p in zip(report.grid_sizes, report.grid_sizes[1:])]
    for pair, eps in zip(pairs, report.errors):
        writer.row(pair[0], pair[1], eps)
    writer.write()
    return report


def run_network_cmd(scn, out, seed):
    net = scenario_mod.build_network(scn)
    n_steps = scenario_mod.network_steps(scn)
    rows = scenario_mod.network_mod.run_network(net, n_steps)
    writer = CsvWriter(out, scn, net.seed)
    destinations = sorted({d for row in rows
                           for z in row["zones"].values()
                           for d in z["by_destination"]})
    writer.comment("zone table")
    writer.columns("t", "zone", "N", "rho", "v",
                   *(f"N_dest_{d}" for d in destinations))
    for row in rows:
        for zid in sorted(row["zones"]):
            z = row["zones"][zid]
            writer.row(row["t"], zid, z["N"], z["rho"], z["v"],
                       *(z["by_destination"].get(d, 0.0) for d in destinations))
    writer.comment("connector table")
    writer.columns("t", "connector", "vehicles")
    for row in rows:
        for cid in sorted(row["connectors"]):
            writer.row(row["t"], cid, row["connectors"][cid])
    writer.write()
    return rows


def reseeded(scn, seed):
    data = dict(scn.data)
    data["scenario"] = {"kind": scn.command, "seed": int(seed)}
    return scenario_mod.Scenario(scn.command, data, int(seed))


# -- entry point -----------------------------------------------------------------


def make_parser():
    parser = argparse.ArgumentParser(
        prog="macroflow",
        description="Macroscopic traffic flow studies driven by scenario files")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in scenario_mod.COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=True,
                       help="path to the scenario TOML")
        p.add_argument("--out", default="-",
                       help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")
        if name in ("simulate", "converge"):
            p.add_argument("--scheme", default=None,
                           help="override scheme.name")
        if name in ("converge", "stability", "simulate"):
            p.add_argument("--grid", default=None,
                           help="cell count, or comma list for studies")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        with open(args.scenario) as handle:
            scn = scenario_mod.parse_scenario(handle.read())
        if scn.command != args.command:
            raise ScenarioError(
                f"scenario is for {scn.command!r}, invoked as {args.command!r}")
        seed = scn.seed if args.seed is None else args.seed
        if seed != scn.seed:
            scn = reseeded(scn, seed)
        grids = None
        if getattr(args, "grid", None):
            grids = [int(g) for g in str(args.grid).split(",")]
        if args.command == "riemann":
            run_riemann(scn, args.out, seed)
        elif args.command == "simulate":
            run_simulate(scn, args.out, seed,
                         n_cells=grids[0] if grids else None,
                         scheme=getattr(args, "scheme", None))
        elif args.command == "converge":
            run_converge(scn, args.out, seed, grids=grids,
                         scheme=getattr(args, "scheme", None))
        elif args.command == "stability":
            run_stability(scn, args.out, seed, grids=grids)
        else:
            run_network_cmd(scn, args.out, seed)
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"scenario-error: {exc}", file=sys.stderr)
        return 2
    except StepError as exc:
        print(f"step-error: {exc}", file=sys.stderr)
        return 3
    except MacroflowError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
