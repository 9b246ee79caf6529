#!/usr/bin/env python3
"""Refinement study for the variable-sound-speed model on the sine scenario.

Prints the error/rate table (both fields, three norms) for the first- and
second-order schemes. Step count equals the cell count, matching the
reference setup.
"""

import numpy as np

from macroflow import convergence, diagrams
from macroflow.godunov import Grid1D, NeumannBC, SimulationConfig, SimulationState
from macroflow.second_order import ZhangModel

NEWELL = diagrams.normalized_newell()
GRIDS = [64, 128, 256, 512, 1024]


def make_config(scheme):
    def make(n):
        grid = Grid1D(0.0, 8000.0, n, NeumannBC())
        x = grid.cell_centers()
        rho = 0.65 + np.sin(2.0 * np.pi * x / 8000.0) / 4.0
        return SimulationConfig(
            model=ZhangModel(NEWELL, tau=10.0), grid=grid,
            initial=SimulationState(0.0, rho, v=NEWELL.speed(rho) + 0.1),
            scheme=scheme, t_end=4000.0, dt=4000.0 / n)
    return make


def print_table(report, scheme):
    print(f"\n== {scheme} ==")
    header = "field norm  " + "  ".join(
        f"{a}-{b}" for a, b in zip(GRIDS, GRIDS[1:]))
    print(header)
    for field in ("rho", "v"):
        for kind in ("L1", "L2", "Linf"):
            errs = report.errors(field, kind)
            rates = report.rates(field, kind) + [None]
            cells = []
            for e, r in zip(errs, rates):
                cells.append(f"{e:.2e}" + (f" ({r:.3f})" if r is not None else ""))
            print(f"{field:5s} {kind:4s} " + "  ".join(cells))


def main():
    for scheme in ("first_order", "second_order"):
        report = convergence.convergence_study(make_config(scheme), GRIDS)
        print_table(report, scheme)


if __name__ == "__main__":
    main()
