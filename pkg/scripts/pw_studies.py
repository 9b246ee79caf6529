#!/usr/bin/env python3
"""Constant-sound-speed studies: stability probe and scheme comparison.

Usage:
    python scripts/pw_studies.py stability
    python scripts/pw_studies.py comparison
"""

import sys

import numpy as np

from macroflow import convergence, diagrams
from macroflow.godunov import (Grid1D, NeumannBC, PeriodicBC,
                               SimulationConfig, SimulationState)
from macroflow.second_order import PWModel

KERNER = diagrams.kerner_sigmoid()
C0 = 2.48445


def global_perturbation(rho_h, n, t_end, bc, scheme="first_order", dt=None):
    grid = Grid1D(0.0, 800.0, n, bc)
    x = grid.cell_centers()
    rho = rho_h + 0.02 * np.sin(2.0 * np.pi * x / 800.0)
    v = KERNER.speed(rho_h) - 0.02 * np.cos(2.0 * np.pi * x / 800.0)
    model = PWModel(KERNER, tau=1.0, c0=C0)
    return SimulationConfig(model=model, grid=grid,
                            initial=SimulationState(0.0, rho, m=rho * v),
                            scheme=scheme, t_end=t_end, dt=dt)


def stability():
    rc1, rc2 = diagrams.pw_stability_bounds(KERNER, C0)
    print(f"critical densities: ({rc1:.4f}, {rc2:.4f})")
    for bc_name, bc in (("periodic", PeriodicBC()), ("neumann", NeumannBC())):
        for rho_h in (0.16, 0.17):
            rep = convergence.stability_probe(
                lambda n, r=rho_h, b=bc: global_perturbation(r, n, 200.0, b))
            tail = f" errors {['%.3e' % e for e in rep.errors]}"
            if rep.aborted:
                tail += f" aborted at grids {rep.aborted}"
            print(f"{bc_name:8s} rho_h={rho_h}: {rep.verdict}{tail}")


def comparison():
    grids = [64, 128, 256, 512, 1024]
    for scheme in ("first_order", "pember", "fractional", "leveque"):
        rep = convergence.convergence_study(
            lambda n, s=scheme: global_perturbation(
                0.16, n, 400.0, NeumannBC(), scheme=s, dt=(800.0 / n) / 8.0),
            grids)
        print(f"\n== {scheme} ==")
        for field in ("rho", "v"):
            for kind in ("L1", "L2", "Linf"):
                errs = rep.errors(field, kind)
                rates = rep.rates(field, kind)
                print(f"{field:3s} {kind:4s}: "
                      + " ".join(f"{e:.2e}" for e in errs)
                      + " | rates " + " ".join(f"{r:+.3f}" for r in rates))


def main():
    mode = sys.argv[1] if len(sys.argv) > 1 else "stability"
    if mode == "stability":
        stability()
    elif mode == "comparison":
        comparison()
    else:
        print("usage: pw_studies.py [stability|comparison]", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
