#!/usr/bin/env python3
"""Classify a gallery of jump problems across all four models."""

from macroflow import diagrams, lwr, resonant, second_order as so
from macroflow.resonant import ResonantState
from macroflow.second_order import PWModel, State2, ZhangModel

NEWELL = diagrams.normalized_newell()
KERNER = diagrams.kerner_sigmoid()


def main():
    print("scalar kinematic wave (normalized Newell)")
    for pair in ((0.65, 0.9), (0.65, 0.4), (0.3, 0.1)):
        sol = lwr.solve_riemann(lwr.ScalarRiemann(NEWELL, *pair))
        print(f"  {pair}: {sol.kind:11s} edge rho {sol.rho_edge:.4f} "
              f"flux {sol.flux:.4f}")

    print("lane-inhomogeneous model")
    cases = (
        (ResonantState(3.0, 3.0 * 0.3), ResonantState(3.0, 3.0 * 0.3)),
        (ResonantState(3.0, 3.0 * 0.8), ResonantState(1.0, 0.3)),
        (ResonantState(2.0, 2.0 * 0.2), ResonantState(3.0, 3.0 * 0.9)),
    )
    for u_l, u_r in cases:
        sol = resonant.classify(u_l, u_r, NEWELL)
        print(f"  ({u_l.lanes:.0f} lanes @{u_l.rho_per_lane:.2f}) -> "
              f"({u_r.lanes:.0f} lanes @{u_r.rho_per_lane:.2f}): "
              f"type {sol.case_id:2d} flux {sol.boundary_flux:.4f}")

    zhang = ZhangModel(NEWELL, tau=10.0)
    pw = PWModel(KERNER, tau=1.0, c0=2.48445)
    print("second-order models")
    for name, model, u_l, u_r in (
            ("slowdown", zhang, State2(0.65, NEWELL.speed(0.65)),
             State2(0.65, NEWELL.speed(0.65) - 0.2)),
            ("speedup", zhang, State2(0.65, NEWELL.speed(0.65)),
             State2(0.65, NEWELL.speed(0.65) + 0.2)),
            ("drop", pw, State2(0.16, KERNER.speed(0.16)),
             State2(0.14, KERNER.speed(0.16))),
            ("rise", pw, State2(0.16, KERNER.speed(0.16)),
             State2(0.18, KERNER.speed(0.16)))):
        pattern, mid = so.solve_intermediate(model, u_l, u_r)
        avg = so.boundary_average(model, u_l, u_r)
        print(f"  {model.kind}/{name:9s}: {pattern:5s} mid=({mid.rho:.4f}, "
              f"{mid.v:.4f}) edge=({avg.rho:.4f}, {avg.v:.4f})")


if __name__ == "__main__":
    main()
