"""Grid-to-grid error vectors, norms, rates, and the stability probe."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import godunov
from .errors import DomainError, StepError

NORM_KINDS = ("L1", "L2", "Linf")

# Verdict hysteresis: the error sequence must drop by this factor to call a
# run stable, so near-threshold scenarios do not flap between verdicts.
STABLE_DROP = 0.95


def coarsen_diff(fine, coarse):
    """Difference of the pairwise-averaged fine field against the coarse one.

    fine has exactly twice the cells of coarse; entry i is
    (fine[2i] + fine[2i+1]) / 2 - coarse[i].
    """
    fine = np.asarray(fine, dtype=float)
    coarse = np.asarray(coarse, dtype=float)
    if fine.shape[0] != 2 * coarse.shape[0]:
        raise DomainError(
            f"fine field must have 2x the cells: {fine.shape[0]} vs {coarse.shape[0]}")
    paired = 0.5 * (fine[0::2] + fine[1::2])
    return paired - coarse


def norm(err, kind):
    """Per-cell mean norms, so values are comparable across grid sizes."""
    err = np.asarray(err, dtype=float)
    if err.size == 0:
        raise DomainError("empty error vector")
    if kind == "L1":
        return float(np.mean(np.abs(err)))
    if kind == "L2":
        return float(np.sqrt(np.mean(err**2)))
    if kind == "Linf":
        return float(np.max(np.abs(err)))
    raise DomainError(f"unknown norm {kind!r}")


def convergence_rate(eps_coarse, eps_fine):
    """log2 of the error drop under one refinement."""
    if not (eps_coarse > 0.0 and eps_fine > 0.0):
        raise DomainError("convergence rate needs positive errors")
    return math.log2(eps_coarse / eps_fine)


@dataclass(frozen=True)
class ConvergenceRow:
    field: str
    norm_kind: str
    pair: tuple          # (n_coarse, n_fine)
    error: float
    rate: float | None   # vs the next refinement pair, None on the last


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple

    def errors(self, field, norm_kind):
        return [r.error for r in self.rows
                if r.field == field and r.norm_kind == norm_kind]

    def rates(self, field, norm_kind):
        return [r.rate for r in self.rows
                if r.field == field and r.norm_kind == norm_kind
                and r.rate is not None]


def _final_fields(snapshot, model_kind):
    state = snapshot[-1][1]
    fields = {"rho": state.rho}
    if state.v is not None:
        fields["v"] = state.v
    elif state.m is not None:
        fields["v"] = state.m / state.rho
    return fields


def convergence_study(make_config, grid_sizes, norm_kinds=NORM_KINDS):
    """Run make_config(n) for each size and tabulate refinement errors.

    make_config returns a ready SimulationConfig whose grid has n cells;
    successive sizes must double. Errors compare each grid against the next
    finer one; rates compare successive error pairs.
    """
    sizes = list(grid_sizes)
    for a, b in zip(sizes, sizes[1:]):
        if b != 2 * a:
            raise DomainError("grid sizes must double between refinements")
    runs = {}
    for n in sizes:
        cfg = make_config(n)
        runs[n] = _final_fields(godunov.run_simulation(cfg), cfg.model.kind)

    fields = sorted(runs[sizes[0]])
    rows = []
    for field in fields:
        for kind in norm_kinds:
            errors = []
            for n_coarse, n_fine in zip(sizes, sizes[1:]):
                diff = coarsen_diff(runs[n_fine][field], runs[n_coarse][field])
                errors.append(((n_coarse, n_fine), norm(diff, kind)))
            for i, (pair, eps) in enumerate(errors):
                rate = None
                if i + 1 < len(errors) and errors[i + 1][1] > 0.0 and eps > 0.0:
                    rate = convergence_rate(eps, errors[i + 1][1])
                rows.append(ConvergenceRow(field, kind, pair, eps, rate))
    return ConvergenceReport(tuple(rows))


@dataclass(frozen=True)
class StabilityReport:
    verdict: str                 # "stable" | "unstable"
    errors: tuple                # L1 refinement errors of rho, coarse to fine
    grid_sizes: tuple
    aborted: tuple = ()          # grid sizes whose runs blew up
    drop_band: float = STABLE_DROP


def stability_probe(make_config, grid_sizes=(512, 1024, 2048)):
    """Refinement-based stability check.

    Runs the scenario at each size and compares successive refinements in
    the per-cell L1 norm of rho. A stable configuration shows strictly
    decreasing differences (within the hysteresis band); growth means the
    model amplifies grid-scale detail, i.e. the data sits in an unstable
    regime. A run that blows up outright (unsolvable Riemann data after the
    perturbation has grown without bound) is the strongest such signal and
    yields the unstable verdict directly, with the aborted sizes recorded.
    """
    sizes = list(grid_sizes)
    runs = {}
    aborted = []
    for n in sizes:
        cfg = make_config(n)
        try:
            runs[n] = _final_fields(godunov.run_simulation(cfg), cfg.model.kind)
        except StepError:
            aborted.append(n)
    eps = []
    for n_coarse, n_fine in zip(sizes, sizes[1:]):
        if n_coarse in runs and n_fine in runs:
            eps.append(norm(coarsen_diff(runs[n_fine]["rho"],
                                         runs[n_coarse]["rho"]), "L1"))
    if aborted:
        return StabilityReport("unstable", tuple(eps), tuple(sizes),
                               tuple(aborted))
    stable = all(later < STABLE_DROP * earlier
                 for earlier, later in zip(eps, eps[1:]))
    return StabilityReport("stable" if stable else "unstable",
                           tuple(eps), tuple(sizes))
