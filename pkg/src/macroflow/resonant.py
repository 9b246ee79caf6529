"""Riemann solver for the variable-lane-count kinematic-wave model.

The state is U = (a, rho) with a static lane count a > 0 and the flow
f(a, rho) = a * q1(rho/a), where q1 is the single-lane diagram (all lanes
share one condition). Adding a_t = 0 as a trivial conservation law makes
the system non-strictly hyperbolic: the lane-jump wave has speed zero and
can resonate with the kinematic wave where the latter's speed vanishes,
i.e. on the critical line rho/a = alpha.

A jump (U_L, U_R) resolves into one of ten wave combinations built from
standing waves (flow-preserving lane jumps that may not cross the critical
line), shocks, and rarefactions. The edge flux of every combination equals
min(sending(U_L), receiving(U_R)), which the tests verify exhaustively.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_root
from .errors import DomainError, RootBracketError

# Relative half-width of the band treated as exactly critical; inside it
# demand and supply coincide, so flux is insensitive to the tie-break.
CRITICAL_TOL = 1e-12

FLUX_UPSTREAM = "upstream flow"
FLUX_DOWNSTREAM = "downstream flow"
FLUX_CAP_UP = "upstream capacity"
FLUX_CAP_DOWN = "downstream capacity"

# Edge flux of each solution type (which of the four candidate quantities).
CASE_FLUX = {
    1: FLUX_UPSTREAM, 2: FLUX_UPSTREAM,
    3: FLUX_DOWNSTREAM, 7: FLUX_DOWNSTREAM, 8: FLUX_DOWNSTREAM,
    4: FLUX_CAP_DOWN, 9: FLUX_CAP_DOWN, 10: FLUX_CAP_DOWN,
    5: FLUX_CAP_UP, 6: FLUX_CAP_UP,
}


@dataclass(frozen=True)
class ResonantState:
    """Lane count and total density over those lanes."""

    lanes: float
    rho: float

    def __post_init__(self):
        if not self.lanes > 0.0:
            raise DomainError(f"lane count must be positive, got {self.lanes}")

    @property
    def rho_per_lane(self):
        return self.rho / self.lanes


@dataclass(frozen=True)
class StandingWave:
    left: ResonantState
    right: ResonantState
    speed = 0.0


@dataclass(frozen=True)
class ShockWave:
    left: ResonantState
    right: ResonantState
    speed: float


@dataclass(frozen=True)
class RarefactionWave:
    left: ResonantState
    right: ResonantState
    lambda_left: float
    lambda_right: float


@dataclass(frozen=True)
class ResonantSolution:
    case_id: int
    waves: tuple
    intermediates: tuple
    boundary_flux: float


def flow(state, fd):
    """Total flow a * q1(rho/a)."""
    return state.lanes * fd.flow(state.rho_per_lane)


def capacity(lanes, fd):
    return lanes * fd.capacity()


def demand(state, fd):
    """Sending capacity of the upstream side of an edge."""
    if state.rho_per_lane < fd.critical_density():
        return flow(state, fd)
    return capacity(state.lanes, fd)


def supply(state, fd):
    """Receiving capacity of the downstream side of an edge."""
    if state.rho_per_lane < fd.critical_density():
        return capacity(state.lanes, fd)
    return flow(state, fd)


def boundary_flux(u_left, u_right, fd):
    """Edge flux min(demand, supply); equals the per-type table value."""
    return min(demand(u_left, fd), supply(u_right, fd))


def demand_array(lanes, rho, fd):
    """Vectorized demand over arrays of lane counts and densities."""
    per_lane = np.asarray(rho, dtype=float) / lanes
    alpha = fd.critical_density()
    return np.where(per_lane < alpha,
                    lanes * fd.flow(per_lane, validate=False),
                    lanes * fd.capacity())


def supply_array(lanes, rho, fd):
    per_lane = np.asarray(rho, dtype=float) / lanes
    alpha = fd.critical_density()
    return np.where(per_lane < alpha,
                    lanes * fd.capacity(),
                    lanes * fd.flow(per_lane, validate=False))


def _invert_flow(fd, target_per_lane_flow, branch):
    """Per-lane density with q1(rho) = target on the given branch."""
    alpha = fd.critical_density()
    cap = fd.capacity()
    if target_per_lane_flow > cap * (1.0 + 1e-12):
        raise RootBracketError(
            f"per-lane flow {target_per_lane_flow} exceeds capacity {cap}")
    target = min(target_per_lane_flow, cap)
    if branch == "under":
        lo, hi = 0.0, alpha
    else:
        lo, hi = alpha, fd.rho_max
    g = lambda r: fd.flow(r, validate=False) - target
    if g(lo) == 0.0:
        return lo
    if g(hi) == 0.0:
        return hi
    scale = max(1.0, cap)
    return bracketed_root(g, lo, hi, residual_tol=1e-13 * scale)


def _lane_state(fd, lanes, per_lane_flow, branch):
    rho1 = _invert_flow(fd, per_lane_flow, branch)
    return ResonantState(lanes, lanes * rho1)


def classify(u_left, u_right, fd):
    """Resolve the jump into its wave combination (types 1..10).

    The left state's criticality selects the sub-family; the right state's
    position relative to the flow level of U_L (or of the left capacity),
    the critical line, and the lane-count threshold selects the type.
    Ties on the critical line break toward the lower type id.
    """
    alpha = fd.critical_density()
    a_l, a_r = u_left.lanes, u_right.lanes
    f_l = flow(u_left, fd)
    f_r = flow(u_right, fd)
    cap_l = capacity(a_l, fd)
    cap_r = capacity(a_r, fd)
    tol = CRITICAL_TOL * alpha
    left_under = u_left.rho_per_lane <= alpha + tol
    right_under = u_right.rho_per_lane < alpha - tol

    if left_under:
        # Lane count whose capacity equals the upstream flow: the standing
        # wave through U_L meets the critical line there.
        a_knee = f_l / fd.capacity()
        if f_r <= f_l and right_under and a_r >= a_knee:
            case = 1
        elif f_r >= f_l:
            case = 2
        elif not right_under:
            case = 3
        else:
            case = 4
    else:
        if f_r <= cap_l and right_under and a_r >= a_l:
            case = 5
        elif f_r >= cap_l:
            case = 6
        elif not right_under:
            case = 7 if f_r >= f_l else 8
        else:
            # Lane drop with free-flow downstream: the left wave direction
            # is set by the downstream capacity against the upstream flow.
            case = 9 if cap_r >= f_l else 10
    waves, mids = _build_waves(case, u_left, u_right, fd)
    flux = {
        FLUX_UPSTREAM: f_l,
        FLUX_DOWNSTREAM: f_r,
        FLUX_CAP_UP: cap_l,
        FLUX_CAP_DOWN: cap_r,
    }[CASE_FLUX[case]]
    return ResonantSolution(case, tuple(waves), tuple(mids), flux)


def _shock(fd, left, right):
    drho = right.rho - left.rho
    df = flow(right, fd) - flow(left, fd)
    speed = df / drho if abs(drho) > 1e-300 else _lambda(fd, left)
    return ShockWave(left, right, speed)


def _fan(fd, left, right):
    return RarefactionWave(left, right, _lambda(fd, left), _lambda(fd, right))


def _lambda(fd, state):
    return fd.wave_speed(state.rho_per_lane, validate=False)


def _build_waves(case, u_l, u_r, fd):
    alpha = fd.critical_density()
    a_l, a_r = u_l.lanes, u_r.lanes
    f_l = flow(u_l, fd)
    f_r = flow(u_r, fd)

    if case == 1:
        u1 = _lane_state(fd, a_r, f_l / a_r, "under")
        return [StandingWave(u_l, u1), _fan(fd, u1, u_r)], [u1]
    if case == 2:
        u1 = _lane_state(fd, a_r, f_l / a_r, "under")
        return [StandingWave(u_l, u1), _shock(fd, u1, u_r)], [u1]
    if case == 3:
        u1 = _lane_state(fd, a_l, f_r / a_l, "over")
        return [_shock(fd, u_l, u1), StandingWave(u1, u_r)], [u1]
    if case == 4:
        u2 = ResonantState(a_r, a_r * alpha)
        u1 = _lane_state(fd, a_l, flow(u2, fd) / a_l, "over")
        return [_shock(fd, u_l, u1), StandingWave(u1, u2), _fan(fd, u2, u_r)], [u1, u2]
    if case in (5, 6):
        u1 = ResonantState(a_l, a_l * alpha)
        u2 = _lane_state(fd, a_r, flow(u1, fd) / a_r, "under")
        tail = _fan(fd, u2, u_r) if case == 5 else _shock(fd, u2, u_r)
        return [_fan(fd, u_l, u1), StandingWave(u1, u2), tail], [u1, u2]
    if case in (7, 8):
        u1 = _lane_state(fd, a_l, f_r / a_l, "over")
        head = _fan(fd, u_l, u1) if case == 7 else _shock(fd, u_l, u1)
        return [head, StandingWave(u1, u_r)], [u1]
    if case in (9, 10):
        u2 = ResonantState(a_r, a_r * alpha)
        u1 = _lane_state(fd, a_l, flow(u2, fd) / a_l, "over")
        head = _fan(fd, u_l, u1) if case == 9 else _shock(fd, u_l, u1)
        return [head, StandingWave(u1, u2), _fan(fd, u2, u_r)], [u1, u2]
    raise AssertionError(f"unreachable case {case}")
