"""Lane-inhomogeneous Riemann solver: 10-type classification and fluxes."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroflow import diagrams, lwr, resonant
from macroflow.errors import RootBracketError
from macroflow.resonant import ResonantState, ShockWave, StandingWave, RarefactionWave


FD = diagrams.normalized_newell()
ALPHA = FD.critical_density()

lane_counts = st.sampled_from([0.25, 0.5, 1.0, 2.0, 3.0, 4.0])
fractions = st.floats(0.01, 0.99)


def state(lanes, per_lane_rho):
    return ResonantState(lanes, lanes * per_lane_rho)


def test_demand_supply_at_critical_state():
    u = state(2.0, ALPHA)
    assert resonant.demand(u, FD) == pytest.approx(resonant.capacity(2.0, FD), rel=1e-12)
    assert resonant.supply(u, FD) == pytest.approx(resonant.capacity(2.0, FD), rel=1e-12)


def test_undercritical_demand_below_capacity():
    u = state(1.0, 0.3 * ALPHA)
    assert resonant.demand(u, FD) == pytest.approx(resonant.flow(u, FD), rel=1e-14)
    assert resonant.demand(u, FD) < resonant.capacity(1.0, FD)


def test_capacity_scales_with_lanes():
    fd = diagrams.newell(60.0, -10.0, 250.0)
    assert resonant.capacity(3.0, fd) == pytest.approx(3.0 * fd.capacity(), rel=1e-14)
    # Per-lane scaling: f(a, rho) = a * q1(rho / a) maximized over rho.
    rho = np.linspace(1.0, 3.0 * 250.0 - 1.0, 2000)
    flows = [resonant.flow(ResonantState(3.0, r), fd) for r in rho]
    assert max(flows) <= resonant.capacity(3.0, fd) * (1.0 + 1e-12)
    u = ResonantState(3.0, 180.0)
    assert resonant.demand(u, fd) == pytest.approx(3.0 * fd.flow(60.0), rel=1e-12)
    assert resonant.demand(u, fd) == pytest.approx(3.0 * 1476.0, abs=3.0)


def test_type2_upstream_flow_passes():
    u_l = state(2.0, 0.5 * ALPHA)
    u_r = state(1.5, 0.95)  # deeply congested but receiving more than f_l
    sol = resonant.classify(u_l, u_r, FD)
    if resonant.flow(u_r, FD) >= resonant.flow(u_l, FD):
        assert sol.case_id == 2
        assert sol.boundary_flux == pytest.approx(resonant.flow(u_l, FD), rel=1e-12)


def test_identity_data_is_degenerate_type1():
    u = state(3.0, 0.4 * ALPHA)
    sol = resonant.classify(u, u, FD)
    assert sol.case_id == 1
    assert sol.boundary_flux == pytest.approx(resonant.flow(u, FD), rel=1e-14)
    for w in sol.waves:
        assert abs(w.left.rho - w.right.rho) < 1e-9 or isinstance(w, StandingWave)


def test_lane_drop_on_congested_upstream_caps_at_downstream_capacity():
    u_l = state(3.0, 1.4 * ALPHA)
    u_r = state(1.0, 0.5 * ALPHA)
    sol = resonant.classify(u_l, u_r, FD)
    assert sol.case_id in (9, 10)
    assert sol.boundary_flux == pytest.approx(resonant.capacity(1.0, FD), rel=1e-12)
    # Stronger drop: upstream flow exceeds the narrow side's capacity, so
    # the left wave steepens into a shock (type 10).
    u_l2 = state(3.0, 1.05 * ALPHA)
    sol2 = resonant.classify(u_l2, u_r, FD)
    assert resonant.flow(u_l2, FD) > resonant.capacity(1.0, FD)
    assert sol2.case_id == 10
    assert isinstance(sol2.waves[0], ShockWave)
    assert sol2.waves[0].speed < 0.0


def test_homogeneous_reduction_matches_scalar_solver():
    rng = np.random.default_rng(3)
    for _ in range(300):
        rho_l, rho_r = rng.uniform(1e-3, 1.0, size=2)
        f_res = resonant.boundary_flux(ResonantState(1.0, rho_l),
                                       ResonantState(1.0, rho_r), FD)
        f_lwr = lwr.demand_supply_flux(rho_l, rho_r, FD)
        assert f_res == f_lwr


def test_min_formula_matches_classifier_on_grid():
    ratios = [0.25, 0.5, 1.0, 2.0, 4.0]
    per_lane = np.linspace(0.02, 0.98, 20)
    worst = 0.0
    for ratio in ratios:
        for rl in per_lane:
            for rr in per_lane:
                u_l = state(1.0, rl)
                u_r = state(ratio, rr)
                sol = resonant.classify(u_l, u_r, FD)
                direct = resonant.boundary_flux(u_l, u_r, FD)
                worst = max(worst, abs(sol.boundary_flux - direct))
    assert worst < 1e-10


def _min_formula(u_l, u_r):
    return min(resonant.demand(u_l, FD), resonant.supply(u_r, FD))


def test_lebacque_condition_rows():
    # Eight (lane order, criticality) combinations against their listed
    # closed-form fluxes.
    rng = np.random.default_rng(11)
    caps = {a: resonant.capacity(a, FD) for a in (1.0, 2.0)}
    for _ in range(400):
        uc_l = rng.uniform(0.05, 0.95) * ALPHA
        oc_l = ALPHA + rng.uniform(0.05, 0.9) * (1.0 - ALPHA)
        uc_r = rng.uniform(0.05, 0.95) * ALPHA
        oc_r = ALPHA + rng.uniform(0.05, 0.9) * (1.0 - ALPHA)
        for a_l, a_r in ((1.0, 2.0), (2.0, 1.0)):
            ul_uc, ul_oc = state(a_l, uc_l), state(a_l, oc_l)
            ur_uc, ur_oc = state(a_r, uc_r), state(a_r, oc_r)
            f = lambda u: resonant.flow(u, FD)
            if a_l <= a_r:
                assert _min_formula(ul_uc, ur_uc) == pytest.approx(f(ul_uc), rel=1e-12)
                assert _min_formula(ul_oc, ur_uc) == pytest.approx(caps[a_l], rel=1e-12)
                assert _min_formula(ul_oc, ur_oc) == pytest.approx(
                    min(caps[a_l], f(ur_oc)), rel=1e-12)
            else:
                assert _min_formula(ul_uc, ur_uc) == pytest.approx(
                    min(caps[a_r], f(ul_uc)), rel=1e-12)
                assert _min_formula(ul_oc, ur_uc) == pytest.approx(caps[a_r], rel=1e-12)
                assert _min_formula(ul_oc, ur_oc) == pytest.approx(f(ur_oc), rel=1e-12)
            assert _min_formula(ul_uc, ur_oc) == pytest.approx(
                min(f(ul_uc), f(ur_oc)), rel=1e-12)


@settings(max_examples=400, deadline=None)
@given(lane_counts, fractions, lane_counts, fractions)
def test_solution_structure_properties(a_l, x_l, a_r, x_r):
    u_l = ResonantState(a_l, a_l * x_l)
    u_r = ResonantState(a_r, a_r * x_r)
    sol = resonant.classify(u_l, u_r, FD)

    # Flux agreement with the min formula.
    assert abs(sol.boundary_flux - resonant.boundary_flux(u_l, u_r, FD)) < 1e-10

    strength_tol = 1e-9
    lo = -np.inf
    for w in sol.waves:
        if isinstance(w, StandingWave):
            # Flow continuity across the lane jump.
            fl = resonant.flow(w.left, FD)
            fr = resonant.flow(w.right, FD)
            assert abs(fl - fr) < 1e-10
            # Both endpoints on one side of the critical line (or on it).
            sl = w.left.rho_per_lane - ALPHA
            sr = w.right.rho_per_lane - ALPHA
            assert sl * sr >= -1e-9
            speeds = (0.0, 0.0)
        elif isinstance(w, ShockWave):
            speeds = (w.speed, w.speed)
        else:
            assert isinstance(w, RarefactionWave)
            if abs(w.left.rho - w.right.rho) > strength_tol:
                assert w.lambda_left <= w.lambda_right + 1e-12
            speeds = (w.lambda_left, w.lambda_right)
        if abs(w.left.rho - w.right.rho) > strength_tol or isinstance(w, StandingWave):
            assert speeds[0] >= lo - 1e-9
            lo = speeds[1]


def test_unreachable_branch_target_raises():
    with pytest.raises(RootBracketError):
        resonant._invert_flow(FD, FD.capacity() * 1.5, "under")
