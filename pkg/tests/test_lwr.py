"""Scalar Riemann solver: classification, sampling, demand/supply flux."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from macroflow import diagrams, lwr


FD = diagrams.normalized_newell()


def make(rho_l, rho_r, fd=FD):
    return lwr.solve_riemann(lwr.ScalarRiemann(fd, rho_l, rho_r))


def test_constant_data():
    sol = make(0.4, 0.4)
    assert sol.kind == lwr.CONSTANT
    assert sol.rho_edge == 0.4
    assert lwr.sample_solution(sol, -2.0) == 0.4
    assert lwr.sample_solution(sol, 2.0) == 0.4


def test_left_lower_density_gives_backward_shock():
    sol = make(0.65, 0.9)
    assert sol.kind == lwr.SHOCK
    jump_f = FD.flow(0.9) - FD.flow(0.65)
    assert sol.speed == pytest.approx(jump_f / 0.25, rel=1e-13)
    assert sol.speed < 0.0
    assert sol.rho_edge == 0.9
    assert sol.flux == pytest.approx(FD.flow(0.9), rel=1e-14)


def test_transonic_rarefaction_hits_capacity():
    sol = make(0.65, 0.4)
    assert sol.kind == lwr.RAREFACTION
    assert FD.wave_speed(0.65) < 0.0 < FD.wave_speed(0.4)
    assert sol.rho_edge == pytest.approx(FD.critical_density(), rel=1e-12)
    assert sol.flux == pytest.approx(FD.capacity(), rel=1e-12)


def test_one_sided_rarefactions():
    # Both states on the free-flow side: the fan moves downstream.
    sol = make(0.3, 0.1)
    assert sol.kind == lwr.RAREFACTION
    assert sol.rho_edge == 0.3
    # Both congested: the fan moves upstream.
    sol = make(0.95, 0.8)
    assert sol.rho_edge == 0.8


def test_shock_sampling_sides():
    sol = make(0.2, 0.6)
    s = sol.speed
    assert lwr.sample_solution(sol, s - 0.1) == 0.2
    assert lwr.sample_solution(sol, s + 0.1) == 0.6


def test_fan_sampling_inverts_wave_speed():
    sol = make(0.9, 0.2)
    for rho_probe in (0.3, 0.5, 0.7, 0.85):
        xi = FD.wave_speed(rho_probe)
        assert lwr.sample_solution(sol, xi) == pytest.approx(rho_probe, abs=1e-8)
    assert lwr.sample_solution(sol, FD.wave_speed(0.9) - 1e-3) == 0.9
    assert lwr.sample_solution(sol, FD.wave_speed(0.2) + 1e-3) == 0.2


def test_demand_supply_cases():
    alpha = FD.critical_density()
    # Undercritical pair: upstream flow passes.
    assert lwr.demand_supply_flux(0.1, 0.2, FD) == pytest.approx(
        make(0.1, 0.2).flux, abs=1e-12)
    # Congested upstream, free downstream: capacity.
    assert lwr.demand_supply_flux(0.8, 0.2, FD) == pytest.approx(FD.capacity(), rel=1e-13)
    # Both exactly critical: capacity.
    assert lwr.demand_supply_flux(alpha, alpha, FD) == pytest.approx(FD.capacity(), rel=1e-13)


def test_flux_equivalence_random_pairs():
    rng = np.random.default_rng(42)
    rho_l = rng.uniform(1e-3, 1.0, size=10_000)
    rho_r = rng.uniform(1e-3, 1.0, size=10_000)
    fast = lwr.demand_supply_flux(rho_l, rho_r, FD)
    slow = np.array([make(a, b).flux for a, b in zip(rho_l, rho_r)])
    assert np.max(np.abs(fast - slow)) < 1e-12


@settings(max_examples=300, deadline=None)
@given(st.floats(0.01, 0.999), st.floats(0.01, 0.999))
def test_shock_entropy_and_rankine_hugoniot(rho_l, rho_r):
    sol = make(rho_l, rho_r)
    if sol.kind == lwr.SHOCK:
        res = sol.speed * (rho_l - rho_r) - (FD.flow(rho_l) - FD.flow(rho_r))
        assert abs(res) < 1e-12
        assert FD.wave_speed(rho_l) > sol.speed > FD.wave_speed(rho_r)
    elif sol.kind == lwr.RAREFACTION:
        assert FD.wave_speed(rho_l) < FD.wave_speed(rho_r)


def test_fluxes_match_for_other_families():
    for fd in (diagrams.greenshields(1.0, 1.0), diagrams.underwood(1.0, 0.5)):
        rng = np.random.default_rng(7)
        pairs = rng.uniform(fd.rho_max * 1e-3, fd.rho_max, size=(500, 2))
        for a, b in pairs:
            assert lwr.demand_supply_flux(a, b, fd) == pytest.approx(
                make(a, b, fd).flux, abs=1e-12)
