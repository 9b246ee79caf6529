"""Diagram families: closed forms, derivatives, critical points."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from macroflow import diagrams
from macroflow.errors import DomainError, RootBracketError


ALL_DIAGRAMS = {
    "greenshields": diagrams.greenshields(1.0, 1.0),
    "polynomial": diagrams.polynomial(1.0, 1.0, 3.0),
    "greenberg": diagrams.greenberg(0.8, 1.0),
    "underwood": diagrams.underwood(1.0, 0.5),
    "newell": diagrams.normalized_newell(),
    "kerner": diagrams.kerner_sigmoid(),
}


def sample_interior(fd, n=1000):
    lo = fd.rho_max * 1e-3
    return np.linspace(lo, fd.rho_max * 0.999, n)


def test_newell_normalized_closed_form():
    fd = diagrams.normalized_newell()
    assert fd.speed(1.0) == pytest.approx(0.0, abs=1e-15)
    # rho -> 0 uses the limit convention.
    assert fd.speed(0.0) == 1.0
    assert fd.speed(1e-9) == pytest.approx(1.0, abs=1e-15)
    rho = 0.37
    assert fd.speed(rho) == pytest.approx(1.0 - math.exp(1.0 - 1.0 / rho), rel=1e-14)


def test_newell_dimensional_flow_matches_reported_point():
    # 60 mph free flow, -10 mph jam wave, 250 vpm jam density: the flow at
    # 60 vpm is 1476 vph (to the nearest vehicle).
    fd = diagrams.newell(60.0, -10.0, 250.0)
    assert fd.flow(60.0) == pytest.approx(1476.0, abs=1.0)
    assert fd.flow(0.0) == 0.0
    assert fd.flow(250.0) == pytest.approx(0.0, abs=1e-12)


def test_flow_vanishes_at_domain_ends():
    for name, fd in ALL_DIAGRAMS.items():
        if name == "greenberg":
            assert fd.flow(fd.rho_max) == pytest.approx(0.0, abs=1e-12)
            continue
        if name == "underwood":
            # No jam point; flow stays positive on the valid domain.
            assert fd.flow(fd.rho_max) > 0.0
            continue
        assert fd.flow(fd.rho_max) == pytest.approx(0.0, abs=1e-9), name


def test_domain_errors():
    fd = diagrams.normalized_newell()
    with pytest.raises(DomainError):
        fd.speed(-0.1)
    with pytest.raises(DomainError):
        fd.speed(1.5)
    with pytest.raises(DomainError):
        diagrams.greenberg(1.0, 1.0).speed(0.0)


@pytest.mark.parametrize("name", sorted(ALL_DIAGRAMS))
def test_speed_decreasing_and_flow_concave(name):
    fd = ALL_DIAGRAMS[name]
    rho = sample_interior(fd)
    slope = fd.speed_slope(rho)
    # Toward rho -> 0 the Newell slope underflows to -0.0; allow that.
    assert np.all(slope <= 0.0)
    assert np.all(slope[rho >= 0.02 * fd.rho_max] < 0.0)
    # The sigmoid family is concave only below its inflection tail; the
    # solvers that rely on concavity never run on it (it drives the
    # constant-sound-speed model, whose characteristics ignore f'').
    hi = 0.29 if name == "kerner" else fd.rho_max * 0.999
    inner = np.linspace(fd.rho_max * 2e-3, hi, 999)
    h = fd.rho_max * 1e-4
    f2 = (fd.flow(inner + h) - 2.0 * fd.flow(inner) + fd.flow(inner - h)) / h**2
    assert np.all(f2 < 1e-9)


def test_kerner_flow_loses_concavity_past_inflection_tail():
    fd = ALL_DIAGRAMS["kerner"]
    h = 1e-4
    rho = 0.45
    f2 = (fd.flow(rho + h) - 2.0 * fd.flow(rho) + fd.flow(rho - h)) / h**2
    assert f2 > 0.0


@pytest.mark.parametrize("name", sorted(ALL_DIAGRAMS))
def test_speed_slope_matches_central_difference(name):
    fd = ALL_DIAGRAMS[name]
    rho = sample_interior(fd, 200)
    h = fd.rho_max * 1e-7
    inner = rho[(rho - h > 0) & (rho + h < fd.rho_max)]
    fd_slope = fd.speed_slope(inner)
    num = (fd.speed(inner + h) - fd.speed(inner - h)) / (2.0 * h)
    assert np.allclose(fd_slope, num, rtol=1e-5, atol=1e-8)


def test_wave_speed_consistency():
    fd = diagrams.normalized_newell()
    rho, v = 0.42, 0.3
    ws_z = diagrams.wave_speeds(fd, rho, v, model="zhang")
    assert ws_z.lambda1 + ws_z.lambda2 == pytest.approx(2.0 * v, rel=5e-16)
    assert ws_z.lambda1 < ws_z.lambda2
    ws_p = diagrams.wave_speeds(fd, rho, v, model="pw", c0=0.7)
    assert ws_p.lambda2 - ws_p.lambda1 == pytest.approx(2.0 * 0.7, rel=5e-16)
    assert ws_p.lambda2 > 0.0


def test_pw_lambda1_zero_at_sound_speed():
    fd = diagrams.normalized_newell()
    ws = diagrams.wave_speeds(fd, 0.3, 0.7, model="pw", c0=0.7)
    assert ws.lambda1 == 0.0


def test_zhang_lambda1_equals_wave_speed_on_equilibrium():
    fd = diagrams.normalized_newell()
    for rho in (0.2, 0.5, 0.83):
        ws = diagrams.wave_speeds(fd, rho, fd.speed(rho), model="zhang")
        assert ws.lambda1 == pytest.approx(ws.lambda_star, rel=1e-13)


def test_newell_subcharacteristic_formula():
    # Normalized form: wave speed = 1 - (1 + 1/rho) exp(1 - 1/rho).
    fd = diagrams.normalized_newell()
    for rho in (0.1, 0.3, 0.6, 0.9):
        expected = 1.0 - (1.0 + 1.0 / rho) * math.exp(1.0 - 1.0 / rho)
        assert fd.wave_speed(rho) == pytest.approx(expected, rel=1e-13)


def test_velocity_flux_greenshields_table_value():
    fd = diagrams.greenshields(1.0, 1.0)
    assert fd.velocity_flux(1.0) == pytest.approx(0.5, rel=1e-14)


@pytest.mark.parametrize("name", sorted(ALL_DIAGRAMS))
def test_velocity_flux_derivative(name):
    fd = ALL_DIAGRAMS[name]
    rho = np.linspace(fd.rho_max * 0.05, fd.rho_max * 0.95, 25)
    h = fd.rho_max * 1e-6
    num = (fd.velocity_flux(rho + h) - fd.velocity_flux(rho - h)) / (2.0 * h)
    exact = rho * fd.speed_slope(rho) ** 2
    assert np.allclose(num, exact, rtol=1e-6, atol=1e-10 * max(1.0, np.max(np.abs(exact))))


def test_velocity_flux_newell_vs_quadrature_oracle():
    # Independent oracle: adaptive quadrature of phi'(rho) = rho (v')^2
    # anchored at rho0; only differences of phi are meaningful.
    fd = diagrams.normalized_newell()
    rho0 = 0.2

    def dphi(r):
        return r * fd.speed_slope(r) ** 2

    for rho in (0.3, 0.5, 0.75, 0.95):
        oracle, _ = quad(dphi, rho0, rho, epsabs=1e-12, epsrel=1e-12)
        closed = fd.velocity_flux(rho) - fd.velocity_flux(rho0)
        assert closed == pytest.approx(oracle, abs=1e-8)


def test_critical_density_greenshields():
    fd = diagrams.greenshields(1.0, 1.0)
    assert fd.critical_density() == pytest.approx(0.5, abs=1e-10)


def test_critical_density_newell_vs_bisection_oracle():
    fd = diagrams.normalized_newell()

    lo, hi = 1e-6, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if 1.0 - (1.0 + 1.0 / mid) * math.exp(1.0 - 1.0 / mid) > 0.0:
            lo = mid
        else:
            hi = mid
    alpha_oracle = 0.5 * (lo + hi)

    alpha = fd.critical_density()
    assert alpha == pytest.approx(alpha_oracle, rel=1e-10)
    assert abs(fd.wave_speed(alpha)) < 1e-9


@pytest.mark.parametrize("name", sorted(ALL_DIAGRAMS))
def test_critical_density_maximizes_flow(name):
    fd = ALL_DIAGRAMS[name]
    alpha = fd.critical_density()
    assert abs(fd.wave_speed(alpha)) < 1e-9 * max(1.0, fd.v_free)
    rho = sample_interior(fd, 500)
    assert np.all(fd.capacity() >= fd.flow(rho) - 1e-12)


def test_pw_stability_bounds_reported_values():
    fd = diagrams.kerner_sigmoid()
    c0 = 2.48445
    rc1, rc2 = diagrams.pw_stability_bounds(fd, c0)
    assert rc1 == pytest.approx(0.173, abs=2e-3)
    assert rc2 == pytest.approx(0.396, abs=2e-3)
    # Inside the band the sub-characteristic leaves the characteristic cone.
    mid = 0.5 * (rc1 + rc2)
    ws = diagrams.wave_speeds(fd, mid, fd.speed(mid), model="pw", c0=c0)
    assert not (ws.lambda1 < ws.lambda_star < ws.lambda2)
    # Just outside, the condition holds.
    for rho in (rc1 * 0.9, rc2 * 1.05):
        ws = diagrams.wave_speeds(fd, rho, fd.speed(rho), model="pw", c0=c0)
        assert ws.lambda1 < ws.lambda_star < ws.lambda2


def test_pw_stability_bounds_large_c0_has_no_roots():
    fd = diagrams.kerner_sigmoid()
    with pytest.raises(RootBracketError):
        diagrams.pw_stability_bounds(fd, 1e9)


def test_vectorized_evaluation_matches_scalar():
    fd = diagrams.newell(60.0, -10.0, 250.0)
    rho = np.array([10.0, 60.0, 120.0, 240.0])
    vec = fd.speed(rho)
    assert vec.shape == rho.shape
    for r, v in zip(rho, vec):
        assert fd.speed(float(r)) == pytest.approx(float(v), rel=1e-15)
