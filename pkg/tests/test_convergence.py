"""Error vectors, norms, rates, and the refinement stability probe."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from macroflow import convergence, diagrams, godunov
from macroflow.errors import DomainError
from macroflow.godunov import Grid1D, PeriodicBC, SimulationConfig, SimulationState


def test_coarsen_diff_exact_cases():
    assert np.allclose(convergence.coarsen_diff([1, 3, 2, 4], [2, 3]), [0.0, 0.0])
    assert np.allclose(convergence.coarsen_diff([1, 2, 3, 4], [0, 0]), [1.5, 3.5])
    same = np.repeat([5.0, 7.0], 2)
    assert np.allclose(convergence.coarsen_diff(same, [5.0, 7.0]), 0.0)
    with pytest.raises(DomainError):
        convergence.coarsen_diff([1, 2, 3], [1])


def test_norms():
    assert convergence.norm([0.0, 0.0], "L1") == 0.0
    assert convergence.norm([3.0, -4.0], "Linf") == 4.0
    assert convergence.norm([3.0, -4.0], "L1") == 3.5
    assert convergence.norm([3.0, -4.0], "L2") == pytest.approx(np.sqrt(12.5))
    with pytest.raises(DomainError):
        convergence.norm([], "L1")
    with pytest.raises(DomainError):
        convergence.norm([1.0], "L7")


def test_rates():
    assert convergence.convergence_rate(2.0, 1.0) == 1.0
    assert convergence.convergence_rate(4.0, 1.0) == 2.0
    assert convergence.convergence_rate(3.43e-3, 1.75e-3) == pytest.approx(
        0.969, abs=2e-3)
    with pytest.raises(DomainError):
        convergence.convergence_rate(0.0, 1.0)


def test_rate_scale_invariance():
    assert convergence.convergence_rate(6.0, 3.0) == pytest.approx(
        convergence.convergence_rate(2.0, 1.0), rel=1e-14)


@settings(max_examples=100, deadline=None)
@given(hnp.arrays(np.float64, 16, elements=st.floats(-10, 10)),
       hnp.arrays(np.float64, 16, elements=st.floats(-10, 10)))
def test_coarsen_linearity_and_triangle_inequality(a, b):
    coarse = np.zeros(8)
    lhs = convergence.coarsen_diff(a + b, coarse)
    rhs = convergence.coarsen_diff(a, coarse) + convergence.coarsen_diff(b, coarse)
    assert np.allclose(lhs, rhs, atol=1e-12)
    for kind in convergence.NORM_KINDS:
        assert convergence.norm(a + b, kind) <= \
            convergence.norm(a, kind) + convergence.norm(b, kind) + 1e-12


def _lwr_sine_config(n):
    fd = diagrams.normalized_newell()
    grid = Grid1D(0.0, 800.0, n, PeriodicBC())
    x = grid.cell_centers()
    rho = 0.5 + 0.1 * np.sin(2.0 * np.pi * x / 800.0)
    return SimulationConfig(model=godunov.LWRModel(fd), grid=grid,
                            initial=SimulationState(0.0, rho), t_end=100.0)


def test_first_order_self_convergence_rate_near_one():
    report = convergence.convergence_study(_lwr_sine_config,
                                           [64, 128, 256, 512, 1024])
    rates = report.rates("rho", "L1")
    assert len(rates) == 3
    for r in rates:
        assert 0.8 <= r <= 1.1


def test_report_table_shape():
    report = convergence.convergence_study(_lwr_sine_config, [64, 128])
    assert {r.norm_kind for r in report.rows} == set(convergence.NORM_KINDS)
    assert all(r.rate is None for r in report.rows)
    with pytest.raises(DomainError):
        convergence.convergence_study(_lwr_sine_config, [64, 100])


def test_stability_probe_on_scalar_model_is_stable():
    report = convergence.stability_probe(_lwr_sine_config, (64, 128, 256))
    assert report.verdict == "stable"
    assert len(report.errors) == 2
    assert report.errors[1] < report.errors[0]


@pytest.mark.parametrize("rho_h", [0.16, 0.17])
def test_variable_sound_speed_model_is_stable_either_side(rho_h):
    # The sub-characteristic always lies inside the characteristic cone for
    # this model, so the probe must come back stable at densities where the
    # constant-sound-speed model flips.
    from macroflow.second_order import ZhangModel

    fd = diagrams.normalized_newell()

    def make(n):
        grid = Grid1D(0.0, 800.0, n, PeriodicBC())
        x = grid.cell_centers()
        rho = rho_h + 0.02 * np.sin(2.0 * np.pi * x / 800.0)
        v = fd.speed(rho_h) - 0.02 * np.cos(2.0 * np.pi * x / 800.0)
        return SimulationConfig(model=ZhangModel(fd, tau=1.0), grid=grid,
                                initial=SimulationState(0.0, rho, v=v),
                                t_end=50.0)

    report = convergence.stability_probe(make, (64, 128, 256))
    assert report.verdict == "stable"
