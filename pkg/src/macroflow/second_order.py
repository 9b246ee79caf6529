"""Riemann solvers for the two second-order (speed-dynamics) models.

Both models share one homogeneous wave structure: a 1-family wave that can
run against traffic and a 2-family wave that always runs downstream. They
differ in the sound speed and in their wave-curve algebra:

* variable sound speed ("zhang"): c(rho) = -rho v'(rho); shock loci use the
  velocity-flux potential phi with denominator (rho_a + rho_b);
* constant sound speed ("pw"): c0; phi(rho) = c0^2 rho, shock loci use
  denominator (rho_a * rho_b).

Rarefaction curves for both models follow the equilibrium speed law
(speed changes along a fan equal equilibrium-speed differences). For the
constant-sound-speed model a switch (curves="isothermal") substitutes the
textbook integral curves v +- c0 ln rho = const for comparison.

A jump (U_l, U_r) resolves into one of 8 patterns: a single shock or
rarefaction of either family, or a 1-wave plus 2-wave combination through
an intermediate state. The intermediate density is the intersection of the
forward 1-wave curve through U_l (decreasing in rho) with the backward
2-wave curve through U_r (increasing in rho), so one monotone root solve
covers all four two-wave patterns; which branch the root lands on names
the pattern. The boundary average at x/t = 0 follows the per-pattern
upwind tables, with a sonic interior solve when the 1-rarefaction
straddles the edge.

Everything is vectorized: the public per-pair API wraps the same array
kernel the time steppers call, so the two routes cannot drift apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._roots import bracketed_root
from .errors import DomainError, VacuumError

PATTERNS = ("H1", "H2", "R1", "R2", "R1R2", "R1H2", "H1H2", "H1R2", "constant")

# Relative jump below which a wave is treated as zero-strength.
DEGENERATE_TOL = 1e-9

_BISECT_ITERS = 90


@dataclass(frozen=True)
class State2:
    """Density and speed of one cell or wave state."""

    rho: float
    v: float

    @property
    def momentum(self):
        return self.rho * self.v


@dataclass(frozen=True)
class WavePattern2:
    """Classified two-wave solution with its edge averages."""

    pattern: str
    intermediate: State2 | None
    boundary_avg: State2


class ZhangModel:
    """Variable-sound-speed relaxation model on states (rho, v)."""

    kind = "zhang"

    def __init__(self, fd, tau):
        if tau <= 0.0:
            raise DomainError("relaxation time must be positive")
        self.fd = fd
        self.tau = tau
        self.rho_min = fd.rho_max * 1e-9
        self.rho_max = fd.rho_max

    def equilibrium_speed(self, rho):
        return self.fd.speed(rho, validate=False)

    def velocity_flux(self, rho):
        return self.fd.velocity_flux(rho, validate=False)

    def lambda1(self, rho, v):
        return v + rho * self.fd.speed_slope(rho, validate=False)

    def lambda2(self, rho, v):
        return v - rho * self.fd.speed_slope(rho, validate=False)

    def hugoniot_denominator(self, rho_a, rho_b):
        return rho_a + rho_b

    def rarefaction_speed_change(self, rho_from, rho_to):
        # Along both rarefaction curves the speed follows the
        # equilibrium law; family fixes the sign at the call site.
        v = self.fd.speed
        return v(rho_to, validate=False) - v(rho_from, validate=False)


class PWModel:
    """Constant-sound-speed relaxation model on states (rho, v)."""

    kind = "pw"

    def __init__(self, fd, tau, c0, curves="equilibrium"):
        if tau <= 0.0:
            raise DomainError("relaxation time must be positive")
        if c0 <= 0.0:
            raise DomainError("sound speed c0 must be positive")
        if curves not in ("equilibrium", "isothermal"):
            raise DomainError(f"unknown curve variant {curves!r}")
        self.fd = fd
        self.tau = tau
        self.c0 = c0
        self.curves = curves
        self.rho_min = fd.rho_max * 1e-9
        self.rho_max = fd.rho_max

    def equilibrium_speed(self, rho):
        return self.fd.speed(rho, validate=False)

    def equilibrium_flow(self, rho):
        return self.fd.flow(rho, validate=False)

    def velocity_flux(self, rho):
        return self.c0**2 * np.asarray(rho, dtype=float)

    def lambda1(self, rho, v):
        return np.asarray(v) - self.c0

    def lambda2(self, rho, v):
        return np.asarray(v) + self.c0

    def hugoniot_denominator(self, rho_a, rho_b):
        return rho_a * rho_b

    def rarefaction_speed_change(self, rho_from, rho_to):
        if self.curves == "equilibrium":
            v = self.fd.speed
            return v(rho_to, validate=False) - v(rho_from, validate=False)
        return -self.c0 * (np.log(rho_to) - np.log(rho_from))


def velocity_flux(model, rho):
    """phi(rho) for the model: the family closed form, or c0^2 rho."""
    return model.velocity_flux(rho)


def hugoniot_velocity_jump(model, rho_from, rho_to):
    """Speed change v_to - v_from across the shock locus (always <= 0).

    Radicand 2 (rho_from - rho_to)(phi_from - phi_to) / denom; a negative
    radicand means the query left the admissible branch and is reported.
    """
    phi_a = model.velocity_flux(rho_from)
    phi_b = model.velocity_flux(rho_to)
    rad = 2.0 * (rho_from - rho_to) * (phi_a - phi_b) \
        / model.hugoniot_denominator(rho_from, rho_to)
    rad_arr = np.asarray(rad, dtype=float)
    if np.any(rad_arr < -1e-14 * max(1.0, float(np.max(np.abs(rad_arr))))):
        raise DomainError("negative radicand: invalid shock-branch query")
    out = -np.sqrt(np.maximum(rad_arr, 0.0))
    return out if np.ndim(rad) else float(out)


def rarefaction_velocity_jump(model, rho_from, rho_to, family):
    """Speed change v_to - v_from along a rarefaction curve of the family."""
    if family == 1:
        return model.rarefaction_speed_change(rho_from, rho_to)
    if family == 2:
        return -model.rarefaction_speed_change(rho_from, rho_to)
    raise DomainError(f"wave family must be 1 or 2, got {family!r}")


# -- the monotone wave-curve intersection --------------------------------

def _forward_curve_v(model, rho, rho_l, v_l):
    """Speed on the 1-wave curve through (rho_l, v_l) at density rho.

    Rarefaction branch below rho_l, shock branch above; strictly
    decreasing in rho.
    """
    rare = v_l + model.rarefaction_speed_change(rho_l, rho)
    phi_l = model.velocity_flux(rho_l)
    phi = model.velocity_flux(rho)
    rad = 2.0 * (rho_l - rho) * (phi_l - phi) / model.hugoniot_denominator(rho_l, rho)
    shock = v_l - np.sqrt(np.maximum(rad, 0.0))
    return np.where(rho <= rho_l, rare, shock)


def _backward_curve_v(model, rho, rho_r, v_r):
    """Speed of states joined to (rho_r, v_r) by a 2-wave, at density rho.

    Rarefaction branch below rho_r (v_r - v = change along the 2-curve),
    shock branch above; strictly increasing in rho.
    """
    rare = v_r - model.rarefaction_speed_change(rho_r, rho)
    phi_r = model.velocity_flux(rho_r)
    phi = model.velocity_flux(rho)
    rad = 2.0 * (rho - rho_r) * (phi - phi_r) / model.hugoniot_denominator(rho, rho_r)
    shock = v_r + np.sqrt(np.maximum(rad, 0.0))
    return np.where(rho <= rho_r, rare, shock)


def _intersection_gap(model, rho, rho_l, v_l, rho_r, v_r):
    return (_forward_curve_v(model, rho, rho_l, v_l)
            - _backward_curve_v(model, rho, rho_r, v_r))


def _solve_rho_mid(model, rho_l, v_l, rho_r, v_r):
    """Vectorized bisection for the curve intersection density.

    Returns (rho_m, v_m, vacuum_mask, overflow_mask): vacuum marks pairs
    whose curves only meet at nonphysical rho <= 0; overflow marks pairs
    pushed past the diagram's density domain.
    """
    lo = np.full_like(rho_l, model.rho_min)
    hi = np.full_like(rho_l, model.rho_max)
    g_lo = _intersection_gap(model, lo, rho_l, v_l, rho_r, v_r)
    g_hi = _intersection_gap(model, hi, rho_l, v_l, rho_r, v_r)
    vacuum = g_lo < 0.0
    overflow = g_hi > 0.0
    ok = ~(vacuum | overflow)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        g_mid = _intersection_gap(model, mid, rho_l, v_l, rho_r, v_r)
        take_hi = g_mid > 0.0
        lo = np.where(take_hi, mid, lo)
        hi = np.where(take_hi, hi, mid)
    rho_m = np.where(ok, 0.5 * (lo + hi), np.nan)
    v_m = np.where(ok, _forward_curve_v(model, np.where(ok, rho_m, 1.0),
                                        rho_l, v_l), np.nan)
    return rho_m, v_m, vacuum, overflow


def _edge_averages(model, rho_l, v_l, rho_r, v_r):
    """Per-edge boundary averages (rho*, v*) plus the solve internals.

    Arrays in, arrays out. Raises VacuumError (with the first offending
    index) when any pair has no admissible intermediate state.
    """
    rho_l = np.asarray(rho_l, dtype=float)
    v_l = np.asarray(v_l, dtype=float)
    rho_r = np.asarray(rho_r, dtype=float)
    v_r = np.asarray(v_r, dtype=float)

    scale_rho = np.maximum(rho_l, rho_r)
    scale_v = np.maximum(np.abs(v_l), np.abs(v_r)) + 1e-30
    same = (np.abs(rho_l - rho_r) <= 1e-14 * scale_rho) \
        & (np.abs(v_l - v_r) <= 1e-14 * scale_v)

    rho_m, v_m, vacuum, overflow = _solve_rho_mid(model, rho_l, v_l, rho_r, v_r)
    vacuum &= ~same
    overflow &= ~same
    if np.any(vacuum):
        i = int(np.argmax(vacuum))
        raise VacuumError(
            "no admissible intermediate state (vacuum)", cell=i,
            left=(float(rho_l.flat[i]), float(v_l.flat[i])),
            right=(float(rho_r.flat[i]), float(v_r.flat[i])))
    if np.any(overflow):
        i = int(np.argmax(overflow))
        raise VacuumError(
            "intermediate density leaves the diagram domain", cell=i,
            left=(float(rho_l.flat[i]), float(v_l.flat[i])),
            right=(float(rho_r.flat[i]), float(v_r.flat[i])))
    rho_m = np.where(same, rho_l, rho_m)
    v_m = np.where(same, v_l, v_m)

    tol1 = DEGENERATE_TOL * scale_rho
    one_is_shock = rho_m > rho_l + tol1
    one_degenerate = np.abs(rho_m - rho_l) <= tol1
    two_is_shock = rho_m > rho_r + tol1
    two_degenerate = np.abs(rho_m - rho_r) <= tol1

    # 1-wave side of the edge: shock speed sign or lambda1 signs decide.
    drho1 = rho_m - rho_l
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = np.where(np.abs(drho1) > 1e-300,
                      (rho_m * v_m - rho_l * v_l) / drho1, 0.0)
    lam1_l = model.lambda1(rho_l, v_l)
    s1 = np.where(one_degenerate, lam1_l, s1)

    lam1_m = model.lambda1(rho_m, v_m)

    # The 2-wave always moves downstream, so the edge sees only the left
    # state, the intermediate state, or the 1-fan interior.
    shock_branch = one_is_shock | (one_degenerate & two_is_shock)
    # Shock-led: upwind by s1; s1 == 0 averages the flanking states.
    left_of_shock = s1 > 0.0
    sonic_shock = np.abs(s1) <= 1e-12 * (np.abs(v_l) + np.abs(v_m) + 1e-30)

    # Rarefaction-led: upwind by lambda1 at the wave's endpoints; a fan
    # straddling the edge needs the sonic interior state.
    left_of_fan = lam1_l > 0.0
    right_of_fan = lam1_m < 0.0

    rho_star = np.where(left_of_shock | left_of_fan, rho_l, rho_m)
    v_star = np.where(left_of_shock | left_of_fan, v_l, v_m)

    use_shock = shock_branch
    use_fan = ~shock_branch

    rho_star = np.where(use_shock & ~left_of_shock, rho_m, rho_star)
    v_star = np.where(use_shock & ~left_of_shock, v_m, v_star)
    rho_star = np.where(use_shock & sonic_shock, 0.5 * (rho_l + rho_m), rho_star)
    v_star = np.where(use_shock & sonic_shock, 0.5 * (v_l + v_m), v_star)

    rho_star = np.where(use_fan & right_of_fan, rho_m, rho_star)
    v_star = np.where(use_fan & right_of_fan, v_m, v_star)

    transonic = use_fan & ~left_of_fan & ~right_of_fan & ~same & ~one_degenerate
    if np.any(transonic):
        idx = np.nonzero(transonic.ravel())[0]
        for i in idx:
            sonic = _sonic_point(model,
                                 float(rho_l.flat[i]), float(v_l.flat[i]),
                                 float(rho_m.flat[i]))
            rho_star.flat[i] = sonic.rho
            v_star.flat[i] = sonic.v
    rho_star = np.where(same, rho_l, rho_star)
    v_star = np.where(same, v_l, v_star)

    internals = {
        "rho_m": rho_m, "v_m": v_m,
        "one_is_shock": one_is_shock, "one_degenerate": one_degenerate,
        "two_is_shock": two_is_shock, "two_degenerate": two_degenerate,
        "same": same, "s1": s1,
    }
    return rho_star, v_star, internals


def _sonic_point(model, rho_l, v_l, rho_m):
    """Interior state of a 1-rarefaction fan sitting on the edge.

    The fan spans densities [rho_m, rho_l]; the sonic state is where
    lambda1 vanishes along the 1-curve through (rho_l, v_l).
    """
    fd = model.fd
    if model.kind == "zhang":
        # lambda1 = 0 with the curve relation reduces to
        # wave_speed(rho) = v_eq(rho_l) - v_l.
        dv = fd.speed(rho_l, validate=False) - v_l
        g = lambda r: fd.wave_speed(r, validate=False) - dv
        rho_s = bracketed_root(g, rho_m, rho_l,
                               residual_tol=1e-13 * max(1.0, fd.v_free))
        return State2(rho_s, fd.speed(rho_s, validate=False) - dv)
    if model.curves == "equilibrium":
        # v = c0 on the equilibrium-law curve:
        # v_eq(rho) = c0 - v_l + v_eq(rho_l).
        target = model.c0 - v_l + fd.speed(rho_l, validate=False)
        g = lambda r: fd.speed(r, validate=False) - target
        rho_s = bracketed_root(g, rho_m, rho_l,
                               residual_tol=1e-14 * max(1.0, fd.v_free))
        return State2(rho_s, model.c0)
    rho_s = rho_l * math.exp((v_l - model.c0) / model.c0)
    return State2(rho_s, model.c0)


def solve_intermediate(model, u_l: State2, u_r: State2):
    """Classify one jump; returns (pattern, intermediate State2).

    For single-wave data the intermediate collapses onto the matching end
    state and the pattern names the single wave.
    """
    rho_star, v_star, info = _edge_averages(
        model, np.array([u_l.rho]), np.array([u_l.v]),
        np.array([u_r.rho]), np.array([u_r.v]))
    if bool(info["same"][0]):
        return "constant", State2(u_l.rho, u_l.v)
    mid = State2(float(info["rho_m"][0]), float(info["v_m"][0]))
    one_deg = bool(info["one_degenerate"][0])
    two_deg = bool(info["two_degenerate"][0])
    one = "H1" if bool(info["one_is_shock"][0]) else "R1"
    two = "H2" if bool(info["two_is_shock"][0]) else "R2"
    if one_deg and two_deg:
        return "constant", mid
    if one_deg:
        return two, mid
    if two_deg:
        return one, mid
    return one + two, mid


def boundary_average(model, u_l: State2, u_r: State2) -> State2:
    """Time-averaged state at the cell edge from the homogeneous solution."""
    rho_star, v_star, _ = _edge_averages(
        model, np.array([u_l.rho]), np.array([u_l.v]),
        np.array([u_r.rho]), np.array([u_r.v]))
    return State2(float(rho_star[0]), float(v_star[0]))


def classify(model, u_l: State2, u_r: State2) -> WavePattern2:
    pattern, mid = solve_intermediate(model, u_l, u_r)
    avg = boundary_average(model, u_l, u_r)
    keep_mid = pattern in ("R1R2", "R1H2", "H1H2", "H1R2")
    return WavePattern2(pattern, mid if keep_mid else None, avg)


def pw_cauchy_boundary_average(model: PWModel, u_l: State2, u_r: State2,
                               dt: float) -> State2:
    """Edge average with the relaxation-bent 1-rarefaction fan.

    With a source term the fan characteristics are parabolas
    x(t) = (v - c0) t + (q_eq - m) / (2 tau rho) t^2, so the state seen at
    the edge drifts linearly in time; averaging over [0, dt] shifts the
    sonic values by half the drift. Applies only when a 1-rarefaction
    straddles the edge; every other pattern falls back to the homogeneous
    average.
    """
    if model.kind != "pw":
        raise DomainError("the Cauchy-adjusted average is defined for the "
                          "constant-sound-speed model")
    pattern, mid = solve_intermediate(model, u_l, u_r)
    if pattern not in ("R1", "R1R2", "R1H2"):
        return boundary_average(model, u_l, u_r)
    end = u_r if pattern == "R1" else mid
    lam_l = float(model.lambda1(u_l.rho, u_l.v))
    lam_m = float(model.lambda1(end.rho, end.v))
    if not (lam_l < 0.0 < lam_m):
        return boundary_average(model, u_l, u_r)
    sonic = _sonic_point(model, u_l.rho, u_l.v, end.rho)
    m_sonic = sonic.rho * sonic.v
    drift = (model.equilibrium_flow(sonic.rho) - m_sonic) / (2.0 * model.tau * sonic.rho)
    v_avg = model.c0 - drift * dt / 2.0
    slope = model.fd.speed_slope(sonic.rho, validate=False)
    rho_avg = sonic.rho - drift * dt / 2.0 / slope
    return State2(rho_avg, v_avg)


def edge_average_arrays(model, rho_l, v_l, rho_r, v_r):
    """Array form of boundary_average for the time steppers."""
    rho_star, v_star, _ = _edge_averages(model, rho_l, v_l, rho_r, v_r)
    return rho_star, v_star
