"""Finite-volume grids, boundary policies, and the time steppers.

One first-order conservative stepper covers all four models (the two
relaxation models integrate their source implicitly); a two-stage
predictor/corrector with van Leer limiting in characteristic variables
provides the second-order path; and the constant-sound-speed model gets
three further source treatments: edge-averaged explicit source, symmetric
fractional splitting, and the quasi-steady in-cell standing-wave split.

State arrays are plain numpy vectors; every stepper is a pure function
from (state, grid, model, dt) to a new state, so runs are deterministic
and trivially parallel across scenarios.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lwr, resonant, second_order
from .errors import (CFLViolationError, DomainError, SingularTransformError,
                     StepError, VacuumError)

FIRST_ORDER = "first_order"
SECOND_ORDER = "second_order"
PEMBER = "pember"
FRACTIONAL = "fractional"
LEVEQUE = "leveque"
SCHEMES = (FIRST_ORDER, SECOND_ORDER, PEMBER, FRACTIONAL, LEVEQUE)


class NeumannBC:
    kind = "neumann"

    def __repr__(self):
        return "NeumannBC()"


class PeriodicBC:
    kind = "periodic"

    def __repr__(self):
        return "PeriodicBC()"


@dataclass(frozen=True)
class DirichletBC:
    """Pins ghost-cell states; edge fluxes are still solved, never imposed."""

    left: dict
    right: dict
    kind = "dirichlet"


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int
    bc: object = field(default_factory=NeumannBC)

    def __post_init__(self):
        if self.n_cells < 2:
            raise DomainError("need at least 2 cells")
        if not self.x_max > self.x_min:
            raise DomainError("empty spatial interval")

    @property
    def dx(self):
        return (self.x_max - self.x_min) / self.n_cells

    def cell_centers(self):
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass
class SimulationState:
    """Cell-averaged fields at one time.

    rho is always present; v for the variable-sound-speed model, m for the
    constant-sound-speed model, lanes for the lane-inhomogeneous model.
    """

    t: float
    rho: np.ndarray
    v: np.ndarray | None = None
    m: np.ndarray | None = None
    lanes: np.ndarray | None = None

    def copy(self):
        return SimulationState(
            self.t, self.rho.copy(),
            None if self.v is None else self.v.copy(),
            None if self.m is None else self.m.copy(),
            None if self.lanes is None else self.lanes.copy())

    def speed_field(self, model):
        """Velocity per cell regardless of the stored pair."""
        if self.v is not None:
            return self.v
        if self.m is not None:
            return self.m / self.rho
        if self.lanes is not None:
            return model.fd.speed(self.rho / self.lanes, validate=False)
        return model.fd.speed(self.rho, validate=False)


class LWRModel:
    """Scalar kinematic-wave model."""

    kind = "lwr"
    fields = ("rho",)

    def __init__(self, fd):
        self.fd = fd

    def max_wave_speed(self, fields):
        return float(np.max(np.abs(self.fd.wave_speed(fields["rho"], validate=False))))

    def edge_flux(self, left, right):
        return {"rho": lwr.demand_supply_flux(left["rho"], right["rho"], self.fd)}


class ResonantLWRModel:
    """Kinematic-wave model with a static lane-count profile."""

    kind = "resonant"
    fields = ("rho", "lanes")

    def __init__(self, fd):
        self.fd = fd

    def max_wave_speed(self, fields):
        per_lane = fields["rho"] / fields["lanes"]
        return float(np.max(np.abs(self.fd.wave_speed(per_lane, validate=False))))

    def edge_flux(self, left, right):
        f = np.minimum(
            resonant.demand_array(left["lanes"], left["rho"], self.fd),
            resonant.supply_array(right["lanes"], right["rho"], self.fd))
        return {"rho": f}


def _as_step_model(model):
    if isinstance(model, (LWRModel, ResonantLWRModel,
                          second_order.ZhangModel, second_order.PWModel)):
        return model
    raise DomainError(f"unknown model object {model!r}")


def _state_fields(state, model):
    kind = model.kind
    if kind == "lwr":
        return {"rho": state.rho}
    if kind == "resonant":
        if state.lanes is None:
            raise DomainError("lane-inhomogeneous model needs a lanes field")
        return {"rho": state.rho, "lanes": state.lanes}
    if kind == "zhang":
        if state.v is None:
            raise DomainError("variable-sound-speed model needs a v field")
        return {"rho": state.rho, "v": state.v}
    if state.m is None:
        raise DomainError("constant-sound-speed model needs an m field")
    return {"rho": state.rho, "m": state.m}


def _extend(fields, bc, n_ghost):
    """Append ghost cells on both sides per the boundary policy."""
    out = {}
    for name, arr in fields.items():
        if bc.kind == "periodic":
            ext = np.concatenate([arr[-n_ghost:], arr, arr[:n_ghost]])
        elif bc.kind == "neumann":
            ext = np.concatenate([np.repeat(arr[:1], n_ghost), arr,
                                  np.repeat(arr[-1:], n_ghost)])
        else:
            lval = bc.left.get(name, arr[0])
            rval = bc.right.get(name, arr[-1])
            ext = np.concatenate([np.full(n_ghost, lval), arr,
                                  np.full(n_ghost, rval)])
        out[name] = ext
    return out


def cfl_dt(state, grid, model, cfl_target=0.9, dt_max=math.inf):
    """Largest dt keeping max|wave speed| * dt / dx at the target.

    Uses the model's fastest family (v + c for the relaxation pairs, the
    kinematic speed for the scalar models) over all cells plus ghosts.
    """
    model = _as_step_model(model)
    ext = _extend(_state_fields(state, model), grid.bc, 1)
    if model.kind in ("lwr", "resonant"):
        lam = model.max_wave_speed(ext)
    elif model.kind == "zhang":
        lam = float(np.max(np.abs(model.lambda2(ext["rho"], ext["v"]))))
    else:
        lam = float(np.max(np.abs(ext["m"] / ext["rho"] + model.c0)))
    if lam <= 0.0:
        return dt_max
    return min(cfl_target * grid.dx / lam, dt_max)


def cfl_number(state, grid, model, dt):
    return dt / cfl_dt(state, grid, model, cfl_target=1.0)


def _check_cfl(state, grid, model, dt):
    if dt > cfl_dt(state, grid, model, cfl_target=1.0) * (1.0 + 1e-12):
        raise CFLViolationError(
            f"dt={dt} exceeds the unit-CFL step {cfl_dt(state, grid, model, cfl_target=1.0)}")


def _check_positive_density(rho):
    if not np.all(rho > 0.0):
        i = int(np.argmin(rho))
        raise VacuumError(f"nonpositive density after update", cell=i)


def van_leer_slope(w_prev, w, w_next):
    """Limited slope: the three-way minimum with extremum cutoff."""
    w_prev = np.asarray(w_prev, dtype=float)
    w = np.asarray(w, dtype=float)
    w_next = np.asarray(w_next, dtype=float)
    d_up = w - w_prev
    d_dn = w_next - w
    spread = w_next - w_prev
    monotone = d_up * d_dn > 0.0
    slope = np.sign(spread) * np.minimum(
        np.minimum(2.0 * np.abs(d_dn), 2.0 * np.abs(d_up)), 0.5 * np.abs(spread))
    out = np.where(monotone, slope, 0.0)
    return out if out.ndim else float(out)


# -- first order ------------------------------------------------------------


def step_first_order(state, grid, model, dt, source_time="implicit"):
    model = _as_step_model(model)
    _check_cfl(state, grid, model, dt)
    if model.kind in ("lwr", "resonant"):
        return _step_scalar(state, grid, model, dt)
    return _step_relaxation(state, grid, model, dt, source_time)


def _step_scalar(state, grid, model, dt):
    ext = _extend(_state_fields(state, model), grid.bc, 1)
    left = {k: v[:-1] for k, v in ext.items()}
    right = {k: v[1:] for k, v in ext.items()}
    flux = model.edge_flux(left, right)["rho"]
    rho = state.rho - (dt / grid.dx) * (flux[1:] - flux[:-1])
    if np.any(rho < -1e-12):
        raise VacuumError("negative density from scalar update",
                          cell=int(np.argmin(rho)))
    return SimulationState(state.t + dt, np.maximum(rho, 0.0),
                           lanes=None if state.lanes is None else state.lanes)


def _relax_edge_averages(model, ext):
    if model.kind == "zhang":
        rho_l, v_l = ext["rho"][:-1], ext["v"][:-1]
        rho_r, v_r = ext["rho"][1:], ext["v"][1:]
    else:
        rho_l, v_l = ext["rho"][:-1], ext["m"][:-1] / ext["rho"][:-1]
        rho_r, v_r = ext["rho"][1:], ext["m"][1:] / ext["rho"][1:]
    return second_order.edge_average_arrays(model, rho_l, v_l, rho_r, v_r)


def _apply_relaxation_update(state, grid, model, dt, rho_star, v_star,
                             source_time):
    """Conservative corrector with the relaxation source kept implicit."""
    h = grid.dx
    fd = model.fd
    if model.kind == "zhang":
        flux_rho = rho_star * v_star
        flux_v = 0.5 * v_star**2 + fd.velocity_flux(rho_star, validate=False)
        rho_new = state.rho - (dt / h) * (flux_rho[1:] - flux_rho[:-1])
        _check_positive_density(rho_new)
        adv = state.v - (dt / h) * (flux_v[1:] - flux_v[:-1])
        if source_time == "implicit":
            v_new = (adv + (dt / model.tau) * fd.speed(rho_new, validate=False)) \
                / (1.0 + dt / model.tau)
        else:
            r = dt / (2.0 * model.tau)
            v_eq = fd.speed(0.5 * (state.rho + rho_new), validate=False)
            v_new = (state.v * (1.0 - r) - (dt / h) * (flux_v[1:] - flux_v[:-1])
                     + 2.0 * r * v_eq) / (1.0 + r)
        return SimulationState(state.t + dt, rho_new, v=v_new)

    m_star = rho_star * v_star
    flux_rho = m_star
    flux_m = m_star**2 / rho_star + model.c0**2 * rho_star
    rho_new = state.rho - (dt / h) * (flux_rho[1:] - flux_rho[:-1])
    _check_positive_density(rho_new)
    adv = state.m - (dt / h) * (flux_m[1:] - flux_m[:-1])
    if source_time == "implicit":
        m_new = (adv + (dt / model.tau) * fd.flow(rho_new, validate=False)) \
            / (1.0 + dt / model.tau)
    else:
        r = dt / (2.0 * model.tau)
        q_eq = fd.flow(0.5 * (state.rho + rho_new), validate=False)
        m_new = (state.m * (1.0 - r) - (dt / h) * (flux_m[1:] - flux_m[:-1])
                 + 2.0 * r * q_eq) / (1.0 + r)
    return SimulationState(state.t + dt, rho_new, m=m_new)


def _step_relaxation(state, grid, model, dt, source_time):
    ext = _extend(_state_fields(state, model), grid.bc, 1)
    rho_star, v_star = _relax_edge_averages(model, ext)
    return _apply_relaxation_update(state, grid, model, dt, rho_star, v_star,
                                    source_time)


# -- second order -----------------------------------------------------------


def _characteristic_transform(model, rho, v_or_m):
    """Rows of T^{-1} and the frozen eigen-speeds per cell."""
    if model.kind == "zhang":
        slope = model.fd.speed_slope(rho, validate=False)
        if np.any(np.abs(slope) < 1e-14 * max(1.0, model.fd.v_free)):
            raise SingularTransformError(
                "speed-slope vanished: characteristic transform is singular")
        lam1 = v_or_m + rho * slope
        lam2 = v_or_m - rho * slope
        return slope, lam1, lam2
    v = v_or_m / rho
    return None, v - model.c0, v + model.c0


def step_second_order(state, grid, model, dt, source_time="implicit"):
    """Predictor/corrector: limited characteristic slopes, half-step edge
    states, then the conservative first-order corrector on those states."""
    model = _as_step_model(model)
    if model.kind not in ("zhang", "pw"):
        raise DomainError("the second-order stepper covers the relaxation models")
    _check_cfl(state, grid, model, dt)
    h = grid.dx
    ext = _extend(_state_fields(state, model), grid.bc, 2)
    rho = ext["rho"]
    second_field = ext["v"] if model.kind == "zhang" else ext["m"]

    # Frozen transform per cell (excluding the outermost ghosts, which only
    # feed their neighbors' stencils).
    c = slice(1, -1)
    rho_c = rho[c]
    sec_c = second_field[c]
    slope_or_none, lam1, lam2 = _characteristic_transform(model, rho_c, sec_c)

    if model.kind == "zhang":
        s = slope_or_none
        # W = T^{-1} (rho, v): w1 = (rho + v/s)/2, w2 = (rho - v/s)/2.
        def to_char(r_arr, u_arr):
            return 0.5 * (r_arr + u_arr / s), 0.5 * (r_arr - u_arr / s)

        def from_char(w1, w2):
            return w1 + w2, (w1 - w2) * s
    else:
        c0 = model.c0
        # W = T^{-1} (rho, m) with T = [[1, 1], [lam1, lam2]].
        def to_char(r_arr, u_arr):
            return (lam2 * r_arr - u_arr) / (2.0 * c0), \
                   (u_arr - lam1 * r_arr) / (2.0 * c0)

        def from_char(w1, w2):
            return w1 + w2, lam1 * w1 + lam2 * w2

    w1_prev, w2_prev = to_char(rho[:-2], second_field[:-2])
    w1_here, w2_here = to_char(rho_c, sec_c)
    w1_next, w2_next = to_char(rho[2:], second_field[2:])

    d1 = van_leer_slope(w1_prev, w1_here, w1_next)
    d2 = van_leer_slope(w2_prev, w2_here, w2_next)

    nu1 = lam1 * dt / h
    nu2 = lam2 * dt / h
    w1_L = w1_here + 0.5 * (1.0 - nu1) * d1
    w2_L = w2_here + 0.5 * (1.0 - nu2) * d2
    w1_R = w1_here - 0.5 * (1.0 + nu1) * d1
    w2_R = w2_here - 0.5 * (1.0 + nu2) * d2

    rho_L, sec_L = from_char(w1_L, w2_L)
    rho_R, sec_R = from_char(w1_R, w2_R)

    lo = 1e-12 * float(np.max(rho))
    rho_L = np.maximum(rho_L, lo)
    rho_R = np.maximum(rho_R, lo)

    # Edge j+1/2 pairs cell j's right-face state with cell j+1's left-face
    # state; the extended slice spans cells [-1 .. n], giving n+1 edges.
    if model.kind == "zhang":
        v_L, v_R = sec_L, sec_R
    else:
        v_L, v_R = sec_L / rho_L, sec_R / rho_R
    rho_star, v_star = second_order.edge_average_arrays(
        model, rho_L[:-1], v_L[:-1], rho_R[1:], v_R[1:])
    return _apply_relaxation_update(state, grid, model, dt, rho_star, v_star,
                                    source_time)


# -- source-term variants for the constant-sound-speed model ----------------


def _require_pw(model):
    model = _as_step_model(model)
    if model.kind != "pw":
        raise DomainError("this source treatment targets the "
                          "constant-sound-speed model")
    return model


def step_pember(state, grid, model, dt):
    """First-order fluxes with the source averaged over the two edge states
    and applied explicitly."""
    model = _require_pw(model)
    _check_cfl(state, grid, model, dt)
    h = grid.dx
    ext = _extend(_state_fields(state, model), grid.bc, 1)
    rho_star, v_star = _relax_edge_averages(model, ext)
    m_star = rho_star * v_star
    flux_m = m_star**2 / rho_star + model.c0**2 * rho_star
    rho_new = state.rho - (dt / h) * (m_star[1:] - m_star[:-1])
    _check_positive_density(rho_new)
    src_edge = (model.fd.flow(rho_star, validate=False) - m_star) / model.tau
    m_new = state.m - (dt / h) * (flux_m[1:] - flux_m[:-1]) \
        + dt * 0.5 * (src_edge[:-1] + src_edge[1:])
    return SimulationState(state.t + dt, rho_new, m=m_new)


def _implicit_relax_momentum(rho, m, tau, fd, dt):
    return (m + (dt / tau) * fd.flow(rho, validate=False)) / (1.0 + dt / tau)


def step_fractional(state, grid, model, dt):
    """Symmetric splitting: half relaxation, homogeneous step, half
    relaxation; each relaxation sub-step is backward Euler."""
    model = _require_pw(model)
    _check_cfl(state, grid, model, dt)
    m_half = _implicit_relax_momentum(state.rho, state.m, model.tau, model.fd,
                                      0.5 * dt)
    inter = SimulationState(state.t, state.rho, m=m_half)
    ext = _extend(_state_fields(inter, model), grid.bc, 1)
    rho_star, v_star = _relax_edge_averages(model, ext)
    m_star = rho_star * v_star
    flux_m = m_star**2 / rho_star + model.c0**2 * rho_star
    h = grid.dx
    rho_new = inter.rho - (dt / h) * (m_star[1:] - m_star[:-1])
    _check_positive_density(rho_new)
    m_new = inter.m - (dt / h) * (flux_m[1:] - flux_m[:-1])
    m_new = _implicit_relax_momentum(rho_new, m_new, model.tau, model.fd,
                                     0.5 * dt)
    return SimulationState(state.t + dt, rho_new, m=m_new)


def leveque_standing_delta(rho, m, source_strength, c0):
    """Half-jump of the in-cell standing-wave reconstruction.

    Solves the cubic from f(U+) - f(U-) = K with U+- = (rho +- delta, m)
    and K = source_strength (the cell's source integral over dx):

        2 c0^2 d^3 - K d^2 - (2 c0^2 rho^2 - 2 m^2) d + K rho^2 = 0.

    Among the real roots with |delta| < rho (there is always at least one
    when m != 0), returns the one continuously connected to delta = 0 at
    K = 0, i.e. the smallest in magnitude, polished to ~1e-12 residual.
    """
    rho = np.asarray(rho, dtype=float)
    m = np.asarray(m, dtype=float)
    K = np.asarray(source_strength, dtype=float)
    a3 = 2.0 * c0**2
    a2 = -K
    a1 = -(2.0 * c0**2 * rho**2 - 2.0 * m**2)
    a0 = K * rho**2

    roots = _cubic_roots(a3, a2, a1, a0)
    admissible = np.abs(roots) < rho[..., None] * (1.0 - 1e-12)
    magnitude = np.where(admissible, np.abs(roots), np.inf)
    pick = np.argmin(magnitude, axis=-1)
    delta = np.take_along_axis(roots, pick[..., None], axis=-1)[..., 0]
    bad = ~np.take_along_axis(admissible, pick[..., None], axis=-1)[..., 0]
    bad &= np.abs(K) > 0.0
    if np.any(bad):
        i = int(np.argmax(bad))
        raise VacuumError("no admissible standing-wave split", cell=i)
    delta = np.where(np.abs(K) > 0.0, delta, 0.0)

    # Newton polish.
    for _ in range(4):
        p = ((a3 * delta + a2) * delta + a1) * delta + a0
        dp = (3.0 * a3 * delta + 2.0 * a2) * delta + a1
        step = np.where(np.abs(dp) > 1e-300, p / dp, 0.0)
        delta = delta - step
    return delta if delta.ndim else float(delta)


def _cubic_roots(a3, a2, a1, a0):
    """Real roots of a3 x^3 + a2 x^2 + a1 x + a0, vectorized.

    Returns shape (..., 3); complex roots are reported as nan.
    """
    a2 = np.asarray(a2, dtype=float) / a3
    a1 = np.asarray(a1, dtype=float) / a3
    a0 = np.asarray(a0, dtype=float) / a3
    shift = a2 / 3.0
    p = a1 - a2**2 / 3.0
    q = 2.0 * a2**3 / 27.0 - a2 * a1 / 3.0 + a0

    disc = -4.0 * p**3 - 27.0 * q**2
    out = np.full(np.broadcast(p, q).shape + (3,), np.nan)

    three = disc >= 0.0
    if np.any(three):
        pt = np.where(three, np.minimum(p, -1e-300), -1.0)
        r = np.sqrt(-pt / 3.0)
        arg = np.clip(3.0 * q / (2.0 * pt * r), -1.0, 1.0)
        phi = np.arccos(arg)
        for k in range(3):
            root = 2.0 * r * np.cos((phi - 2.0 * math.pi * k) / 3.0) - shift
            out[..., k] = np.where(three, root, out[..., k])

    one = ~three
    if np.any(one):
        half_q = q / 2.0
        s = np.sqrt(np.maximum(half_q**2 + (p / 3.0) ** 3, 0.0))
        u = np.cbrt(-half_q + s)
        v = np.cbrt(-half_q - s)
        root = u + v - shift
        out[..., 0] = np.where(one, root, out[..., 0])
    return out


def step_leveque(state, grid, model, dt):
    """Quasi-steady splitting: rebuild each cell as a standing-wave pair,
    solve edge problems between neighboring half-states, and evolve by the
    fluctuations entering each cell; no separate source evaluation.

    The fluctuation update equals flux differencing of the edge states plus
    the in-cell jump's own flux gap (0, K): that jump encodes the balanced
    source and is not propagated, so exactly balanced data is a fixed point.
    """
    model = _require_pw(model)
    _check_cfl(state, grid, model, dt)
    h = grid.dx
    ext = _extend(_state_fields(state, model), grid.bc, 1)
    rho, m = ext["rho"], ext["m"]
    K = (model.fd.flow(rho, validate=False) - m) / model.tau * h
    delta = leveque_standing_delta(rho, m, K, model.c0)
    rho_plus = rho + delta     # right face of each cell
    rho_minus = rho - delta    # left face
    rho_star, v_star = second_order.edge_average_arrays(
        model, rho_plus[:-1], m[:-1] / rho_plus[:-1],
        rho_minus[1:], m[1:] / rho_minus[1:])
    m_star = rho_star * v_star
    flux_m = m_star**2 / rho_star + model.c0**2 * rho_star
    rho_new = state.rho - (dt / h) * (m_star[1:] - m_star[:-1])
    _check_positive_density(rho_new)
    m_new = state.m - (dt / h) * (flux_m[1:] - flux_m[:-1] - K[1:-1])
    return SimulationState(state.t + dt, rho_new, m=m_new)


_STEPPERS = {
    FIRST_ORDER: step_first_order,
    SECOND_ORDER: step_second_order,
    PEMBER: step_pember,
    FRACTIONAL: step_fractional,
    LEVEQUE: step_leveque,
}


@dataclass
class SimulationConfig:
    """Everything one run needs; deterministic given its contents."""

    model: object
    grid: Grid1D
    initial: SimulationState
    scheme: str = FIRST_ORDER
    t_end: float = 0.0
    dt: float | None = None          # fixed step; None = CFL-driven
    cfl_target: float = 0.9
    dt_max: float = math.inf
    output_times: tuple = ()         # extra snapshot times besides 0, t_end
    source_time: str = "implicit"


def run_simulation(config):
    """March the scheme to t_end, returning [(t, state), ...] snapshots.

    Snapshots land exactly on the requested times (dt is clipped to hit
    them). Step failures re-raise with the step index and time attached.
    """
    if config.scheme not in _STEPPERS:
        raise DomainError(f"unknown scheme {config.scheme!r}")
    stepper = _STEPPERS[config.scheme]
    model = _as_step_model(config.model)
    state = config.initial.copy()
    state.t = 0.0
    events = sorted({float(t) for t in (*config.output_times, config.t_end)
                     if 0.0 < t <= config.t_end})
    snapshots = [(0.0, state.copy())]
    tau = getattr(model, "tau", None)

    step_index = 0
    for target in events:
        while state.t < target - 1e-12 * max(1.0, target):
            if config.dt is not None:
                dt = config.dt
            else:
                dt = cfl_dt(state, config.grid, model,
                            cfl_target=config.cfl_target, dt_max=config.dt_max)
                if tau is not None and tau < dt:
                    # Stiff relaxation: keep the step well under tau.
                    dt = min(dt, tau / 2.0)
            dt = min(dt, target - state.t)
            try:
                if config.scheme in (FIRST_ORDER, SECOND_ORDER):
                    state = stepper(state, config.grid, model, dt,
                                    source_time=config.source_time)
                else:
                    state = stepper(state, config.grid, model, dt)
            except (VacuumError, CFLViolationError, SingularTransformError) as exc:
                raise StepError(f"step {step_index} at t={state.t:.6g} failed: {exc}",
                                step=step_index, time=state.t) from exc
            step_index += 1
        snapshots.append((state.t, state.copy()))
    return snapshots
