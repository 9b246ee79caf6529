"""Scenario files: TOML parsing, validation, and run-object construction.

A scenario fully determines one study: model + diagram + grid + initial
profile + scheme + times for the PDE commands, or zones + connectors +
arrival patterns + seed for the network command. Parsing fills defaults
(Neumann boundary, CFL target 0.9, first-order scheme) and re-emits the
resolved document verbatim into every CSV header, so a result file can be
replayed by feeding its own header back in.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import diagrams, godunov, network as network_mod
from .errors import ScenarioError
from .godunov import (DirichletBC, Grid1D, NeumannBC, PeriodicBC,
                      SimulationConfig, SimulationState)
from .second_order import PWModel, State2, ZhangModel

COMMANDS = ("riemann", "simulate", "converge", "stability", "network")

_DEFAULTS = {
    "scheme": {"name": godunov.FIRST_ORDER, "source_time": "implicit"},
    "time": {"t_end": 0.0, "cfl_target": 0.9, "output_times": []},
    "convergence": {"grids": [64, 128, 256, 512, 1024],
                    "norms": ["L1", "L2", "Linf"]},
    "stability": {"grids": [512, 1024, 2048]},
}


@dataclass(frozen=True)
class Scenario:
    """A fully resolved scenario document."""

    command: str
    data: dict          # resolved nested tables
    seed: int = 0

    def table(self, name):
        return self.data.get(name, {})


def parse_scenario(text):
    """Parse and validate scenario TOML; defaults are filled in."""
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"scenario parse error: {exc}") from exc
    return _resolve(raw)


def _resolve(raw):
    head = raw.get("scenario")
    if not isinstance(head, dict) or "kind" not in head:
        raise ScenarioError("missing [scenario] table with a 'kind' field")
    command = head["kind"]
    if command not in COMMANDS:
        raise ScenarioError(f"scenario.kind must be one of {COMMANDS}, "
                            f"got {command!r}")
    data = {k: v for k, v in raw.items()}
    for name, defaults in _DEFAULTS.items():
        table = dict(defaults)
        table.update(data.get(name, {}))
        data[name] = table
    seed = int(head.get("seed", 0))
    data["scenario"] = {"kind": command, "seed": seed}

    scn = Scenario(command, data, seed)
    # Eager validation: building the run objects checks every field.
    if command == "network":
        build_network(scn)
    elif command == "riemann":
        build_riemann_inputs(scn)
    else:
        build_sim_config(scn, n_cells=None)
    return scn


# -- TOML re-emission ---------------------------------------------------------


def _toml_scalar(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_scalar(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{k} = {_toml_scalar(v)}"
                          for k, v in sorted(value.items()))
        return "{" + inner + "}"
    raise ScenarioError(f"cannot serialize {value!r} into a scenario header")


def emit_toml(data):
    """Serialize the resolved scenario (sorted keys, canonical scalars)."""
    out = io.StringIO()

    def emit_table(path, table):
        scalars = {k: v for k, v in table.items()
                   if not isinstance(v, dict)
                   and not (isinstance(v, list) and v
                            and isinstance(v[0], dict))}
        subtables = {k: v for k, v in table.items() if isinstance(v, dict)}
        arrays = {k: v for k, v in table.items()
                  if isinstance(v, list) and v and isinstance(v[0], dict)}
        if path:
            out.write(f"[{path}]\n")
        for k in sorted(scalars):
            out.write(f"{k} = {_toml_scalar(scalars[k])}\n")
        for k in sorted(subtables):
            emit_table(f"{path}.{k}" if path else k, subtables[k])
        for k in sorted(arrays):
            for row in arrays[k]:
                out.write(f"[[{path}.{k}]]\n" if path else f"[[{k}]]\n")
                for kk in sorted(row):
                    out.write(f"{kk} = {_toml_scalar(row[kk])}\n")

    for name in sorted(data):
        emit_table(name, data[name])
    return out.getvalue()


def resolved_document(scn):
    return emit_toml(scn.data)


# -- diagram / model / grid builders ------------------------------------------


def build_diagram(scn):
    spec = scn.table("diagram")
    family = spec.get("family")
    try:
        if family == "newell":
            return diagrams.newell(spec["v_free"], spec["wave_back"],
                                   spec["rho_jam"])
        if family == "greenshields":
            return diagrams.greenshields(spec["v_free"], spec["rho_jam"])
        if family == "polynomial":
            return diagrams.polynomial(spec["v_free"], spec["rho_jam"],
                                       spec["exponent"])
        if family == "greenberg":
            return diagrams.greenberg(spec["v0"], spec["rho_jam"])
        if family == "underwood":
            return diagrams.underwood(spec["v_free"], spec["rho_jam"])
        if family == "kerner":
            return diagrams.kerner_sigmoid(
                scale=spec.get("scale", 5.0461),
                center=spec.get("center", 0.25),
                width=spec.get("width", 0.06),
                offset=spec.get("offset", 3.72e-6))
    except KeyError as exc:
        raise ScenarioError(f"diagram.{exc.args[0]}: required for family "
                            f"{family!r}") from exc
    raise ScenarioError(f"diagram.family: unknown family {family!r}")


def build_model(scn):
    spec = scn.table("model")
    kind = spec.get("kind")
    fd = build_diagram(scn)
    if kind == "lwr":
        return godunov.LWRModel(fd)
    if kind == "resonant":
        return godunov.ResonantLWRModel(fd)
    if kind == "zhang":
        return ZhangModel(fd, tau=_require(spec, "model", "tau"))
    if kind == "pw":
        return PWModel(fd, tau=_require(spec, "model", "tau"),
                       c0=_require(spec, "model", "c0"),
                       curves=spec.get("pw_curves", "equilibrium"))
    raise ScenarioError(f"model.kind: unknown model {kind!r}")


def _require(table, table_name, key):
    if key not in table:
        raise ScenarioError(f"{table_name}.{key}: required field is missing")
    return table[key]


def build_grid(scn, n_cells=None):
    spec = scn.table("grid")
    bc_kind = spec.get("bc", "neumann")
    if bc_kind == "neumann":
        bc = NeumannBC()
    elif bc_kind == "periodic":
        bc = PeriodicBC()
    elif bc_kind == "dirichlet":
        bc = DirichletBC(left=dict(spec.get("dirichlet_left", {})),
                         right=dict(spec.get("dirichlet_right", {})))
    else:
        raise ScenarioError(f"grid.bc: unknown boundary policy {bc_kind!r}")
    n = n_cells if n_cells is not None else _require(spec, "grid", "n_cells")
    return Grid1D(_require(spec, "grid", "x_min"),
                  _require(spec, "grid", "x_max"), int(n), bc)


# -- initial profiles ----------------------------------------------------------


def _profile(spec, x, name):
    kind = spec.get("kind")
    if kind == "constant":
        return np.full_like(x, float(_require(spec, name, "value")))
    if kind == "jump":
        return np.where(x < _require(spec, name, "split_at"),
                        float(_require(spec, name, "left")),
                        float(_require(spec, name, "right")))
    if kind == "sine":
        base = _require(spec, name, "base")
        amp = _require(spec, name, "amplitude")
        wavelength = _require(spec, name, "wavelength")
        phase = spec.get("phase", 0.0)
        return base + amp * np.sin(2.0 * np.pi * x / wavelength + phase)
    if kind == "piecewise":
        out = np.full_like(x, float(_require(spec, name, "default")))
        for piece in _require(spec, name, "pieces"):
            x_lo, x_hi, value = piece
            out = np.where((x >= x_lo) & (x <= x_hi), float(value), out)
        return out
    raise ScenarioError(f"{name}.kind: unknown profile {kind!r}")


def _speed_profile(spec, x, rho, fd):
    kind = spec.get("kind", "equilibrium")
    if kind == "equilibrium":
        return fd.speed(rho, validate=False)
    if kind == "equilibrium_offset":
        return fd.speed(rho, validate=False) + _require(spec, "initial.v", "delta")
    if kind == "cos_perturbation":
        base = fd.speed(_require(spec, "initial.v", "base_density"))
        amp = _require(spec, "initial.v", "amplitude")
        wavelength = _require(spec, "initial.v", "wavelength")
        return base + amp * np.cos(2.0 * np.pi * x / wavelength)
    if kind in ("constant", "jump", "piecewise", "sine"):
        return _profile(spec, x, "initial.v")
    raise ScenarioError(f"initial.v.kind: unknown profile {kind!r}")


def build_initial_state(scn, grid, model):
    init = scn.table("initial")
    if "rho" not in init:
        raise ScenarioError("initial.rho: required table is missing")
    x = grid.cell_centers()
    rho = _profile(init["rho"], x, "initial.rho")
    if model.kind == "lwr":
        return SimulationState(0.0, rho)
    if model.kind == "resonant":
        lanes_spec = init.get("lanes", {"kind": "constant", "value": 1.0})
        lanes = _profile(lanes_spec, x, "initial.lanes")
        return SimulationState(0.0, rho, lanes=lanes)
    v = _speed_profile(init.get("v", {}), x, rho, model.fd)
    if model.kind == "zhang":
        return SimulationState(0.0, rho, v=v)
    return SimulationState(0.0, rho, m=rho * v)


def build_sim_config(scn, n_cells=None, scheme=None):
    model = build_model(scn)
    grid = build_grid(scn, n_cells)
    initial = build_initial_state(scn, grid, model)
    t_spec = scn.table("time")
    s_spec = scn.table("scheme")
    name = scheme or s_spec["name"]
    if name not in godunov.SCHEMES:
        raise ScenarioError(f"scheme.name: unknown scheme {name!r}")
    dt = t_spec.get("dt")
    if dt is None and "dt_over_dx" in t_spec:
        dt = t_spec["dt_over_dx"] * grid.dx
    return SimulationConfig(
        model=model, grid=grid, initial=initial, scheme=name,
        t_end=float(t_spec["t_end"]), dt=dt,
        cfl_target=float(t_spec["cfl_target"]),
        output_times=tuple(t_spec["output_times"]),
        source_time=s_spec["source_time"])


def build_riemann_inputs(scn):
    """Model plus the left/right states for a single jump solve."""
    model = build_model(scn)
    spec = scn.table("riemann")
    left = _require(spec, "riemann", "left")
    right = _require(spec, "riemann", "right")

    def as_state(side, d):
        if model.kind == "lwr":
            return float(_require(d, f"riemann.{side}", "rho"))
        if model.kind == "resonant":
            from .resonant import ResonantState
            return ResonantState(float(_require(d, f"riemann.{side}", "lanes")),
                                 float(_require(d, f"riemann.{side}", "rho")))
        rho = float(_require(d, f"riemann.{side}", "rho"))
        if "v" in d:
            v = float(d["v"])
        elif d.get("equilibrium", False):
            v = model.fd.speed(rho)
        else:
            raise ScenarioError(f"riemann.{side}.v: speed (or equilibrium = "
                                f"true) is required")
        return State2(rho, v)

    return model, as_state("left", left), as_state("right", right)


# -- network -------------------------------------------------------------------


def build_network(scn):
    spec = scn.table("network")
    fd = build_diagram(scn)
    zones = []
    for z in _require(spec, "network", "zones"):
        role = z.get("role", network_mod.INTERIOR)
        if role not in (network_mod.INTERIOR, network_mod.ORIGIN,
                        network_mod.DESTINATION):
            raise ScenarioError(f"network zone {z.get('id')}: unknown role "
                                f"{role!r}")
        sink = tuple(z["sink"]) if "sink" in z else ("infinite",)
        pattern = tuple((float(c), int(d)) for c, d in z.get("pattern", []))
        zones.append(network_mod.Zone(
            int(_require(z, "zone", "id")),
            float(_require(z, "zone", "length")),
            float(_require(z, "zone", "lanes")), fd, role=role,
            arrival_pattern=pattern,
            arrivals_repeat=bool(z.get("repeat", True)),
            sink_policy=sink))
    connectors = []
    for c in _require(spec, "network", "connectors"):
        routing = {int(k): int(v) for k, v in c.get("routing", {}).items()}
        fractions = {int(k): float(v) for k, v in c.get("fractions", {}).items()}
        metering = {int(k): float(v) for k, v in c.get("metering", {}).items()}
        connectors.append(network_mod.Connector(
            int(_require(c, "connector", "id")),
            tuple(int(u) for u in _require(c, "connector", "upstream")),
            tuple(int(d) for d in _require(c, "connector", "downstream")),
            kind=c.get("kind", network_mod.LINEAR),
            fractions=fractions, routing=routing, metering=metering))
    try:
        return network_mod.TrafficNetwork(
            zones, connectors, dt=float(_require(spec, "network", "dt")),
            seed=scn.seed,
            per_branch_skip=bool(spec.get("per_branch_skip", False)))
    except network_mod.NetworkError as exc:
        raise ScenarioError(str(exc)) from exc


def network_steps(scn):
    spec = scn.table("network")
    if "n_steps" in spec:
        return int(spec["n_steps"])
    t_end = scn.table("time")["t_end"]
    dt = spec.get("dt")
    if not t_end or not dt:
        raise ScenarioError("network.n_steps (or time.t_end with network.dt) "
                            "is required")
    return int(round(t_end / dt))
