"""Two-level multi-commodity network simulator.

Aggregate level: each zone carries a vehicle count advanced by the discrete
conservation form N' = N + F_in - F_out, with edge fluxes from the
demand/supply solver of the lane-inhomogeneous model. Disaggregate level:
vehicles travel as macroparticles (count + destination) held in per-zone
FIFO queues; connectors move them between zones by exactly the aggregate
flux amounts, splitting the boundary particle when needed, so the two
levels agree identically at every step.

Connectors store no vehicles. Merges split the downstream supply among
upstream zones by predefined fractions (default: proportional to lane
count). Diverges split the upstream demand by the destination composition
of the vehicles actually reachable this step; under the default strict
FIFO policy a head particle whose branch is full blocks the zone's
outflow (per_branch_skip relaxes this to skipping the blocked particle).

A step is a two-phase barrier: all fluxes (and diverge walk plans) are
computed from the frozen state, then all movements are applied. Each zone
has at most one outbound and one inbound connector, so stored plans stay
valid while other connectors append to queue tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import resonant
from .errors import (DomainError, FractionSumError, NegativeCountError,
                     NetworkError, UnroutableDestinationError)

INTERIOR = "interior"
ORIGIN = "origin"
DESTINATION = "destination"

LINEAR = "linear"
MERGE = "merge"
DIVERGE = "diverge"
BOUNDARY = "boundary"   # network-edge connector; flux rule as linear

COUNT_TOL = 1e-12


@dataclass
class Macroparticle:
    """A group of nearby vehicles sharing a destination."""

    destination: int
    count: float
    seq: int

    def __post_init__(self):
        if not self.count > 0.0:
            raise DomainError(f"macroparticle count must be positive: {self.count}")


@dataclass
class Zone:
    """One roadway section: geometry, diagram, and the particle queue.

    The queue is ordered head (index 0, most downstream) to tail; the
    aggregate count is always the exact sum of particle counts.
    """

    id: int
    length: float
    lanes: float
    fd: object
    role: str = INTERIOR
    queue: list = field(default_factory=list)
    # Origin role: platoon pattern [(count, destination), ...].
    arrival_pattern: tuple = ()
    arrivals_repeat: bool = True
    # Destination role: receiving policy, one of
    # ("infinite",) | ("mirror_zone", zone_id)
    # | ("mirror_destination_count", zone_id, destination).
    sink_policy: tuple = ("infinite",)
    # Bookkeeping.
    cumulative_in: float = 0.0
    cumulative_out: float = 0.0
    received_by_destination: dict = field(default_factory=dict)
    _pattern_pos: int = 0

    @property
    def vehicle_count(self):
        return sum(p.count for p in self.queue)

    @property
    def density(self):
        return self.vehicle_count / self.length

    def destination_counts(self):
        out = {}
        for p in self.queue:
            out[p.destination] = out.get(p.destination, 0.0) + p.count
        return out

    def max_vehicles(self):
        return self.fd.rho_max * self.lanes * self.length

    def speed(self):
        rho = self.density
        if rho <= 0.0:
            return self.fd.v_free
        return self.fd.speed(min(rho / self.lanes, self.fd.rho_max),
                             validate=False)


@dataclass
class Connector:
    """Zero-length junction joining zones; carries fluxes, stores nothing."""

    id: int
    upstream: tuple
    downstream: tuple
    kind: str = LINEAR
    fractions: dict = field(default_factory=dict)   # up id -> supply share
    routing: dict = field(default_factory=dict)     # destination -> down id
    metering: dict = field(default_factory=dict)    # zone id -> rate cap
    last_flux: dict = field(default_factory=dict)   # (up, down) -> vehicles

    def __post_init__(self):
        self.upstream = tuple(self.upstream)
        self.downstream = tuple(self.downstream)
        if self.kind in (LINEAR, BOUNDARY):
            if len(self.upstream) != 1 or len(self.downstream) != 1:
                raise NetworkError(
                    f"connector {self.id}: linear junctions join exactly one "
                    f"zone to one zone")
        if self.kind == MERGE and len(self.downstream) != 1:
            raise NetworkError(f"connector {self.id}: a merge has one outlet")
        if self.kind == DIVERGE and len(self.upstream) != 1:
            raise NetworkError(f"connector {self.id}: a diverge has one inlet")


def zone_demand(zone, dt):
    """Sending rate of a zone over the coming step."""
    if zone.role == DESTINATION:
        return 0.0
    cap = resonant.capacity(zone.lanes, zone.fd)
    if zone.role == ORIGIN:
        return min(zone.vehicle_count / dt, cap)
    state = resonant.ResonantState(zone.lanes, zone.density)
    return max(resonant.demand(state, zone.fd), 0.0)


def zone_supply(zone, zones, dt):
    """Receiving rate of a zone over the coming step."""
    if zone.role == ORIGIN:
        return 0.0
    if zone.role == DESTINATION:
        policy = zone.sink_policy
        if policy[0] == "infinite":
            return math.inf
        if policy[0] == "mirror_zone":
            mirrored = zones[policy[1]].vehicle_count
        elif policy[0] == "mirror_destination_count":
            mirrored = zones[policy[1]].destination_counts().get(policy[2], 0.0)
        else:
            raise NetworkError(f"unknown sink policy {policy!r}")
        per_lane = min(mirrored / zone.length / zone.lanes, zone.fd.rho_max)
        state = resonant.ResonantState(zone.lanes, per_lane * zone.lanes)
        return max(resonant.supply(state, zone.fd), 0.0)
    per_lane = min(zone.density / zone.lanes, zone.fd.rho_max)
    state = resonant.ResonantState(zone.lanes, per_lane * zone.lanes)
    return max(resonant.supply(state, zone.fd), 0.0)


def update_zone_counts(count, inflow, outflow):
    """Aggregate conservation arithmetic with a negativity guard."""
    if outflow > count + inflow + COUNT_TOL * max(1.0, count):
        raise NegativeCountError(
            f"outflow {outflow} exceeds available {count} + {inflow}")
    return count + inflow - outflow


class TrafficNetwork:
    """Owns the zones, connectors, clock, and the ordering RNG."""

    def __init__(self, zones, connectors, dt, seed=0, per_branch_skip=False):
        self.zones = {z.id: z for z in zones}
        self.connectors = list(connectors)
        self.dt = dt
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.per_branch_skip = per_branch_skip
        self.t = 0.0
        self.step_count = 0
        self._seq = 0
        self._validate()

    def _validate(self):
        seen_up, seen_down = set(), set()
        for c in self.connectors:
            for zid in (*c.upstream, *c.downstream):
                if zid not in self.zones:
                    raise NetworkError(f"connector {c.id} references unknown "
                                       f"zone {zid}")
            for zid in c.upstream:
                if zid in seen_up:
                    raise NetworkError(
                        f"zone {zid} feeds two connectors; split flows with a "
                        f"diverge connector instead")
                seen_up.add(zid)
            for zid in c.downstream:
                if zid in seen_down:
                    raise NetworkError(
                        f"zone {zid} receives from two connectors; join flows "
                        f"with a merge connector instead")
                seen_down.add(zid)
            if c.kind == MERGE:
                fr = self._merge_fractions(c)
                if set(fr) != set(c.upstream):
                    raise FractionSumError(
                        f"connector {c.id}: fractions must cover the upstream "
                        f"zones")
                if abs(sum(fr.values()) - 1.0) > 1e-9:
                    raise FractionSumError(
                        f"connector {c.id}: supply fractions sum to "
                        f"{sum(fr.values())}")
        for z in self.zones.values():
            if z.role == INTERIOR and z.fd.v_free * self.dt > z.length:
                raise NetworkError(
                    f"zone {z.id}: dt={self.dt} exceeds the transit bound "
                    f"{z.length / z.fd.v_free}")

    def _merge_fractions(self, connector):
        if connector.fractions:
            return connector.fractions
        total = sum(self.zones[u].lanes for u in connector.upstream)
        return {u: self.zones[u].lanes / total for u in connector.upstream}

    def next_seq(self):
        self._seq += 1
        return self._seq

    # -- origin arrivals ------------------------------------------------------

    def _materialize_origin(self, zone, needed):
        """Extend an origin's waiting queue to cover this step's demand."""
        if not zone.arrival_pattern:
            return
        while zone.vehicle_count < needed:
            if zone._pattern_pos >= len(zone.arrival_pattern):
                break  # finite pattern exhausted
            count, dest = zone.arrival_pattern[zone._pattern_pos]
            zone.queue.append(Macroparticle(dest, float(count), self.next_seq()))
            zone._pattern_pos += 1
            if zone._pattern_pos >= len(zone.arrival_pattern):
                if not zone.arrivals_repeat:
                    break
                zone._pattern_pos = 0

    # -- fluxes (phase one: frozen state) --------------------------------------

    def connector_flux(self, connector):
        """Per-(upstream, downstream) vehicle counts for the coming step."""
        flux, _ = self._plan_connector(connector)
        return flux

    def _plan_connector(self, connector):
        """Fluxes plus, for diverges, the FIFO walk they came from."""
        dt = self.dt
        zones = self.zones
        kind = connector.kind
        if kind in (LINEAR, BOUNDARY):
            up, down = connector.upstream[0], connector.downstream[0]
            f = dt * min(zone_demand(zones[up], dt),
                         zone_supply(zones[down], zones, dt))
            f = self._meter(connector, up, f)
            return {(up, down): f}, None
        if kind == MERGE:
            down = connector.downstream[0]
            supply = zone_supply(zones[down], zones, dt)
            fractions = self._merge_fractions(connector)
            out = {}
            for up in connector.upstream:
                f = dt * min(zone_demand(zones[up], dt),
                             fractions[up] * supply)
                out[(up, down)] = self._meter(connector, up, f)
            return out, None
        if kind == DIVERGE:
            up = connector.upstream[0]
            walk = self._diverge_walk(connector)
            out = {(up, down): 0.0 for down in connector.downstream}
            for _, take, down in walk:
                out[(up, down)] += take
            return out, walk
        raise NetworkError(f"unknown connector kind {kind!r}")

    def _meter(self, connector, zone_id, flux):
        rate = connector.metering.get(zone_id)
        if rate is None:
            return flux
        return min(flux, rate * self.dt)

    def _diverge_walk(self, connector):
        """FIFO scan of the upstream queue against per-branch budgets.

        Returns [(queue index, amount, branch zone id), ...]. The walk
        defines the diverge flux and is replayed verbatim by the movement
        phase, keeping the aggregate and particle levels identical.
        """
        dt = self.dt
        zones = self.zones
        up = zones[connector.upstream[0]]
        remaining_demand = dt * zone_demand(up, dt)
        budget = {}
        for down in connector.downstream:
            b = dt * zone_supply(zones[down], zones, dt)
            rate = connector.metering.get(down)
            if rate is not None:
                b = min(b, rate * dt)
            budget[down] = b
        walk = []
        for i, particle in enumerate(up.queue):
            if remaining_demand <= COUNT_TOL:
                break
            down = connector.routing.get(particle.destination)
            if down is None:
                raise UnroutableDestinationError(
                    f"connector {connector.id}: no branch for destination "
                    f"{particle.destination}")
            take = min(particle.count, remaining_demand, budget[down])
            if take > COUNT_TOL:
                walk.append((i, take, down))
                remaining_demand -= take
                budget[down] -= take
            if take < particle.count - COUNT_TOL and not self.per_branch_skip:
                break  # strict FIFO: a blocked head blocks the zone
        return walk

    # -- movement (phase two) ---------------------------------------------------

    def _detach(self, zone, amount):
        """Remove exactly ``amount`` vehicles from the head of the queue."""
        out = []
        left = amount
        while left > COUNT_TOL and zone.queue:
            head = zone.queue[0]
            if head.count <= left + COUNT_TOL:
                out.append(zone.queue.pop(0))
                left -= out[-1].count
            else:
                head.count -= left
                out.append(Macroparticle(head.destination, left, head.seq))
                left = 0.0
        if left > 1e-6:
            raise NegativeCountError(
                f"zone {zone.id}: asked to detach {amount}, short by {left}")
        return out

    def _detach_walk(self, zone, walk):
        """Remove exactly the walked pieces, honoring skipped particles."""
        out = []
        remove = []
        for i, take, down in walk:
            particle = zone.queue[i]
            if take >= particle.count - COUNT_TOL:
                remove.append(i)
                out.append((particle, down))
            else:
                particle.count -= take
                out.append((Macroparticle(particle.destination, take,
                                          particle.seq), down))
        for i in reversed(remove):
            zone.queue.pop(i)
        return out

    def _attach(self, zone, particles):
        for p in particles:
            if p.count <= COUNT_TOL:
                continue
            zone.cumulative_in += p.count
            if zone.role == DESTINATION:
                zone.received_by_destination[p.destination] = \
                    zone.received_by_destination.get(p.destination, 0.0) + p.count
            else:
                zone.queue.append(
                    Macroparticle(p.destination, p.count, self.next_seq()))

    def move_macroparticles(self, connector, pair_fluxes, walk=None):
        """Detach the flux amounts, order them, and attach downstream."""
        zones = self.zones
        moved = []
        if connector.kind == DIVERGE:
            up = zones[connector.upstream[0]]
            if walk is None:
                walk = self._diverge_walk(connector)
            for particle, down in self._detach_walk(up, walk):
                moved.append((particle.seq, particle, down))
                up.cumulative_out += particle.count
        else:
            for (up, down), f in pair_fluxes.items():
                if f <= COUNT_TOL:
                    continue
                zone = zones[up]
                for p in self._detach(zone, f):
                    moved.append((p.seq, p, down))
                    zone.cumulative_out += p.count

        # Order through the connector by entry sequence; break exact ties
        # with a seeded draw (arrival order across zones is not observable).
        if moved:
            jitter = self.rng.random(len(moved))
            order = sorted(range(len(moved)),
                           key=lambda k: (moved[k][0], jitter[k]))
            by_down = {}
            for k in order:
                _, particle, down = moved[k]
                by_down.setdefault(down, []).append(particle)
            for down, particles in by_down.items():
                self._attach(zones[down], particles)
        return moved

    # -- stepping -----------------------------------------------------------------

    def step(self):
        """One synchronous step: all fluxes from the frozen state, then all
        movements."""
        dt = self.dt
        for z in self.zones.values():
            if z.role == ORIGIN:
                cap = resonant.capacity(z.lanes, z.fd)
                self._materialize_origin(z, needed=cap * dt * 2.0)

        plans = {c.id: self._plan_connector(c) for c in self.connectors}
        for c in self.connectors:
            flux, walk = plans[c.id]
            c.last_flux = flux
            self.move_macroparticles(c, flux, walk)
        self.t += dt
        self.step_count += 1
        return {cid: plan[0] for cid, plan in plans.items()}

    def total_interior_vehicles(self):
        return sum(z.vehicle_count for z in self.zones.values()
                   if z.role == INTERIOR)

    def conservation_gap(self):
        """Interior vehicles + sink intake - origin output; 0 if conserved."""
        sink = sum(z.cumulative_in for z in self.zones.values()
                   if z.role == DESTINATION)
        src = sum(z.cumulative_out for z in self.zones.values()
                  if z.role == ORIGIN)
        return self.total_interior_vehicles() + sink - src


def run_network(net, n_steps, record_every=1):
    """Advance the network, returning per-step zone and connector records."""
    history = []
    for k in range(n_steps):
        fluxes = net.step()
        if k % record_every == 0:
            zone_rows = {}
            for z in net.zones.values():
                zone_rows[z.id] = {
                    "N": (z.vehicle_count if z.role != DESTINATION
                          else z.cumulative_in),
                    "rho": z.density if z.role == INTERIOR else 0.0,
                    "v": z.speed() if z.role == INTERIOR else 0.0,
                    "by_destination": (z.destination_counts()
                                       if z.role != DESTINATION
                                       else dict(z.received_by_destination)),
                }
            conn_rows = {c.id: sum(fluxes[c.id].values())
                         for c in net.connectors}
            history.append({"t": net.t, "zones": zone_rows,
                            "connectors": conn_rows,
                            "conservation_gap": net.conservation_gap()})
    return history
