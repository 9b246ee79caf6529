"""Shared fixtures: the worked highway network used across test modules."""

import numpy as np

from macroflow import diagrams, network
from macroflow.network import Connector, TrafficNetwork, Zone


def build_highway_network(seed=0, per_branch_skip=False):
    """Mainline of 20 zones with an on-ramp merge and an off-ramp diverge.

    Newell per-lane diagram (60 mph free flow, -10 mph jam wave, 250 vpm),
    0.6 mi zones, 30 s steps. Zones 2 and 18 have four lanes, the ramps one,
    everything else three. Origin 0 cycles platoons of 25 vehicles to
    destination 1 then 10 to destination 2; the ramp origin 22 cycles 5/2
    with the same split. Destination 21 mirrors zone 20; the off-ramp sink
    23 mirrors zone 18's destination-2 load.
    """
    fd = diagrams.newell(60.0, -10.0, 250.0)
    dx = 0.6
    dt = 30.0 / 3600.0

    def lanes_of(zid):
        if zid in (2, 18):
            return 4.0
        if zid in (22, 23):
            return 1.0
        return 3.0

    zones = [Zone(0, dx, 3.0, fd, role=network.ORIGIN,
                  arrival_pattern=((25.0, 1), (10.0, 2)))]
    zones += [Zone(z, dx, lanes_of(z), fd) for z in range(1, 21)]
    zones.append(Zone(21, dx, 3.0, fd, role=network.DESTINATION,
                      sink_policy=("mirror_zone", 20)))
    zones.append(Zone(22, dx, 1.0, fd, role=network.ORIGIN,
                      arrival_pattern=((5.0, 1), (2.0, 2))))
    zones.append(Zone(23, dx, 1.0, fd, role=network.DESTINATION,
                      sink_policy=("mirror_destination_count", 18, 2)))

    connectors = [Connector(1, (0,), (1,), kind=network.BOUNDARY),
                  Connector(2, (1, 22), (2,), kind=network.MERGE)]
    connectors += [Connector(i, (i - 1,), (i,)) for i in range(3, 19)]
    connectors.append(Connector(19, (18,), (19, 23), kind=network.DIVERGE,
                                routing={1: 19, 2: 23}))
    connectors.append(Connector(20, (19,), (20,)))
    connectors.append(Connector(21, (20,), (21,), kind=network.BOUNDARY))

    return TrafficNetwork(zones, connectors, dt=dt, seed=seed,
                          per_branch_skip=per_branch_skip)
