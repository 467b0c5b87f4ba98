"""Assembly of the finite-difference thermal network from a building spec.

Every wall layer is discretised into ``sub_nodes`` lumped slices; the node
sits at the slice centre, so each slice contributes half its resistance on
either side.  Windows become direct zone-outdoor conductances.  Boundary
nodes (outdoor, ground) are eliminated from the state and appear as forcing
columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .building import GROUND, OUTDOOR, BuildingSpec
from .errors import ConstructionError


@dataclass
class NetworkModel:
    """Immutable linear thermal network: C dT/dt = -K T + F [T_out, T_gnd] + gains.

    Attributes:
        node_names: state node names, zones first.
        capacitance: J/K per state node.
        conductance: symmetric stiffness matrix K (W/K); off-diagonals are
            -g_ij, diagonals include couplings to boundary nodes.
        boundary: (n, 2) conductances towards [outdoor, ground].
        solar_gain: W per (W/m2) of global horizontal, per node.
        zone_index: index of each zone id in the state vector.
        building: originating spec (heater, ventilation, schedule).
    """

    node_names: list[str]
    capacitance: np.ndarray
    conductance: np.ndarray
    boundary: np.ndarray
    solar_gain: np.ndarray
    zone_index: dict[str, int]
    building: BuildingSpec

    @property
    def n_nodes(self) -> int:
        return len(self.node_names)

    def steady_state_htc(self, extra_zone_outdoor: float = 0.0) -> float:
        """Static heat loss coefficient of the heated zone towards outdoor/ground.

        Eliminates all other nodes (Schur complement) with both boundaries at
        the same temperature; ``extra_zone_outdoor`` adds a fixed conductance
        (e.g. a constant ventilation term) between the heated zone and outdoor.
        """
        z = self.zone_index[self.building.heater.zone]
        k = self.conductance.copy()
        k[z, z] += extra_zone_outdoor
        idx = [i for i in range(self.n_nodes) if i != z]
        k_zz = k[z, z]
        k_zo = k[np.ix_([z], idx)][0]
        k_oo = k[np.ix_(idx, idx)]
        # Schur complement of the zone row: G = K_zz - K_zo K_oo^-1 K_oz.
        sol = np.linalg.solve(k_oo, -k_zo)
        return float(k_zz + k_zo @ sol)


def build_thermal_network(spec: BuildingSpec) -> NetworkModel:
    """Discretise walls and assemble the symmetric conductance matrix.

    Raises:
        ConstructionError: some zone has no conductive path to outdoor.
    """
    node_names = [z.id for z in spec.zones]
    capacitance = [z.air_capacitance for z in spec.zones]
    zone_index = {z.id: i for i, z in enumerate(spec.zones)}

    links: list[tuple[int | str, int | str, float]] = []

    for wall in spec.wall_assemblies:
        prev = wall.from_node
        prev_half = 0.0
        for li, layer in enumerate(wall.layers):
            slice_r = layer.thickness / (layer.conductivity * wall.area * wall.sub_nodes)
            slice_c = layer.density * layer.specific_heat * layer.thickness * wall.area / wall.sub_nodes
            for si in range(wall.sub_nodes):
                name = f"{wall.name}.L{li}.{si}"
                node_names.append(name)
                capacitance.append(slice_c)
                links.append((prev, name, 1.0 / (prev_half + slice_r / 2.0)))
                prev = name
                prev_half = slice_r / 2.0
        links.append((prev, wall.to_node, 1.0 / prev_half))

    for win in spec.windows:
        links.append((win.zone, OUTDOOR, win.u_value * win.area))

    index = {name: i for i, name in enumerate(node_names)}
    n = len(node_names)
    k = np.zeros((n, n))
    boundary = np.zeros((n, 2))
    bcol = {OUTDOOR: 0, GROUND: 1}

    adjacency: dict[str, set[str]] = {name: set() for name in node_names + list(bcol)}
    for a, b, g in links:
        adjacency[a].add(b)
        adjacency[b].add(a)
        a_state, b_state = a in index, b in index
        if a_state and b_state:
            i, j = index[a], index[b]
            k[i, i] += g
            k[j, j] += g
            k[i, j] -= g
            k[j, i] -= g
        elif a_state:
            i = index[a]
            k[i, i] += g
            boundary[i, bcol[b]] += g
        elif b_state:
            j = index[b]
            k[j, j] += g
            boundary[j, bcol[a]] += g
        else:
            raise ConstructionError(f"link between two boundary nodes: {a}-{b}")

    _check_connected(adjacency, [z.id for z in spec.zones])

    solar_gain = np.zeros(n)
    for win in spec.windows:
        solar_gain[zone_index[win.zone]] += win.solar_aperture * win.area

    return NetworkModel(
        node_names=node_names,
        capacitance=np.array(capacitance),
        conductance=k,
        boundary=boundary,
        solar_gain=solar_gain,
        zone_index=zone_index,
        building=spec,
    )


def _check_connected(adjacency: dict[str, set[str]], zone_ids: list[str]) -> None:
    seen = {OUTDOOR}
    stack = [OUTDOOR]
    while stack:
        for nxt in adjacency.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    unreachable = [z for z in zone_ids if z not in seen]
    if unreachable:
        raise ConstructionError(
            f"zones {unreachable} have no conductive path to the outdoor node"
        )
