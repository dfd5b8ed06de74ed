"""Node deployment geometry and the first-order radio energy model.

All distances are in meters, energies in joules. Transmission cost follows
the usual two-branch amplifier model: free-space (d^2) below the threshold
distance d0, multipath (d^4) at or above it. Reception costs only the
electronics energy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

# Default hardware parameters (sensor/gateway batteries and ranges).
SENSOR_ENERGY_J = 1.0
GATEWAY_ENERGY_J = 5.0
SENSOR_RANGE_M = 100.0   # d_max
GATEWAY_RANGE_M = 150.0  # R_max


class UnknownNodeError(KeyError):
    """Raised when a node id is not present in a deployment."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


def distance(a: Position, b: Position) -> float:
    """Euclidean distance between two positions."""
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass(frozen=True)
class RadioParams:
    """Radio energy model constants.

    e_elec is the per-bit electronics dissipation, eps_fs/eps_mp the
    free-space (d^2) and multipath (d^4) amplifier coefficients, d0 the
    crossover distance. packet_bits is the size of an aggregated data
    packet, message_bits the size of a single sensor message.
    """

    e_elec: float = 50e-9        # J/bit
    eps_fs: float = 10e-12       # J/bit/m^2
    eps_mp: float = 0.0013e-12   # J/bit/m^4
    d0: float = 86.0             # m
    packet_bits: int = 4000
    message_bits: int = 500

    def __post_init__(self) -> None:
        for name in ("e_elec", "eps_fs", "eps_mp", "d0", "packet_bits", "message_bits"):
            if getattr(self, name) <= 0:
                raise ValueError(f"RadioParams.{name} must be strictly positive")
        # Consistency: the crossover distance should sit where the two
        # amplifier branches meet, within 5%.
        implied = math.sqrt(self.eps_fs / self.eps_mp)
        if abs(implied - self.d0) > 0.05 * implied:
            raise ValueError(
                f"d0={self.d0} inconsistent with sqrt(eps_fs/eps_mp)={implied:.1f}"
            )


def tx_energy(bits: float, d: float, params: RadioParams) -> float:
    """Energy to transmit `bits` over distance `d`."""
    if bits < 0 or d < 0:
        raise ValueError("bits and distance must be non-negative")
    if d < params.d0:
        return bits * params.e_elec + bits * params.eps_fs * d * d
    return bits * params.e_elec + bits * params.eps_mp * d ** 4


def rx_energy(bits: float, params: RadioParams) -> float:
    """Energy to receive `bits`."""
    if bits < 0:
        raise ValueError("bits must be non-negative")
    return bits * params.e_elec


def tx_energy_vec(bits: float, d: np.ndarray, params: RadioParams) -> np.ndarray:
    """Vectorized tx_energy over an array of distances."""
    d = np.asarray(d, dtype=float)
    amp = np.where(d < params.d0, params.eps_fs * d * d, params.eps_mp * d ** 4)
    return bits * params.e_elec + bits * amp


@dataclass(frozen=True)
class SensorNode:
    id: int
    pos: Position
    energy: float
    tx_range: float = SENSOR_RANGE_M

    @property
    def alive(self) -> bool:
        return self.energy > 0.0


@dataclass(frozen=True)
class GatewayNode:
    id: int
    pos: Position
    energy: float
    tx_range: float = GATEWAY_RANGE_M

    @property
    def alive(self) -> bool:
        return self.energy > 0.0


@dataclass
class Deployment:
    """A static placement of sensors, gateways and the base station.

    Treated as immutable after construction; the simulation engine keeps
    its own residual-energy state and never mutates a Deployment.
    """

    sensors: list[SensorNode]
    gateways: list[GatewayNode]
    bs_pos: Position
    field_side: float
    seed: int
    params: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self) -> None:
        ids = [s.id for s in self.sensors] + [g.id for g in self.gateways]
        if len(ids) != len(set(ids)):
            raise ValueError("node ids must be unique across sensors and gateways")
        for node in [*self.sensors, *self.gateways]:
            if not (0 <= node.pos.x <= self.field_side and 0 <= node.pos.y <= self.field_side):
                raise ValueError(f"node {node.id} lies outside the field")
        self._by_id = {n.id: n for n in [*self.sensors, *self.gateways]}

    # Cached coordinate arrays, used heavily by clustering and simulation.
    @property
    def sensor_xy(self) -> np.ndarray:
        arr = getattr(self, "_sensor_xy", None)
        if arr is None:
            arr = np.array([[s.pos.x, s.pos.y] for s in self.sensors], dtype=float).reshape(-1, 2)
            self._sensor_xy = arr
        return arr

    @property
    def gateway_xy(self) -> np.ndarray:
        arr = getattr(self, "_gateway_xy", None)
        if arr is None:
            arr = np.array([[g.pos.x, g.pos.y] for g in self.gateways], dtype=float).reshape(-1, 2)
            self._gateway_xy = arr
        return arr

    @property
    def sensor_ids(self) -> np.ndarray:
        return np.array([s.id for s in self.sensors], dtype=int)

    @property
    def gateway_ids(self) -> np.ndarray:
        return np.array([g.id for g in self.gateways], dtype=int)

    def node(self, node_id: int) -> SensorNode | GatewayNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownNodeError(f"no node with id {node_id}") from None

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._by_id


def deploy_random(
    n_sensors: int,
    n_gateways: int,
    field_side: float,
    seed: int,
    params: Optional[RadioParams] = None,
    sensor_energy: float = SENSOR_ENERGY_J,
    gateway_energy: float = GATEWAY_ENERGY_J,
    bs_pos: Optional[Position] = None,
    stratified: bool = False,
) -> Deployment:
    """Place sensors and gateways uniformly at random over the square field.

    Identical arguments (including the seed) always yield a bit-identical
    Deployment. The base station defaults to the field center. With
    stratified=True, positions are drawn one per cell of a near-square
    grid instead of fully i.i.d.
    """
    if n_sensors < 0 or n_gateways < 0:
        raise ValueError("node counts must be non-negative")
    if field_side <= 0:
        raise ValueError("field_side must be positive")
    params = params or RadioParams()
    rng = np.random.default_rng(seed)

    def draw(count: int) -> np.ndarray:
        if count == 0:
            return np.empty((0, 2))
        if not stratified:
            return rng.uniform(0.0, field_side, size=(count, 2))
        # Stratified: one point per grid cell, row-major cell order.
        cols = math.ceil(math.sqrt(count))
        rows = math.ceil(count / cols)
        cw, ch = field_side / cols, field_side / rows
        pts = []
        for k in range(count):
            r, c = divmod(k, cols)
            pts.append([rng.uniform(c * cw, (c + 1) * cw), rng.uniform(r * ch, (r + 1) * ch)])
        return np.array(pts)

    sensor_xy = draw(n_sensors)
    gateway_xy = draw(n_gateways)
    sensors = [
        SensorNode(i, Position(float(x), float(y)), sensor_energy)
        for i, (x, y) in enumerate(sensor_xy)
    ]
    gateways = [
        GatewayNode(n_sensors + j, Position(float(x), float(y)), gateway_energy)
        for j, (x, y) in enumerate(gateway_xy)
    ]
    if bs_pos is None:
        bs_pos = Position(field_side / 2.0, field_side / 2.0)
    return Deployment(sensors, gateways, bs_pos, field_side, seed, params)


def neighbors(dep: Deployment, node_id: int, comm_range: float) -> list[int]:
    """All alive nodes within `comm_range` of the node, excluding itself.

    Returned in ascending id order. Raises UnknownNodeError for missing ids.
    """
    ref = dep.node(node_id)
    out = []
    for other in [*dep.sensors, *dep.gateways]:
        if other.id == node_id or not other.alive:
            continue
        if distance(ref.pos, other.pos) <= comm_range:
            out.append(other.id)
    return sorted(out)


def sensor_adjacency(dep: Deployment, comm_range: Optional[float] = None) -> tuple[np.ndarray, np.ndarray]:
    """Sensor-to-sensor adjacency (CSR indptr/indices over sensor indices).

    Edges connect sensors within `comm_range` (default: the sensors' own
    tx range). Indices within each row are sorted ascending. Built with a
    KD-tree so 10k-node deployments stay tractable.
    """
    n = len(dep.sensors)
    if comm_range is None:
        comm_range = dep.sensors[0].tx_range if n else SENSOR_RANGE_M
    if n == 0:
        return np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64)
    tree = cKDTree(dep.sensor_xy)
    pairs = tree.query_pairs(comm_range, output_type="ndarray")
    if pairs.size == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    np.cumsum(indptr, out=indptr)
    return indptr, dst.astype(np.int64)


# --- JSON serialization (pins exact topologies for experiments) ---

def deployment_to_json(dep: Deployment) -> str:
    doc = {
        "field_side": dep.field_side,
        "seed": dep.seed,
        "bs": {"x": dep.bs_pos.x, "y": dep.bs_pos.y},
        "radio": {
            "e_elec": dep.params.e_elec,
            "eps_fs": dep.params.eps_fs,
            "eps_mp": dep.params.eps_mp,
            "d0": dep.params.d0,
            "packet_bits": dep.params.packet_bits,
            "message_bits": dep.params.message_bits,
        },
        "nodes": [
            {"id": s.id, "x": s.pos.x, "y": s.pos.y, "energy": s.energy,
             "role": "sensor", "tx_range": s.tx_range}
            for s in dep.sensors
        ] + [
            {"id": g.id, "x": g.pos.x, "y": g.pos.y, "energy": g.energy,
             "role": "gateway", "tx_range": g.tx_range}
            for g in dep.gateways
        ],
    }
    return json.dumps(doc, sort_keys=True)


def deployment_from_json(text: str) -> Deployment:
    doc = json.loads(text)
    radio = RadioParams(**doc["radio"]) if "radio" in doc else RadioParams()
    sensors, gateways = [], []
    for nd in doc["nodes"]:
        pos = Position(nd["x"], nd["y"])
        if nd["role"] == "sensor":
            sensors.append(SensorNode(nd["id"], pos, nd["energy"], nd.get("tx_range", SENSOR_RANGE_M)))
        elif nd["role"] == "gateway":
            gateways.append(GatewayNode(nd["id"], pos, nd["energy"], nd.get("tx_range", GATEWAY_RANGE_M)))
        else:
            raise ValueError(f"unknown node role {nd['role']!r}")
    return Deployment(
        sensors, gateways,
        Position(doc["bs"]["x"], doc["bs"]["y"]),
        doc["field_side"], doc["seed"], radio,
    )
