"""Round-based network operation with energy accounting.

Each round, every alive cluster member sends one fixed-size message toward
its head; relays store-and-forward each message (no intra-tree
aggregation), the head aggregates its cluster's traffic into one data
packet and transmits it to its assigned gateway, and each gateway forwards
one packet per received packet to the base station. All costs come from
the radio model. A transmitter is charged whether or not its receiver is
still alive; traffic reaching a dead node is dropped and reported.

Clusters and assignments are rebuilt from residual energies every
`recluster_period` rounds. When an epoch was clustered from an all-equal
energy field (the initial state), the next rebuild happens one round later
so the energy field can differentiate; a fresh deployment would otherwise
collapse into one giant cluster per connected component.

Network lifetime is the number of completed rounds before the first sensor
death.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import assign as assign_mod
from . import gsa
from .assign import (FF1, FF2, Assignment, FitnessWeights,
                     InfeasibleAssignmentError, default_weights)
from .gradient import GRADIENT, WATERSHED, ClusterSet, build_clusters, DEFAULT_PLATEAU_TOL
from .netmodel import (Deployment, Position, RadioParams, deploy_random,
                       sensor_adjacency, tx_energy_vec)

GC_GSA = "GC_GSA"
WA_GSA = "WA_GSA"
GSA_EEC = "GSA_EEC"
PROTOCOLS = (GC_GSA, WA_GSA, GSA_EEC)

RUN_UNTIL_FIRST_DEATH = "first_death"
RUN_UNTIL_MAX_ROUNDS = "max_rounds"


class InfeasibleDeploymentError(RuntimeError):
    """Some node has no gateway within communication range at all."""

    def __init__(self, node_id: int, seed: int):
        self.node_id = node_id
        self.seed = seed
        super().__init__(
            f"node {node_id} has no gateway in range (deployment seed {seed})"
        )


@dataclass
class GsaSettings:
    """Optimizer schedule shared by all assignment runs of a simulation."""

    n_agents: int = 30
    t_max: int = 100
    g0: float = 100.0
    alpha: float = 20.0
    epsilon: float = 1e-9

    def as_params(self, counts: np.ndarray) -> gsa.GsaParams:
        return gsa.GsaParams(
            lower_bounds=np.zeros(len(counts)),
            upper_bounds=np.asarray(counts, dtype=float),
            n_agents=self.n_agents, t_max=self.t_max,
            g0=self.g0, alpha=self.alpha, epsilon=self.epsilon,
        )


@dataclass
class SimConfig:
    n_sensors: int
    n_gateways: int
    field_side: float
    seed: int
    protocol: str = GC_GSA
    fitness_form: str = FF1
    weights: Optional[FitnessWeights] = None
    radio: RadioParams = field(default_factory=RadioParams)
    gsa: GsaSettings = field(default_factory=GsaSettings)
    recluster_period: int = 20
    max_rounds: int = 20000
    run_until: str = RUN_UNTIL_FIRST_DEATH
    plateau_tol: float = DEFAULT_PLATEAU_TOL
    sensor_energy: float = 1.0
    gateway_energy: float = 5.0
    bs_pos: Optional[tuple[float, float]] = None
    stratified: bool = False
    deployment: Optional[Deployment] = None  # pinned topology overrides the above

    def __post_init__(self) -> None:
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.fitness_form not in (FF1, FF2):
            raise ValueError(f"unknown fitness form {self.fitness_form!r}")
        if self.recluster_period < 1 or self.max_rounds < 1:
            raise ValueError("recluster_period and max_rounds must be >= 1")
        if self.run_until not in (RUN_UNTIL_FIRST_DEATH, RUN_UNTIL_MAX_ROUNDS):
            raise ValueError(f"unknown run_until {self.run_until!r}")
        if self.weights is None:
            self.weights = default_weights(self.fitness_form)


@dataclass
class RoundReport:
    round: int
    energy_spent: float
    mean_sensor_energy: float
    min_sensor_energy: float
    alive_sensors: int
    alive_gateways: int
    dropped_messages: int = 0
    dropped_packets: int = 0


@dataclass
class SimSummary:
    protocol: str
    fitness_form: str
    seed: int
    lifetime_rounds: int
    lifetime_censored: bool
    rounds_run: int
    total_energy_spent: float
    mean_energy_per_sensor_round: float
    final_alive_sensors: int
    final_alive_gateways: int
    avg_energy_curve: list[float]
    cluster_counts: list[tuple[int, int]]  # (round, head count) per epoch

    def to_json(self) -> str:
        doc = {
            "protocol": self.protocol,
            "fitness_form": self.fitness_form,
            "seed": self.seed,
            "lifetime_rounds": self.lifetime_rounds,
            "lifetime_censored": self.lifetime_censored,
            "rounds_run": self.rounds_run,
            "total_energy_spent": self.total_energy_spent,
            "mean_energy_per_sensor_round": self.mean_energy_per_sensor_round,
            "final_alive_sensors": self.final_alive_sensors,
            "final_alive_gateways": self.final_alive_gateways,
            "cluster_counts": [list(t) for t in self.cluster_counts],
        }
        return json.dumps(doc, sort_keys=True)


def rounds_csv_rows(reports: list[RoundReport]) -> list[str]:
    rows = ["round,mean_sensor_energy,min_sensor_energy,alive_sensors,energy_spent"]
    for r in reports:
        rows.append(f"{r.round},{r.mean_sensor_energy!r},{r.min_sensor_energy!r},"
                    f"{r.alive_sensors},{r.energy_spent!r}")
    return rows


class _EpochTopology:
    """Frozen routing structure for one re-clustering epoch.

    Holds parent links, hop distances and gateway targets; per-round cost
    vectors are recomputed from it whenever the alive sets change.
    """

    def __init__(self, dep: Deployment, cluster_set: Optional[ClusterSet],
                 assignment: Assignment, radio: RadioParams):
        self.radio = radio
        n = len(dep.sensors)
        m = len(dep.gateways)
        sid_to_idx = {int(s): i for i, s in enumerate(dep.sensor_ids)}
        gid_to_idx = {int(g): j for j, g in enumerate(dep.gateway_ids)}
        sxy = dep.sensor_xy
        gxy = dep.gateway_xy

        self.parent = np.full(n, -1, dtype=np.int64)
        self.is_head = np.zeros(n, dtype=bool)
        self.in_topology = np.zeros(n, dtype=bool)
        self.gw_of = np.full(n, -1, dtype=np.int64)   # per sensor: target gateway idx
        self.d_parent = np.zeros(n)
        self.d_gw = np.zeros(n)

        if cluster_set is None:
            # Single-level mode: every assigned sensor transmits packets
            # directly to its gateway.
            for sid, gid in assignment.mapping.items():
                i = sid_to_idx[sid]
                self.is_head[i] = True
                self.in_topology[i] = True
                self.gw_of[i] = gid_to_idx[gid]
        else:
            for sid, pid in cluster_set.parent.items():
                i = sid_to_idx[sid]
                self.in_topology[i] = True
                if pid is None:
                    self.is_head[i] = True
                else:
                    self.parent[i] = sid_to_idx[pid]
            for hid, gid in assignment.mapping.items():
                self.gw_of[sid_to_idx[hid]] = gid_to_idx[gid]

        has_parent = self.parent >= 0
        src = np.flatnonzero(has_parent)
        self.d_parent[src] = np.hypot(
            sxy[src, 0] - sxy[self.parent[src], 0],
            sxy[src, 1] - sxy[self.parent[src], 1])
        tgt = np.flatnonzero(self.gw_of >= 0)
        self.d_gw[tgt] = np.hypot(
            sxy[tgt, 0] - gxy[self.gw_of[tgt], 0],
            sxy[tgt, 1] - gxy[self.gw_of[tgt], 1])
        self.d_g_bs = np.hypot(gxy[:, 0] - dep.bs_pos.x, gxy[:, 1] - dep.bs_pos.y) \
            if m else np.zeros(0)

        # Depth layering for the bottom-up traffic pass.
        depth = np.full(n, -1, dtype=np.int64)
        depth[self.is_head] = 0
        frontier = np.flatnonzero(self.is_head)
        d = 0
        remaining = has_parent.copy()
        while True:
            nxt = np.flatnonzero(remaining & np.isin(self.parent, frontier))
            if nxt.size == 0:
                break
            d += 1
            depth[nxt] = d
            remaining[nxt] = False
            frontier = nxt
        self.depth = depth
        self.max_depth = d
        # Per-round per-sensor transmit energies (fixed geometry).
        self.e_msg_tx = tx_energy_vec(radio.message_bits, self.d_parent, radio)
        self.e_msg_rx = radio.message_bits * radio.e_elec
        self.e_pkt_tx = tx_energy_vec(radio.packet_bits, self.d_gw, radio)
        self.e_pkt_rx = radio.packet_bits * radio.e_elec
        self.e_pkt_bs = tx_energy_vec(radio.packet_bits, self.d_g_bs, radio) \
            if m else np.zeros(0)

    def costs(self, alive_s: np.ndarray, alive_g: np.ndarray):
        """Per-round (sensor costs, gateway costs, dropped msgs, dropped pkts)
        for the current alive sets."""
        n = len(alive_s)
        sent = np.zeros(n, dtype=np.int64)
        received = np.zeros(n, dtype=np.int64)
        active = self.in_topology & alive_s
        for lvl in range(self.max_depth, 0, -1):
            sel = np.flatnonzero((self.depth == lvl) & active)
            if sel.size == 0:
                continue
            sent[sel] = 1 + received[sel]
            par = self.parent[sel]
            ok = alive_s[par]
            np.add.at(received, par[ok], sent[sel][ok])
        # Nodes in the topology but not layered (their chain crosses a dead
        # node built into the epoch) still transmit their own message.
        stray = active & (self.depth < 0)
        sent[stray] = 1 + received[stray]

        heads = self.is_head & active
        cost_s = np.zeros(n)
        senders = active & ~heads
        cost_s[senders] = (sent[senders] * self.e_msg_tx[senders]
                           + received[senders] * self.e_msg_rx)
        cost_s[heads] = received[heads] * self.e_msg_rx + self.e_pkt_tx[heads]

        originated = int(senders.sum())
        delivered = int(received[heads].sum())
        dropped_msgs = originated - delivered

        cost_g = np.zeros(len(alive_g))
        pkt_heads = np.flatnonzero(heads & (self.gw_of >= 0))
        gw = self.gw_of[pkt_heads]
        deliverable = alive_g[gw]
        np.add.at(cost_g, gw[deliverable], 1.0)
        dropped_pkts = int((~deliverable).sum())
        cost_g *= self.e_pkt_rx + self.e_pkt_bs
        cost_g[~alive_g] = 0.0
        return cost_s, cost_g, dropped_msgs, dropped_pkts


@dataclass
class NetworkState:
    """Mutable residual-energy state layered over a static Deployment."""

    dep: Deployment
    sensor_energy: np.ndarray
    gateway_energy: np.ndarray
    round: int = 0

    @classmethod
    def fresh(cls, dep: Deployment) -> "NetworkState":
        return cls(
            dep,
            np.array([s.energy for s in dep.sensors], dtype=float),
            np.array([g.energy for g in dep.gateways], dtype=float),
        )

    @property
    def alive_sensors(self) -> np.ndarray:
        return self.sensor_energy > 0.0

    @property
    def alive_gateways(self) -> np.ndarray:
        return self.gateway_energy > 0.0


def _apply_round(state: NetworkState, topo: _EpochTopology) -> RoundReport:
    alive_s = state.alive_sensors
    alive_g = state.alive_gateways
    cost_s, cost_g, dropped_msgs, dropped_pkts = topo.costs(alive_s, alive_g)
    # A dying node absorbs only its remaining energy from the final charge.
    spent_s = np.minimum(cost_s, state.sensor_energy)
    spent_g = np.minimum(cost_g, state.gateway_energy)
    state.sensor_energy -= spent_s
    state.gateway_energy -= spent_g
    state.round += 1
    e = state.sensor_energy
    alive_after = e > 0.0
    return RoundReport(
        round=state.round,
        energy_spent=float(spent_s.sum() + spent_g.sum()),
        mean_sensor_energy=float(e.mean()) if len(e) else 0.0,
        min_sensor_energy=float(e[alive_after].min()) if alive_after.any() else 0.0,
        alive_sensors=int(alive_after.sum()),
        alive_gateways=int(state.alive_gateways.sum()),
        dropped_messages=dropped_msgs,
        dropped_packets=dropped_pkts,
    )


def run_round(state: NetworkState, cluster_set: Optional[ClusterSet],
              assignment: Assignment, radio: RadioParams) -> RoundReport:
    """Execute one round against an explicit topology (pass cluster_set=None
    for the single-level direct-to-gateway mode)."""
    topo = _EpochTopology(state.dep, cluster_set, assignment, radio)
    return _apply_round(state, topo)


class Simulation:
    """Drives re-clustering epochs and rounds for one configuration."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        if cfg.deployment is not None:
            self.dep = cfg.deployment
        else:
            bs = Position(*cfg.bs_pos) if cfg.bs_pos else None
            self.dep = deploy_random(
                cfg.n_sensors, cfg.n_gateways, cfg.field_side, cfg.seed,
                params=cfg.radio, sensor_energy=cfg.sensor_energy,
                gateway_energy=cfg.gateway_energy, bs_pos=bs,
                stratified=cfg.stratified,
            )
        self.state = NetworkState.fresh(self.dep)
        self.reports: list[RoundReport] = []
        self.cluster_counts: list[tuple[int, int]] = []
        self._adjacency = None
        self._epoch_index = 0
        self._topo: Optional[_EpochTopology] = None
        self._sid_to_idx = {int(s): i for i, s in enumerate(self.dep.sensor_ids)}
        # Static nearest-in-range gateway per sensor, used as a fallback
        # target once every in-range gateway has depleted.
        self._fallback_gw, self._fallback_ok = self._nearest_in_range()

    def _nearest_in_range(self):
        n = len(self.dep.sensors)
        m = len(self.dep.gateways)
        near = np.full(n, -1, dtype=np.int64)
        ok_s = np.zeros(n, dtype=bool)
        ok_r = np.zeros(n, dtype=bool)
        if m == 0 or n == 0:
            return near, (ok_s, ok_r)
        sxy, gxy = self.dep.sensor_xy, self.dep.gateway_xy
        # chunked to bound memory on 10k-sensor deployments
        step = 2048
        s_range = self.dep.sensors[0].tx_range
        g_range = self.dep.gateways[0].tx_range
        for lo in range(0, n, step):
            d = np.hypot(sxy[lo:lo + step, None, 0] - gxy[None, :, 0],
                         sxy[lo:lo + step, None, 1] - gxy[None, :, 1])
            j = np.argmin(d, axis=1)
            dmin = d[np.arange(len(j)), j]
            near[lo:lo + step] = j
            ok_s[lo:lo + step] = dmin <= s_range
            ok_r[lo:lo + step] = dmin <= g_range
        return near, (ok_s, ok_r)

    def _heads_and_clusters(self):
        cfg = self.cfg
        if cfg.protocol == GSA_EEC:
            heads = [int(i) for i in self.dep.sensor_ids[self.state.alive_sensors]]
            return heads, None, self.dep.sensors[0].tx_range
        mode = GRADIENT if cfg.protocol == GC_GSA else WATERSHED
        if self._adjacency is None:
            self._adjacency = sensor_adjacency(self.dep)
        cs = build_clusters(self.dep, mode, energies=self.state.sensor_energy,
                            tau=cfg.plateau_tol, adjacency=self._adjacency)
        return list(cs.heads), cs, self.dep.gateways[0].tx_range if self.dep.gateways else 0.0

    def _rebuild_epoch(self) -> None:
        cfg = self.cfg
        heads, cluster_set, comm_range = self._heads_and_clusters()
        sid_to_idx = self._sid_to_idx
        within = self._fallback_ok[0] if cfg.protocol == GSA_EEC else self._fallback_ok[1]
        head_idx = np.array([sid_to_idx[h] for h in heads], dtype=np.int64)
        bad = head_idx[~within[head_idx]]
        if bad.size:
            raise InfeasibleDeploymentError(int(self.dep.sensor_ids[bad[0]]), cfg.seed)

        gw_e = self.state.gateway_energy
        gw_alive = gw_e > 0.0
        # served = heads with at least one alive gateway still in range
        servable = np.zeros(len(head_idx), dtype=bool)
        if gw_alive.any():
            gxy = self.dep.gateway_xy[gw_alive]
            hxy = self.dep.sensor_xy[head_idx]
            step = 2048
            for lo in range(0, len(head_idx), step):
                d = np.hypot(hxy[lo:lo + step, None, 0] - gxy[None, :, 0],
                             hxy[lo:lo + step, None, 1] - gxy[None, :, 1])
                servable[lo:lo + step] = (d <= comm_range).any(axis=1)
        served = [h for h, s in zip(heads, servable) if s]
        fallback = [h for h, s in zip(heads, servable) if not s]

        mapping: dict[int, int] = {}
        if served:
            seed_seq = np.random.SeedSequence((cfg.seed, self._epoch_index))
            assignment, _ = assign_mod.assign_heads(
                served, self.dep, cfg.weights, cfg.gsa.as_params(np.ones(1)),
                seed=seed_seq, comm_range=comm_range, gateway_energies=gw_e,
            )
            mapping.update(assignment.mapping)
        for h in fallback:
            mapping[h] = int(self.dep.gateway_ids[self._fallback_gw[sid_to_idx[h]]])

        self._topo = _EpochTopology(self.dep, cluster_set, Assignment(mapping), cfg.radio)
        self.cluster_counts.append((self.state.round + 1, len(heads)))
        self._epoch_index += 1

    def run(self) -> SimSummary:
        cfg = self.cfg
        if not self.dep.sensors:
            raise ValueError("cannot simulate an empty deployment")
        initial_sensor_total = float(self.state.sensor_energy.sum())
        lifetime: Optional[int] = None
        next_rebuild = 1
        r = 0
        while r < cfg.max_rounds:
            r += 1
            if r == next_rebuild:
                e = self.state.sensor_energy[self.state.alive_sensors]
                degenerate = e.size > 1 and float(e.min()) == float(e.max())
                self._rebuild_epoch()
                next_rebuild = r + (1 if degenerate else cfg.recluster_period)
            report = _apply_round(self.state, self._topo)
            self.reports.append(report)
            if lifetime is None and report.alive_sensors < len(self.dep.sensors):
                lifetime = r - 1
                if cfg.run_until == RUN_UNTIL_FIRST_DEATH:
                    break
            if report.alive_sensors == 0:
                break
        rounds_run = self.state.round
        censored = lifetime is None
        if censored:
            lifetime = rounds_run
        total = float(sum(rep.energy_spent for rep in self.reports))
        sensor_spent = initial_sensor_total - float(self.state.sensor_energy.sum())
        n = len(self.dep.sensors)
        return SimSummary(
            protocol=cfg.protocol,
            fitness_form=cfg.fitness_form,
            seed=cfg.seed,
            lifetime_rounds=lifetime,
            lifetime_censored=censored,
            rounds_run=rounds_run,
            total_energy_spent=total,
            mean_energy_per_sensor_round=sensor_spent / (n * rounds_run) if rounds_run else 0.0,
            final_alive_sensors=int(self.state.alive_sensors.sum()),
            final_alive_gateways=int(self.state.alive_gateways.sum()),
            avg_energy_curve=[rep.mean_sensor_energy for rep in self.reports],
            cluster_counts=self.cluster_counts,
        )


def run_simulation(cfg: SimConfig) -> SimSummary:
    """Build the deployment and run the configured protocol to completion."""
    return Simulation(cfg).run()
