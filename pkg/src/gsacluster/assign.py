"""Cluster-head-to-gateway assignment via the GSA.

Each GSA agent is a real vector with one dimension per cluster head;
dimension d ranges over [0, l_d) and decodes (by floor) to an index into
head d's eligibility list of in-range gateways. Two fitness forms combine
the summed residual energy of the assigned gateways (f1, maximize) with
the summed head->gateway->base-station distance (f2, minimize):

* FF1: alpha * 1/f1 + beta * f2, with alpha + beta = 1.
* FF2: (beta * f2 + t1) / (alpha * f1 + t2), squashed into [0, 1) by the
  monotone map r -> r / (1 + r) (monotone, so the argmin is unchanged).

The single-level baseline treats every alive sensor as its own head and
assigns it directly to a gateway with the same machinery.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import gsa
from .netmodel import Deployment, GATEWAY_RANGE_M, distance

FF1 = "FF1"
FF2 = "FF2"


class InfeasibleAssignmentError(RuntimeError):
    """A cluster head has no eligible gateway within range."""

    def __init__(self, head_id: int):
        self.head_id = head_id
        super().__init__(f"head {head_id} has no alive gateway within range")


class DegenerateFitnessError(RuntimeError):
    """The fitness is undefined for this configuration (e.g. f1 = 0)."""


@dataclass(frozen=True)
class FitnessWeights:
    alpha: float = 0.5
    beta: float = 0.5
    t1: float = 0.0
    t2: float = 1.0
    form: str = FF1

    def __post_init__(self) -> None:
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.form not in (FF1, FF2):
            raise ValueError(f"unknown fitness form {self.form!r}")
        if self.form == FF1 and abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError("FF1 requires alpha + beta = 1")


DEFAULT_FF1 = FitnessWeights(alpha=0.5, beta=0.5, form=FF1)
DEFAULT_FF2 = FitnessWeights(alpha=1.0, beta=1.0, t1=0.0, t2=1.0, form=FF2)


def default_weights(form: str) -> FitnessWeights:
    if form == FF1:
        return DEFAULT_FF1
    if form == FF2:
        return DEFAULT_FF2
    raise ValueError(f"unknown fitness form {form!r}")


@dataclass
class EligibilityMap:
    """Per-head list of reachable alive gateways, ascending gateway id.

    Also carries flat arrays (offsets into lists, gateway indices, and
    head->gateway distances) used for vectorized decoding and fitness.
    """

    head_ids: list[int]
    lists: list[np.ndarray]        # per head: eligible gateway ids (ascending)
    offsets: np.ndarray            # len c+1, prefix offsets into flat arrays
    flat_gw_index: np.ndarray      # eligible gateway (array) indices, flattened
    flat_d_hg: np.ndarray          # head->gateway distances, flattened

    @property
    def counts(self) -> np.ndarray:
        return np.diff(self.offsets)


def build_eligibility(heads: Sequence[int], dep: Deployment,
                      comm_range: float = GATEWAY_RANGE_M,
                      gateway_energies: Optional[np.ndarray] = None) -> EligibilityMap:
    """Eligible alive gateways within `comm_range` of each head.

    `gateway_energies` overrides the deployment's gateway energies when the
    simulation tracks residual state. Raises InfeasibleAssignmentError
    naming the first head with an empty list.
    """
    gw_ids = dep.gateway_ids
    gw_xy = dep.gateway_xy
    if gateway_energies is None:
        gateway_energies = np.array([g.energy for g in dep.gateways], dtype=float)
    gw_alive = np.asarray(gateway_energies) > 0.0

    head_ids = [int(h) for h in heads]
    head_xy = np.array([[dep.node(h).pos.x, dep.node(h).pos.y] for h in head_ids],
                       dtype=float).reshape(-1, 2)
    lists: list[np.ndarray] = []
    flat_idx: list[np.ndarray] = []
    flat_d: list[np.ndarray] = []
    offsets = [0]
    for i, h in enumerate(head_ids):
        d = np.hypot(gw_xy[:, 0] - head_xy[i, 0], gw_xy[:, 1] - head_xy[i, 1])
        ok = np.flatnonzero((d <= comm_range) & gw_alive)
        if ok.size == 0:
            raise InfeasibleAssignmentError(h)
        # gateway ids ascend with array index, so `ok` is already id-sorted
        lists.append(gw_ids[ok])
        flat_idx.append(ok)
        flat_d.append(d[ok])
        offsets.append(offsets[-1] + ok.size)
    return EligibilityMap(
        head_ids, lists, np.array(offsets, dtype=np.int64),
        np.concatenate(flat_idx) if flat_idx else np.empty(0, dtype=np.int64),
        np.concatenate(flat_d) if flat_d else np.empty(0),
    )


@dataclass
class Assignment:
    """Map from cluster-head id to the gateway id serving it."""

    mapping: dict[int, int]

    def to_json(self, fitness: Optional[float] = None,
                weights: Optional[FitnessWeights] = None) -> str:
        doc: dict = {"mapping": {str(k): v for k, v in sorted(self.mapping.items())}}
        if fitness is not None:
            doc["fitness"] = fitness
        if weights is not None:
            doc["weights"] = {"alpha": weights.alpha, "beta": weights.beta,
                              "t1": weights.t1, "t2": weights.t2, "form": weights.form}
        return json.dumps(doc, sort_keys=True)


def _decode_indices(positions: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Floor-decode positions (any shape ending in c) to eligibility indices."""
    idx = np.floor(np.clip(positions, 0.0, None)).astype(np.int64)
    return np.minimum(idx, counts - 1)


def decode_agent(position: np.ndarray, elig: EligibilityMap) -> Assignment:
    """Decode one agent position vector into a head->gateway assignment."""
    position = np.asarray(position, dtype=float)
    if position.shape != (len(elig.head_ids),):
        raise ValueError("position length must equal the number of heads")
    idx = _decode_indices(position, elig.counts)
    mapping = {h: int(elig.lists[i][idx[i]]) for i, h in enumerate(elig.head_ids)}
    return Assignment(mapping)


def _gather_terms(a: Assignment, dep: Deployment,
                  gateway_energies: Optional[np.ndarray] = None) -> tuple[float, float]:
    """f1 (summed assigned-gateway energy, one term per head) and f2
    (summed head->gateway->BS distance)."""
    if gateway_energies is not None:
        gw_pos = {int(g.id): g.pos for g in dep.gateways}
        gw_e = {int(gid): float(e) for gid, e in zip(dep.gateway_ids, gateway_energies)}
    else:
        gw_pos = {int(g.id): g.pos for g in dep.gateways}
        gw_e = {int(g.id): g.energy for g in dep.gateways}
    f1 = 0.0
    f2 = 0.0
    for h, g in a.mapping.items():
        hp = dep.node(h).pos
        gp = gw_pos[g]
        f1 += gw_e[g]
        f2 += distance(hp, gp) + distance(gp, dep.bs_pos)
    return f1, f2


def fitness_ff1(a: Assignment, dep: Deployment, w: FitnessWeights,
                gateway_energies: Optional[np.ndarray] = None) -> float:
    """Weighted reciprocal-energy plus distance objective (minimize)."""
    if abs(w.alpha + w.beta - 1.0) > 1e-9:
        raise ValueError("FF1 requires alpha + beta = 1")
    f1, f2 = _gather_terms(a, dep, gateway_energies)
    if f1 <= 0.0:
        raise DegenerateFitnessError("all assigned gateways are depleted (f1 = 0)")
    return w.alpha / f1 + w.beta * f2


def fitness_ff2(a: Assignment, dep: Deployment, w: FitnessWeights,
                gateway_energies: Optional[np.ndarray] = None) -> float:
    """Normalized distance-to-energy ratio objective in [0, 1) (minimize)."""
    f1, f2 = _gather_terms(a, dep, gateway_energies)
    denom = w.alpha * f1 + w.t2
    if denom <= 0.0:
        raise DegenerateFitnessError("non-positive denominator (alpha*f1 + t2 <= 0)")
    raw = (w.beta * f2 + w.t1) / denom
    return raw / (1.0 + raw)


def evaluate_fitness(a: Assignment, dep: Deployment, w: FitnessWeights,
                     gateway_energies: Optional[np.ndarray] = None) -> float:
    if w.form == FF1:
        return fitness_ff1(a, dep, w, gateway_energies)
    return fitness_ff2(a, dep, w, gateway_energies)


class AssignmentObjective:
    """Vectorized GSA objective: decode positions, evaluate the chosen form."""

    def __init__(self, elig: EligibilityMap, dep: Deployment, w: FitnessWeights,
                 gateway_energies: Optional[np.ndarray] = None):
        self.elig = elig
        self.weights = w
        if gateway_energies is None:
            gateway_energies = np.array([g.energy for g in dep.gateways], dtype=float)
        self._gw_energy = np.asarray(gateway_energies, dtype=float)
        gw_xy = dep.gateway_xy
        self._d_g_bs = np.hypot(gw_xy[:, 0] - dep.bs_pos.x, gw_xy[:, 1] - dep.bs_pos.y)
        self._counts = elig.counts
        self._offsets = elig.offsets[:-1]

    def _terms(self, positions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        idx = self._offsets + _decode_indices(positions, self._counts)
        gw = self.elig.flat_gw_index[idx]
        f1 = self._gw_energy[gw].sum(axis=-1)
        f2 = (self.elig.flat_d_hg[idx] + self._d_g_bs[gw]).sum(axis=-1)
        return f1, f2

    def evaluate_batch(self, positions: np.ndarray) -> np.ndarray:
        f1, f2 = self._terms(np.atleast_2d(positions))
        w = self.weights
        if w.form == FF1:
            with np.errstate(divide="ignore"):
                return w.alpha / f1 + w.beta * f2
        denom = w.alpha * f1 + w.t2
        raw = (w.beta * f2 + w.t1) / denom
        out = raw / (1.0 + raw)
        out[denom <= 0.0] = np.inf
        return out

    def __call__(self, position: np.ndarray) -> float:
        return float(self.evaluate_batch(position[None, :])[0])


def assign_heads(
    heads: Sequence[int],
    dep: Deployment,
    w: FitnessWeights,
    gsa_params: Optional[gsa.GsaParams] = None,
    seed: int | np.random.SeedSequence = 0,
    comm_range: float = GATEWAY_RANGE_M,
    gateway_energies: Optional[np.ndarray] = None,
    elig: Optional[EligibilityMap] = None,
) -> tuple[Assignment, float]:
    """Associate each head with one eligible gateway by minimizing the
    chosen fitness with the GSA. Deterministic per seed.

    `gsa_params` supplies the population/schedule settings; its bounds are
    replaced with the per-dimension eligibility ranges [0, l_d).
    """
    if elig is None:
        elig = build_eligibility(heads, dep, comm_range, gateway_energies)
    c = len(elig.head_ids)
    counts = elig.counts.astype(float)
    base = gsa_params or gsa.GsaParams(np.zeros(1), np.ones(1))
    params = gsa.GsaParams(
        lower_bounds=np.zeros(c),
        upper_bounds=counts,
        n_agents=base.n_agents,
        t_max=base.t_max,
        g0=base.g0,
        alpha=base.alpha,
        epsilon=base.epsilon,
    )
    objective = AssignmentObjective(elig, dep, w, gateway_energies)
    result = gsa.optimize(objective, params, seed)
    assignment = decode_agent(result.best_position, elig)
    return assignment, float(result.best_fitness)


def assign_sensors_direct(
    dep: Deployment,
    w: FitnessWeights,
    gsa_params: Optional[gsa.GsaParams] = None,
    seed: int | np.random.SeedSequence = 0,
    gateway_energies: Optional[np.ndarray] = None,
    sensor_energies: Optional[np.ndarray] = None,
) -> tuple[Assignment, float]:
    """Single-level baseline: every alive sensor is its own head and is
    assigned a gateway within the sensor transmission range."""
    if sensor_energies is None:
        alive_ids = [s.id for s in dep.sensors if s.alive]
        comm_range = dep.sensors[0].tx_range if dep.sensors else 0.0
    else:
        sensor_energies = np.asarray(sensor_energies, dtype=float)
        alive_ids = [int(i) for i in dep.sensor_ids[sensor_energies > 0.0]]
        comm_range = dep.sensors[0].tx_range if dep.sensors else 0.0
    return assign_heads(alive_ids, dep, w, gsa_params, seed,
                        comm_range=comm_range, gateway_energies=gateway_energies)


def brute_force_assignment(
    heads: Sequence[int],
    dep: Deployment,
    w: FitnessWeights,
    comm_range: float = GATEWAY_RANGE_M,
    gateway_energies: Optional[np.ndarray] = None,
) -> tuple[Assignment, float]:
    """Exhaustive-enumeration oracle over all eligible assignments.

    Only intended for small instances (product of eligibility-list lengths
    must stay manageable); used to validate the GSA path.
    """
    import itertools

    elig = build_eligibility(heads, dep, comm_range, gateway_energies)
    best: Optional[Assignment] = None
    best_fit = math.inf
    for combo in itertools.product(*(range(len(l)) for l in elig.lists)):
        a = Assignment({h: int(elig.lists[i][combo[i]])
                        for i, h in enumerate(elig.head_ids)})
        fit = evaluate_fitness(a, dep, w, gateway_energies)
        if fit < best_fit:
            best_fit = fit
            best = a
    assert best is not None
    return best, best_fit
