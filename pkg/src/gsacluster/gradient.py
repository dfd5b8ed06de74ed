"""First-level energy-gradient clustering.

Each alive sensor parents the in-range neighbor with the greatest residual
energy, so residual energy is non-decreasing along every member-to-head
chain and local energy maxima become cluster heads. Two modes:

* GRADIENT ("GC"): equal-energy plateaus merge. A connected set of local
  maxima with exactly equal energy forms one cluster, headed by its
  lowest-id node, with the remaining plateau nodes chaining to it.
* WATERSHED ("WA"): plateaus split. A sensor whose best neighbor is within
  the relative tolerance `tau` of its own energy becomes its own head, so
  near-flat regions produce one head per sensor.

Both modes are pure functions of the deployment snapshot (plus an optional
residual-energy override supplied by the simulation engine).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .netmodel import Deployment, sensor_adjacency

GRADIENT = "GC"
WATERSHED = "WA"

DEFAULT_PLATEAU_TOL = 0.01  # relative: neighbors within 1% count as a plateau

NO_PARENT = -1


@dataclass
class ClusterSet:
    """First-level clustering forest over the alive sensors.

    parent maps sensor id -> parent sensor id, or None for cluster heads.
    members maps head id -> all sensor ids in its cluster (head included).
    """

    parent: dict[int, Optional[int]]
    heads: list[int]
    members: dict[int, list[int]]
    mode: str

    def to_json(self) -> str:
        doc = {
            "mode": self.mode,
            "heads": sorted(self.heads),
            "parent": {str(k): v for k, v in sorted(self.parent.items())},
        }
        return json.dumps(doc, sort_keys=True)


def _segment_best(indptr: np.ndarray, nbr: np.ndarray, values: np.ndarray,
                  eligible: np.ndarray) -> np.ndarray:
    """Per CSR row: the neighbor index with maximal value among eligible
    entries, ties broken by the smallest neighbor index; -1 if none."""
    n = len(indptr) - 1
    out = np.full(n, NO_PARENT, dtype=np.int64)
    if len(nbr) == 0:
        return out
    vals = np.where(eligible, values, -np.inf)
    starts = np.minimum(indptr[:-1], len(nbr) - 1)
    segmax = np.maximum.reduceat(vals, starts)
    empty = indptr[:-1] == indptr[1:]
    segmax[empty] = -np.inf
    seg = np.repeat(np.arange(n), np.diff(indptr))
    is_best = eligible & (vals == segmax[seg])
    cand = np.where(is_best, nbr, np.iinfo(np.int64).max)
    best_id = np.minimum.reduceat(cand, starts)
    has = ~empty & np.isfinite(segmax)
    out[has] = best_id[has]
    return out


def _resolve_plateaus(indptr: np.ndarray, indices: np.ndarray, energy: np.ndarray,
                      alive: np.ndarray, parent: np.ndarray) -> np.ndarray:
    """Merge connected equal-energy local maxima into single clusters.

    Summit nodes (alive, no strictly-greater alive neighbor) that are
    adjacent with exactly equal energy form one cluster: the lowest id
    becomes the head and the rest chain to it along a BFS tree.
    """
    n = len(parent)
    summit = alive & (parent == NO_PARENT)
    if not summit.any():
        return parent
    seg = np.repeat(np.arange(n), np.diff(indptr))
    edge = summit[seg] & summit[indices] & (energy[seg] == energy[indices])
    if not edge.any():
        return parent
    rows, cols = seg[edge], indices[edge]
    sub = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    n_comp, labels = connected_components(sub, directed=False)
    # Restrict to components that actually contain plateau edges.
    touched = np.unique(rows)
    for comp in np.unique(labels[touched]):
        nodes = np.flatnonzero((labels == comp) & summit)
        if len(nodes) < 2:
            continue
        root = int(nodes.min())
        order, preds = breadth_first_order(sub, root, directed=False,
                                           return_predecessors=True)
        for u in order:
            if u != root:
                parent[u] = preds[u]
    return parent


def build_clusters(
    dep: Deployment,
    mode: str,
    energies: Optional[np.ndarray] = None,
    tau: float = DEFAULT_PLATEAU_TOL,
    adjacency: Optional[tuple[np.ndarray, np.ndarray]] = None,
) -> ClusterSet:
    """Cluster the alive sensors by steepest residual-energy ascent.

    `energies` overrides the deployment's per-sensor energies (same order
    as dep.sensors); `adjacency` accepts a precomputed sensor_adjacency()
    result so repeated re-clustering does not rebuild the KD-tree.
    """
    if mode not in (GRADIENT, WATERSHED):
        raise ValueError(f"unknown clustering mode {mode!r}")
    n = len(dep.sensors)
    if energies is None:
        energies = np.array([s.energy for s in dep.sensors], dtype=float)
    else:
        energies = np.asarray(energies, dtype=float)
        if energies.shape != (n,):
            raise ValueError("energies must have one entry per sensor")
    if adjacency is None:
        adjacency = sensor_adjacency(dep)
    indptr, indices = adjacency
    alive = energies > 0.0

    seg = np.repeat(np.arange(n), np.diff(indptr))
    nbr_alive = alive[indices]
    if mode == GRADIENT:
        eligible = nbr_alive & (energies[indices] > energies[seg])
    else:
        eligible = nbr_alive & (energies[indices] > energies[seg] * (1.0 + tau))

    parent_idx = _segment_best(indptr, indices, energies[indices], eligible)
    parent_idx[~alive] = NO_PARENT
    if mode == GRADIENT:
        parent_idx = _resolve_plateaus(indptr, indices, energies, alive, parent_idx)

    # Resolve cluster roots by following parents (forest is acyclic: parent
    # energy strictly increases except on plateau BFS edges, which point
    # toward a fixed root).
    root = parent_idx.copy()
    root[root == NO_PARENT] = np.flatnonzero(root == NO_PARENT)
    while True:
        nxt = root[root]
        if np.array_equal(nxt, root):
            break
        root = nxt

    sensor_ids = dep.sensor_ids
    parent: dict[int, Optional[int]] = {}
    members: dict[int, list[int]] = {}
    heads: list[int] = []
    for i in np.flatnonzero(alive):
        sid = int(sensor_ids[i])
        p = parent_idx[i]
        parent[sid] = int(sensor_ids[p]) if p != NO_PARENT else None
        if p == NO_PARENT:
            heads.append(sid)
    for i in np.flatnonzero(alive):
        members.setdefault(int(sensor_ids[root[i]]), []).append(int(sensor_ids[i]))
    return ClusterSet(parent, sorted(heads), members, mode)


def cluster_count_comparison(dep: Deployment,
                             energies: Optional[np.ndarray] = None,
                             tau: float = DEFAULT_PLATEAU_TOL) -> tuple[int, int]:
    """Head counts of both modes on identical input: (gradient, watershed)."""
    adjacency = sensor_adjacency(dep)
    gc = build_clusters(dep, GRADIENT, energies=energies, tau=tau, adjacency=adjacency)
    wa = build_clusters(dep, WATERSHED, energies=energies, tau=tau, adjacency=adjacency)
    return len(gc.heads), len(wa.heads)
