"""Follower problems for a fixed leader decision: Dijkstra and Edmonds-Karp."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from netinterdict.instances import MfiInstance, SpiInstance

EPS = 1e-9
UNREACHABLE = math.inf


@dataclass(frozen=True)
class PathResult:
    length: float
    path: Tuple[int, ...]

    @property
    def reachable(self) -> bool:
        return bool(self.path)


@dataclass(frozen=True)
class FlowResult:
    value: float
    flow: np.ndarray

    def cut_capacity(self) -> float:
        return self.value


def _as_binary(x, m: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x)
    if x.shape != (m,):
        raise ValueError(f"{name} must have length {m}, got shape {x.shape}")
    xb = np.rint(x).astype(np.int64)
    if np.any(np.abs(x - xb) > 1e-6) or np.any((xb != 0) & (xb != 1)):
        raise ValueError(f"{name} must be binary")
    return xb


class SpiEvaluator:
    """Repeated shortest-path evaluation on one instance (adjacency built once)."""

    def __init__(self, inst: SpiInstance):
        self.inst = inst
        self.cost = inst.costs
        self.delay = inst.delays
        self.out: List[List[Tuple[int, int]]] = [[] for _ in range(inst.node_count)]
        for k, (i, j, _, _) in enumerate(inst.edges):
            self.out[i].append((j, k))

    def lengths(self, x) -> np.ndarray:
        return self.cost + self.delay * np.asarray(x, dtype=float)

    def run(self, x) -> PathResult:
        inst = self.inst
        w = self.lengths(x).tolist()
        n = inst.node_count
        dist = [math.inf] * n
        pred = [-1] * n
        done = [False] * n
        dist[inst.source] = 0.0
        heap = [(0.0, inst.source)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            if u == inst.sink:
                break
            for v, k in self.out[u]:
                nd = d + w[k]
                if nd < dist[v] - EPS or (abs(nd - dist[v]) <= EPS and not done[v] and u < pred[v]):
                    dist[v] = nd
                    pred[v] = u
                    heapq.heappush(heap, (nd, v))
        if not done[inst.sink]:
            return PathResult(UNREACHABLE, ())
        path = [inst.sink]
        while path[-1] != inst.source:
            path.append(pred[path[-1]])
        return PathResult(dist[inst.sink], tuple(reversed(path)))


def shortest_path(inst: SpiInstance, x) -> PathResult:
    """Shortest source-sink path under lengths ``c + d * x``."""
    x = _as_binary(x, inst.edge_count)
    return SpiEvaluator(inst).run(x)


def bellman_ford(inst: SpiInstance, x) -> float:
    """Independent O(VE) check for :func:`shortest_path`."""
    w = inst.costs + inst.delays * np.asarray(x, dtype=float)
    dist = np.full(inst.node_count, math.inf)
    dist[inst.source] = 0.0
    for _ in range(inst.node_count - 1):
        changed = False
        for k, (i, j, _, _) in enumerate(inst.edges):
            if dist[i] + w[k] < dist[j]:
                dist[j] = dist[i] + w[k]
                changed = True
        if not changed:
            break
    return float(dist[inst.sink])


def max_flow(inst: MfiInstance, removed) -> FlowResult:
    """Edmonds-Karp max flow with edges flagged in ``removed`` deleted."""
    removed = _as_binary(removed, inst.edge_count, "removed")
    n = inst.node_count
    # residual arcs stored in pairs: 2k forward, 2k+1 backward
    head: List[int] = []
    cap: List[float] = []
    adj: List[List[int]] = [[] for _ in range(n)]
    for k, (i, j, u, _) in enumerate(inst.edges):
        u = 0.0 if removed[k] else u
        adj[i].append(len(head))
        head.append(j)
        cap.append(u)
        adj[j].append(len(head))
        head.append(i)
        cap.append(0.0)
    s, t = inst.source, inst.sink
    value = 0.0
    while True:
        via = [-1] * n
        via[s] = -2
        queue = deque([s])
        while queue and via[t] == -1:
            a = queue.popleft()
            for arc in adj[a]:
                b = head[arc]
                if via[b] == -1 and cap[arc] > EPS:
                    via[b] = arc
                    queue.append(b)
        if via[t] == -1:
            break
        push = math.inf
        v = t
        while v != s:
            arc = via[v]
            push = min(push, cap[arc])
            v = head[arc ^ 1]
        v = t
        while v != s:
            arc = via[v]
            cap[arc] -= push
            cap[arc ^ 1] += push
            v = head[arc ^ 1]
        value += push
    flow = np.array([cap[2 * k + 1] for k in range(inst.edge_count)])
    return FlowResult(value, flow)


def min_cut_brute_force(inst: MfiInstance, removed) -> float:
    """Minimum s-t cut by enumerating every source side; exponential, n <= ~16."""
    removed = np.asarray(removed)
    n = inst.node_count
    others = [v for v in range(n) if v not in (inst.source, inst.sink)]
    best = math.inf
    for mask in range(1 << len(others)):
        side = {inst.source}
        for b, v in enumerate(others):
            if mask >> b & 1:
                side.add(v)
        cut = sum(
            u for k, (i, j, u, _) in enumerate(inst.edges)
            if not removed[k] and i in side and j not in side
        )
        best = min(best, cut)
    return float(best)
