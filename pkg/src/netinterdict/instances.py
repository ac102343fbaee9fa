"""Interdiction instances, random generators and the 7-node worked example.

Instances are immutable. Edge order is significant: every downstream
structure (MILP group W0, predictions, labels) is aligned to it.

Random generation uses numpy's PCG64 bit generator seeded with the 64-bit
``GenConfig.seed``; draws are made in a fixed order (edge mask, then the
first per-edge attribute, then the second) so that datasets are
reproducible from the config alone. This is recorded in the JSON files as
``"rng": "PCG64"`` next to ``"format_version": 1``.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple, Union

import numpy as np

FORMAT_VERSION = 1
RNG_NAME = "PCG64"
MAX_REGEN_ATTEMPTS = 100

Edge = Tuple[int, int, float, float]


class InstanceError(ValueError):
    """Raised when an instance or generator config violates its invariants."""


def _check_graph(node_count, source, sink, edges):
    if node_count < 2:
        raise InstanceError(f"node_count must be >= 2, got {node_count}")
    if source == sink:
        raise InstanceError("source and sink must differ")
    for v in (source, sink):
        if not 0 <= v < node_count:
            raise InstanceError(f"terminal {v} out of range")
    for e in edges:
        i, j, a, b = e
        if not (0 <= i < node_count and 0 <= j < node_count):
            raise InstanceError(f"edge {e} has endpoint out of range")
        if i == j:
            raise InstanceError(f"self-loop at node {i}")
        if a < 0 or b < 0 or not (np.isfinite(a) and np.isfinite(b)):
            raise InstanceError(f"edge {e} has negative or non-finite attribute")
    if not reachable(node_count, source, sink, edges):
        raise InstanceError("sink is not reachable from source")


def reachable(node_count: int, source: int, sink: int, edges) -> bool:
    adj = [[] for _ in range(node_count)]
    for e in edges:
        adj[e[0]].append(e[1])
    seen = [False] * node_count
    seen[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        if u == sink:
            return True
        for v in adj[u]:
            if not seen[v]:
                seen[v] = True
                queue.append(v)
    return False


def _norm_edges(edges) -> Tuple[Edge, ...]:
    return tuple((int(e[0]), int(e[1]), float(e[2]), float(e[3])) for e in edges)


@dataclass(frozen=True)
class SpiInstance:
    """Shortest-path interdiction: edges are ``(tail, head, cost, delay)``.

    Interdicting edge ``(i, j)`` raises its length from ``cost`` to
    ``cost + delay``; at most ``budget`` edges may be interdicted.
    """

    node_count: int
    source: int
    sink: int
    edges: Tuple[Edge, ...]
    budget: int
    id: Optional[str] = None

    kind = "spi"

    def __post_init__(self):
        object.__setattr__(self, "edges", _norm_edges(self.edges))
        _check_graph(self.node_count, self.source, self.sink, self.edges)
        if int(self.budget) != self.budget or self.budget < 0:
            raise InstanceError(f"SPI budget must be a nonnegative integer, got {self.budget}")
        object.__setattr__(self, "budget", int(self.budget))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def costs(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @property
    def delays(self) -> np.ndarray:
        return np.array([e[3] for e in self.edges], dtype=float)

    def budget_ok(self, x) -> bool:
        return int(np.sum(x)) <= self.budget

    def to_dict(self) -> dict:
        d = {
            "kind": "spi",
            "nodes": self.node_count,
            "source": self.source,
            "sink": self.sink,
            "edges": [list(e) for e in self.edges],
            "budget": self.budget,
            "format_version": FORMAT_VERSION,
        }
        if self.id is not None:
            d["id"] = self.id
        return d


@dataclass(frozen=True)
class MfiInstance:
    """Max-flow interdiction: edges are ``(tail, head, capacity, removal_cost)``.

    The leader removes edges with total removal cost at most ``budget``.
    """

    node_count: int
    source: int
    sink: int
    edges: Tuple[Edge, ...]
    budget: float
    id: Optional[str] = None

    kind = "mfi"

    def __post_init__(self):
        object.__setattr__(self, "edges", _norm_edges(self.edges))
        _check_graph(self.node_count, self.source, self.sink, self.edges)
        if self.budget < 0 or not np.isfinite(self.budget):
            raise InstanceError(f"MFI budget must be finite and >= 0, got {self.budget}")
        object.__setattr__(self, "budget", float(self.budget))

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def capacities(self) -> np.ndarray:
        return np.array([e[2] for e in self.edges], dtype=float)

    @property
    def removal_costs(self) -> np.ndarray:
        return np.array([e[3] for e in self.edges], dtype=float)

    def budget_ok(self, x) -> bool:
        return float(np.dot(self.removal_costs, np.asarray(x, dtype=float))) <= self.budget + 1e-9

    def to_dict(self) -> dict:
        d = {
            "kind": "mfi",
            "nodes": self.node_count,
            "source": self.source,
            "sink": self.sink,
            "edges": [list(e) for e in self.edges],
            "budget": self.budget,
            "format_version": FORMAT_VERSION,
        }
        if self.id is not None:
            d["id"] = self.id
        return d


Instance = Union[SpiInstance, MfiInstance]


def instance_from_dict(d: dict) -> Instance:
    version = d.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise InstanceError(f"unsupported format_version {version}")
    cls = {"spi": SpiInstance, "mfi": MfiInstance}.get(d.get("kind"))
    if cls is None:
        raise InstanceError(f"unknown instance kind {d.get('kind')!r}")
    return cls(
        node_count=d["nodes"],
        source=d["source"],
        sink=d["sink"],
        edges=d["edges"],
        budget=d["budget"],
        id=d.get("id"),
    )


def dumps(inst: Instance) -> str:
    return json.dumps(inst.to_dict(), sort_keys=True)


def loads(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


@dataclass(frozen=True)
class GenConfig:
    """Recipe for random instances.

    ``delay`` selects SPI delays: ``"cost"`` sets d_ij = c_ij, a number sets
    every d_ij to that constant.
    """

    node_count: int
    density: float = 1.0
    cost_range: Tuple[float, float] = (1.0, 10.0)
    capacity_range: Tuple[float, float] = (10.0, 60.0)
    delay: Union[str, float] = "cost"
    budget: float = 15
    seed: int = 0

    def __post_init__(self):
        if self.node_count < 2:
            raise InstanceError(f"node_count must be >= 2, got {self.node_count}")
        if not 0.0 < self.density <= 1.0:
            raise InstanceError(f"density must lie in (0, 1], got {self.density}")
        for name in ("cost_range", "capacity_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise InstanceError(f"{name}: lo > hi ({lo} > {hi})")
            if lo < 0:
                raise InstanceError(f"{name}: negative lower bound")
        if isinstance(self.delay, str) and self.delay != "cost":
            raise InstanceError(f"unknown delay policy {self.delay!r}")
        if not isinstance(self.delay, str) and self.delay < 0:
            raise InstanceError("constant delay must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise InstanceError("seed must be a 64-bit unsigned integer")
        if self.budget < 0:
            raise InstanceError("budget must be >= 0")


def _random_arcs(cfg: GenConfig, rng: np.random.Generator):
    n = cfg.node_count
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    for _ in range(MAX_REGEN_ATTEMPTS):
        if cfg.density >= 1.0:
            arcs = pairs
        else:
            keep = rng.random(len(pairs)) < cfg.density
            arcs = [p for p, k in zip(pairs, keep) if k]
        if arcs and reachable(n, 0, n - 1, [(i, j, 0.0, 0.0) for i, j in arcs]):
            return arcs
    raise InstanceError(
        f"no source-sink path after {MAX_REGEN_ATTEMPTS} attempts (density={cfg.density})"
    )


def generate_spi(cfg: GenConfig, id: Optional[str] = None) -> SpiInstance:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    arcs = _random_arcs(cfg, rng)
    lo, hi = cfg.cost_range
    costs = rng.uniform(lo, hi, size=len(arcs))
    if cfg.delay == "cost":
        delays = costs.copy()
    else:
        delays = np.full(len(arcs), float(cfg.delay))
    edges = [(i, j, float(c), float(d)) for (i, j), c, d in zip(arcs, costs, delays)]
    return SpiInstance(cfg.node_count, 0, cfg.node_count - 1, edges, int(cfg.budget), id=id)


def generate_mfi(cfg: GenConfig, id: Optional[str] = None) -> MfiInstance:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    arcs = _random_arcs(cfg, rng)
    lo, hi = cfg.capacity_range
    caps = rng.uniform(lo, hi, size=len(arcs))
    lo, hi = cfg.cost_range
    removal = rng.uniform(lo, hi, size=len(arcs))
    edges = [(i, j, float(u), float(r)) for (i, j), u, r in zip(arcs, caps, removal)]
    return MfiInstance(cfg.node_count, 0, cfg.node_count - 1, edges, float(cfg.budget), id=id)


def worked_example_spi() -> SpiInstance:
    """The 7-node, 12-edge instance whose reduced MILP has constraints v1..v13.

    Source 0, sink 6, one interdiction, every delay equal to 1.
    """
    arcs = [
        (0, 1, 9), (0, 4, 3), (0, 3, 3), (1, 2, 4), (1, 3, 1), (4, 3, 2),
        (4, 5, 3), (3, 2, 8), (3, 6, 4), (3, 5, 6), (2, 6, 5), (5, 6, 4),
    ]
    return SpiInstance(7, 0, 6, [(i, j, c, 1.0) for i, j, c in arcs], 1, id="worked")


def permute_edges(inst: Instance, order: Sequence[int]) -> Instance:
    """Same instance with its edge list reordered (``new[k] = old[order[k]]``)."""
    edges = [inst.edges[k] for k in order]
    return type(inst)(inst.node_count, inst.source, inst.sink, edges, inst.budget, id=inst.id)
