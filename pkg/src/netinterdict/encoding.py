"""Multipartite MILP graphs and their Weisfeiler-Lehman color refinement.

A graph has variable groups W_0..W_p (one per MILP variable group) and one
constraint group V. Edges only join a variable vertex to a constraint
vertex and carry the constraint coefficient as weight.

Vertex features
    variables:   [obj, lb, ub, is_binary, degree] + r random columns
    constraints: [rhs, relation (-1 <=, 0 =, +1 >=), tag (dual 0, budget 1,
                 other 2), degree] + r random columns

Random columns are i.i.d. uniform[0, 1) from PCG64(seed), drawn group by
group (W_0, ..., W_p, then V).
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from netinterdict.reduction import MilpInstance

VAR_BASE_FEATURES = 5
CON_BASE_FEATURES = 4
RELATION_CODE = {"<=": -1.0, "=": 0.0, ">=": 1.0}
TAG_CODE = {"dual": 0.0, "budget": 1.0, "other": 2.0}


@dataclass
class MmilpGraph:
    """Feature matrices per group plus per-group edge arrays.

    ``edge_con[k][e]``, ``edge_var[k][e]`` and ``edge_w[k][e]`` describe the
    e-th edge between constraint vertex and vertex of variable group k.
    """

    var_feats: List[np.ndarray]
    con_feats: np.ndarray
    edge_con: List[np.ndarray]
    edge_var: List[np.ndarray]
    edge_w: List[np.ndarray]
    random_dim: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def n_groups(self) -> int:
        return len(self.var_feats)

    @property
    def group_sizes(self) -> List[int]:
        return [f.shape[0] for f in self.var_feats]

    @property
    def n_constraints(self) -> int:
        return self.con_feats.shape[0]

    @property
    def n_edges(self) -> int:
        return int(sum(len(w) for w in self.edge_w))

    @property
    def var_dim(self) -> int:
        return self.var_feats[0].shape[1]

    @property
    def con_dim(self) -> int:
        return self.con_feats.shape[1]

    def edges(self) -> List[Tuple[int, int, int, float]]:
        """All edges as ``(group k, variable j, constraint i, weight)``."""
        out = []
        for k in range(self.n_groups):
            for i, j, w in zip(self.edge_con[k], self.edge_var[k], self.edge_w[k]):
                out.append((k, int(j), int(i), float(w)))
        return out

    def equals(self, other: "MmilpGraph") -> bool:
        if self.n_groups != other.n_groups:
            return False
        if not np.array_equal(self.con_feats, other.con_feats):
            return False
        for k in range(self.n_groups):
            if not np.array_equal(self.var_feats[k], other.var_feats[k]):
                return False
        return sorted(self.edges()) == sorted(other.edges())

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "random_dim": self.random_dim,
            "var_feats": [f.tolist() for f in self.var_feats],
            "con_feats": self.con_feats.tolist(),
            "edges": [list(e) for e in self.edges()],
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_graph(milp: MilpInstance, random_dim: int = 0, seed: int = 0) -> MmilpGraph:
    p1 = len(milp.var_groups)
    m = len(milp.constraints)
    edge_con = [[] for _ in range(p1)]
    edge_var = [[] for _ in range(p1)]
    edge_w = [[] for _ in range(p1)]
    var_deg = [np.zeros(len(g)) for g in milp.var_groups]
    con_deg = np.zeros(m)
    for i, row in enumerate(milp.constraints):
        for (g, j), a in row.coeffs:
            if a == 0.0:
                continue
            edge_con[g].append(i)
            edge_var[g].append(j)
            edge_w[g].append(a)
            var_deg[g][j] += 1
            con_deg[i] += 1
    rng = np.random.Generator(np.random.PCG64(seed))
    var_feats = []
    for g, grp in enumerate(milp.var_groups):
        base = np.array(
            [[v.obj, v.lb, v.ub, 1.0 if v.binary else 0.0, d] for v, d in zip(grp.variables, var_deg[g])],
            dtype=float,
        )
        rand = rng.random((len(grp), random_dim))
        var_feats.append(np.hstack([base, rand]))
    base = np.array(
        [
            [row.rhs, RELATION_CODE[row.relation], TAG_CODE[row.tag], d]
            for row, d in zip(milp.constraints, con_deg)
        ],
        dtype=float,
    ).reshape(m, CON_BASE_FEATURES)
    con_feats = np.hstack([base, rng.random((m, random_dim))])
    return MmilpGraph(
        var_feats,
        con_feats,
        [np.array(e, dtype=np.int64) for e in edge_con],
        [np.array(e, dtype=np.int64) for e in edge_var],
        [np.array(e, dtype=float) for e in edge_w],
        random_dim,
        {"sense": milp.sense, "id": milp.provenance.get("id")},
    )


def _check_perm(perm, n):
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError(f"not a permutation of 0..{n - 1}")
    return perm


def permute_graph(
    g: MmilpGraph, var_perms: Sequence[Sequence[int]], con_perm: Sequence[int]
) -> MmilpGraph:
    """Relabel vertices: vertex ``old`` of group k becomes ``var_perms[k][old]``."""
    if len(var_perms) != g.n_groups:
        raise ValueError("need one permutation per variable group")
    vps = [_check_perm(pm, n) for pm, n in zip(var_perms, g.group_sizes)]
    cp = _check_perm(con_perm, g.n_constraints)
    var_feats = []
    for f, pm in zip(g.var_feats, vps):
        out = np.empty_like(f)
        out[pm] = f
        var_feats.append(out)
    con_feats = np.empty_like(g.con_feats)
    con_feats[cp] = g.con_feats
    return MmilpGraph(
        var_feats,
        con_feats,
        [cp[ec] for ec in g.edge_con],
        [pm[ev] for pm, ev in zip(vps, g.edge_var)],
        [w.copy() for w in g.edge_w],
        g.random_dim,
        dict(g.meta),
    )


def random_permutations(g: MmilpGraph, rng: np.random.Generator):
    return [rng.permutation(n) for n in g.group_sizes], rng.permutation(g.n_constraints)


# ---------------------------------------------------------------------------
# color refinement


def _wstr(w: float) -> str:
    return f"{round(float(w), 9) + 0.0:.9f}"


class Palette:
    """Interns color keys to integers; share one palette to compare graphs."""

    def __init__(self):
        self.colors: Dict[tuple, int] = {}

    def __call__(self, key: tuple) -> int:
        c = self.colors.get(key)
        if c is None:
            c = self.colors[key] = len(self.colors)
        return c


@dataclass
class ColorRefinement:
    """``history[l] = (var_colors per group, con_colors)`` for l = 0..L."""

    history: List[Tuple[List[np.ndarray], np.ndarray]]

    @property
    def rounds(self) -> int:
        return len(self.history) - 1

    def final(self):
        return self.history[-1]

    def multisets(self, l: Optional[int] = None):
        var_c, con_c = self.history[-1 if l is None else l]
        return [Counter(v.tolist()) for v in var_c], Counter(con_c.tolist())

    def partition_sizes(self) -> List[Tuple[List[int], int]]:
        return [
            ([len(set(v.tolist())) for v in var_c], len(set(con_c.tolist())))
            for var_c, con_c in self.history
        ]

    def report(self) -> str:
        lines = []
        for l, (var_sizes, con_size) in enumerate(self.partition_sizes()):
            groups = " ".join(f"W{k}={s}" for k, s in enumerate(var_sizes))
            lines.append(f"round {l}: {groups} V={con_size}")
        return "\n".join(lines)


def _neighbors(g: MmilpGraph):
    con_nb = [[[] for _ in range(g.n_groups)] for _ in range(g.n_constraints)]
    var_nb = [[[] for _ in range(n)] for n in g.group_sizes]
    for k in range(g.n_groups):
        for i, j, w in zip(g.edge_con[k], g.edge_var[k], g.edge_w[k]):
            ws = _wstr(w)
            con_nb[i][k].append((ws, int(j)))
            var_nb[k][j].append((ws, int(i)))
    return con_nb, var_nb


def refine(g: MmilpGraph, rounds: int, palette: Optional[Palette] = None) -> ColorRefinement:
    """Run ``rounds`` iterations of multipartite WL refinement.

    A vertex's new color interns (its previous color, and per neighboring
    group the sorted multiset of (weight, neighbor color) pairs); colors of
    round l depend only on round l-1.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    pal = palette if palette is not None else Palette()
    var_c = [
        np.array([pal(("W", k, row.tobytes())) for row in f], dtype=np.int64)
        for k, f in enumerate(g.var_feats)
    ]
    con_c = np.array([pal(("V", row.tobytes())) for row in g.con_feats], dtype=np.int64)
    history = [(var_c, con_c)]
    con_nb, var_nb = _neighbors(g)
    for _ in range(rounds):
        new_con = np.array(
            [
                pal((
                    "V",
                    int(con_c[i]),
                    tuple(
                        tuple(sorted((ws, int(var_c[k][j])) for ws, j in con_nb[i][k]))
                        for k in range(g.n_groups)
                    ),
                ))
                for i in range(g.n_constraints)
            ],
            dtype=np.int64,
        )
        new_var = [
            np.array(
                [
                    pal(("W", k, int(var_c[k][j]), tuple(sorted((ws, int(con_c[i])) for ws, i in var_nb[k][j]))))
                    for j in range(n)
                ],
                dtype=np.int64,
            )
            for k, n in enumerate(g.group_sizes)
        ]
        var_c, con_c = new_var, new_con
        history.append((var_c, con_c))
    return ColorRefinement(history)


def _n_classes(state) -> int:
    var_c, con_c = state
    return sum(len(set(v.tolist())) for v in var_c) + len(set(con_c.tolist()))


def refine_to_stable(g: MmilpGraph, palette: Optional[Palette] = None) -> ColorRefinement:
    """Refine until the partition stops splitting (at most total-vertex-count rounds)."""
    total = sum(g.group_sizes) + g.n_constraints
    res = refine(g, max(total, 1), palette)
    for l in range(1, len(res.history)):
        if _n_classes(res.history[l]) == _n_classes(res.history[l - 1]):
            return ColorRefinement(res.history[: l + 1])
    return res


def distinguishable(g1: MmilpGraph, g2: MmilpGraph, rounds: int) -> bool:
    """True iff some group's final color multiset differs between the graphs."""
    if g1.group_sizes != g2.group_sizes or g1.n_constraints != g2.n_constraints:
        # different vertex counts already differ as multisets
        return True
    pal = Palette()
    r1 = refine(g1, rounds, pal)
    r2 = refine(g2, rounds, pal)
    v1, c1 = r1.multisets()
    v2, c2 = r2.multisets()
    return c1 != c2 or any(a != b for a, b in zip(v1, v2))


def is_refinement(fine: np.ndarray, coarse: np.ndarray) -> bool:
    """Every class of ``fine`` sits inside a single class of ``coarse``."""
    seen: Dict[int, int] = {}
    for f, c in zip(fine.tolist(), coarse.tolist()):
        if seen.setdefault(f, c) != c:
            return False
    return True
