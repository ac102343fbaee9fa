"""Single-level MILP reductions of interdiction instances.

Variables are partitioned into groups: group 0 holds the interdiction
decisions (one binary per edge, in instance edge order); groups 1..p hold
the follower's dual variables. Coefficients are keyed by
``(group_id, index_within_group)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from netinterdict.instances import InstanceError, MfiInstance, SpiInstance

RELATIONS = ("<=", ">=", "=")
TAGS = ("dual", "budget", "other")

Key = Tuple[int, int]


@dataclass(frozen=True)
class Variable:
    name: str
    lb: float
    ub: float
    binary: bool = False
    obj: float = 0.0


@dataclass(frozen=True)
class VarGroup:
    group_id: int
    variables: Tuple[Variable, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        if not self.variables:
            raise ValueError(f"group {self.group_id} is empty")
        if self.group_id == 0 and not all(v.binary for v in self.variables):
            raise ValueError("interdiction group W0 must be all binary")

    def __len__(self):
        return len(self.variables)


@dataclass(frozen=True)
class Constraint:
    coeffs: Tuple[Tuple[Key, float], ...]
    relation: str
    rhs: float
    tag: str = "other"

    def __post_init__(self):
        if isinstance(self.coeffs, dict):
            object.__setattr__(self, "coeffs", tuple(self.coeffs.items()))
        object.__setattr__(
            self, "coeffs", tuple(((int(g), int(j)), float(a)) for (g, j), a in self.coeffs)
        )
        if self.relation not in RELATIONS:
            raise ValueError(f"bad relation {self.relation!r}")
        if self.tag not in TAGS:
            raise ValueError(f"bad tag {self.tag!r}")


@dataclass(frozen=True)
class MilpInstance:
    """``sense`` c^T x subject to rows ``a x (<=|>=|=) b`` and bounds."""

    sense: str
    var_groups: Tuple[VarGroup, ...]
    constraints: Tuple[Constraint, ...]
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "var_groups", tuple(self.var_groups))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be max or min, got {self.sense!r}")
        ids = [g.group_id for g in self.var_groups]
        if ids != list(range(len(ids))):
            raise ValueError(f"group ids must be 0..p in order, got {ids}")
        for row in self.constraints:
            for (g, j), _ in row.coeffs:
                if not (0 <= g < len(ids) and 0 <= j < len(self.var_groups[g])):
                    raise ValueError(f"coefficient references missing variable {(g, j)}")

    @property
    def p(self) -> int:
        return len(self.var_groups) - 1

    @property
    def n_vars(self) -> int:
        return sum(len(g) for g in self.var_groups)

    @property
    def n_interdiction(self) -> int:
        return len(self.var_groups[0])

    def offsets(self) -> List[int]:
        out, acc = [], 0
        for g in self.var_groups:
            out.append(acc)
            acc += len(g)
        return out

    def variables(self) -> List[Variable]:
        return [v for g in self.var_groups for v in g.variables]

    def column(self, key: Key) -> int:
        return self.offsets()[key[0]] + key[1]

    def dense(self):
        """Flatten to ``(c, A, relations, b, lb, ub, integral)`` arrays."""
        off = self.offsets()
        vs = self.variables()
        c = np.array([v.obj for v in vs], dtype=float)
        A = np.zeros((len(self.constraints), len(vs)))
        for r, row in enumerate(self.constraints):
            for (g, j), a in row.coeffs:
                A[r, off[g] + j] += a
        rel = [row.relation for row in self.constraints]
        b = np.array([row.rhs for row in self.constraints], dtype=float)
        lb = np.array([v.lb for v in vs], dtype=float)
        ub = np.array([v.ub for v in vs], dtype=float)
        integral = np.array([v.binary for v in vs], dtype=bool)
        return c, A, rel, b, lb, ub, integral

    def interdiction_part(self, assignment) -> np.ndarray:
        return np.rint(np.asarray(assignment)[: self.n_interdiction]).astype(np.int64)

    def with_group(self, gid: int, group: VarGroup) -> "MilpInstance":
        groups = list(self.var_groups)
        groups[gid] = group
        return replace(self, var_groups=tuple(groups))

    def augment(self, extra_vars: Sequence[Variable], extra_constraints: Iterable[Constraint]):
        """Append ``extra_vars`` as a new group (id p+1) and extra rows.

        Extra rows address the new variables as ``(p + 1, index)``.
        """
        groups = list(self.var_groups)
        if extra_vars:
            groups.append(VarGroup(len(groups), tuple(extra_vars)))
        return MilpInstance(
            self.sense,
            tuple(groups),
            self.constraints + tuple(extra_constraints),
            dict(self.provenance, augmented=True),
        )

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "sense": self.sense,
            "groups": [
                {
                    "id": g.group_id,
                    "variables": [
                        {"name": v.name, "lb": v.lb, "ub": v.ub, "binary": v.binary, "obj": v.obj}
                        for v in g.variables
                    ],
                }
                for g in self.var_groups
            ],
            "constraints": [
                {
                    "coeffs": [[g, j, a] for (g, j), a in row.coeffs],
                    "relation": row.relation,
                    "rhs": row.rhs,
                    "tag": row.tag,
                }
                for row in self.constraints
            ],
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MilpInstance":
        groups = [
            VarGroup(g["id"], tuple(Variable(**v) for v in g["variables"])) for g in d["groups"]
        ]
        rows = [
            Constraint(
                tuple(((g, j), a) for g, j, a in r["coeffs"]), r["relation"], r["rhs"], r["tag"]
            )
            for r in d["constraints"]
        ]
        return cls(d["sense"], tuple(groups), tuple(rows), d.get("provenance", {}))


def _edge_provenance(inst) -> dict:
    return {
        "kind": inst.kind,
        "id": inst.id,
        "edges": [[e[0], e[1]] for e in inst.edges],
        "source": inst.source,
        "sink": inst.sink,
    }


def dualize_spi(inst: SpiInstance) -> MilpInstance:
    """Dualize the follower's shortest-path LP and merge it with the leader.

    max pi_s - pi_t  s.t.  pi_i - pi_j - d_ij x_ij <= c_ij  for every edge,
    sum x <= budget, x binary, pi continuous with pi_t fixed at 0.
    """
    if not isinstance(inst, SpiInstance):
        raise InstanceError("dualize_spi expects an SpiInstance")
    m, n = inst.edge_count, inst.node_count
    bound = float(inst.costs.sum() + inst.delays.sum())
    xs = tuple(
        Variable(f"x_{i}_{j}", 0.0, 1.0, True, 0.0) for i, j, _, _ in inst.edges
    )
    pis = []
    for v in range(n):
        obj = 1.0 if v == inst.source else (-1.0 if v == inst.sink else 0.0)
        if v == inst.sink:
            pis.append(Variable(f"pi_{v}", 0.0, 0.0, False, obj))
        else:
            pis.append(Variable(f"pi_{v}", -bound, bound, False, obj))
    rows = []
    for k, (i, j, c, d) in enumerate(inst.edges):
        coeffs = [((1, i), 1.0), ((1, j), -1.0)]
        if d != 0.0:
            coeffs.append(((0, k), -d))
        rows.append(Constraint(tuple(coeffs), "<=", c, "dual"))
    rows.append(Constraint(tuple(((0, k), 1.0) for k in range(m)), "<=", float(inst.budget), "budget"))
    return MilpInstance(
        "max",
        (VarGroup(0, xs), VarGroup(1, tuple(pis))),
        tuple(rows),
        _edge_provenance(inst),
    )


def build_mfi_milp(inst: MfiInstance) -> MilpInstance:
    """Min-cut style MILP for max-flow interdiction.

    min sum u_ij beta_ij  s.t.  alpha_i - alpha_j + beta_ij + gamma_ij >= 0,
    alpha_t - alpha_s >= 1, sum r_ij gamma_ij <= R, everything binary.
    Group 0 = gamma (removals), group 1 = alpha (nodes), group 2 = beta (cut arcs).
    """
    if not isinstance(inst, MfiInstance):
        raise InstanceError("build_mfi_milp expects an MfiInstance")
    gammas = tuple(Variable(f"gamma_{i}_{j}", 0.0, 1.0, True, 0.0) for i, j, _, _ in inst.edges)
    alphas = tuple(Variable(f"alpha_{v}", 0.0, 1.0, True, 0.0) for v in range(inst.node_count))
    betas = tuple(Variable(f"beta_{i}_{j}", 0.0, 1.0, True, u) for i, j, u, _ in inst.edges)
    rows = []
    for k, (i, j, _, _) in enumerate(inst.edges):
        rows.append(
            Constraint((((1, i), 1.0), ((1, j), -1.0), ((2, k), 1.0), ((0, k), 1.0)), ">=", 0.0, "dual")
        )
    rows.append(Constraint((((1, inst.sink), 1.0), ((1, inst.source), -1.0)), ">=", 1.0, "other"))
    rows.append(
        Constraint(
            tuple(((0, k), r) for k, (_, _, _, r) in enumerate(inst.edges) if r != 0.0) or (((0, 0), 0.0),),
            "<=",
            inst.budget,
            "budget",
        )
    )
    return MilpInstance(
        "min",
        (VarGroup(0, gammas), VarGroup(1, alphas), VarGroup(2, betas)),
        tuple(rows),
        _edge_provenance(inst),
    )


def fix_interdiction(milp: MilpInstance, x) -> MilpInstance:
    """Copy of ``milp`` with every W0 variable clamped to ``x``."""
    x = np.asarray(x)
    if x.shape != (milp.n_interdiction,):
        raise ValueError(f"x must have length {milp.n_interdiction}, got shape {x.shape}")
    g0 = milp.var_groups[0]
    fixed = tuple(replace(v, lb=float(xi), ub=float(xi)) for v, xi in zip(g0.variables, x))
    return milp.with_group(0, VarGroup(0, fixed))


def reduce_instance(inst) -> MilpInstance:
    if isinstance(inst, SpiInstance):
        return dualize_spi(inst)
    if isinstance(inst, MfiInstance):
        return build_mfi_milp(inst)
    raise TypeError(f"unsupported instance type {type(inst).__name__}")
