"""Exhaustive interdiction oracles and the oracle-vs-MILP cross check."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from math import comb
from typing import List, Optional

import numpy as np

from netinterdict.inner import SpiEvaluator, max_flow
from netinterdict.instances import Instance, MfiInstance, SpiInstance
from netinterdict.milp import OPTIMAL, SolverConfig, solve_milp
from netinterdict.reduction import MilpInstance, reduce_instance

ENUM_LIMIT = 10**7
TIE_TOL = 1e-9


class EnumerationTooLarge(RuntimeError):
    """The candidate set exceeds the guard; label with ``solve_milp`` instead."""


@dataclass
class OracleResult:
    best_x: np.ndarray
    value: float
    evaluated_count: int
    all_optima: List[np.ndarray] = field(default_factory=list)

    @property
    def n_optima(self) -> int:
        return len(self.all_optima)


def _finish(m, cands, values, maximize) -> OracleResult:
    values = np.asarray(values)
    best = values.max() if maximize else values.min()
    optima = []
    for support, v in zip(cands, values):
        if abs(v - best) <= TIE_TOL:
            x = np.zeros(m, dtype=np.int64)
            x[list(support)] = 1
            optima.append(x)
    # lexicographically smallest vector is the label
    optima.sort(key=lambda x: tuple(x))
    return OracleResult(optima[0], float(best), len(values), optima)


def spi_candidate_count(inst: SpiInstance) -> int:
    m = inst.edge_count
    return sum(comb(m, k) for k in range(min(inst.budget, m) + 1))


def brute_force_spi(inst: SpiInstance, limit: int = ENUM_LIMIT) -> OracleResult:
    """Maximize the shortest path over every x with sum(x) <= budget."""
    count = spi_candidate_count(inst)
    if count > limit:
        raise EnumerationTooLarge(f"{count} candidates exceed the limit {limit}")
    m = inst.edge_count
    ev = SpiEvaluator(inst)
    cands, values = [], []
    x = np.zeros(m)
    for k in range(min(inst.budget, m) + 1):
        for support in itertools.combinations(range(m), k):
            x[:] = 0.0
            x[list(support)] = 1.0
            cands.append(support)
            values.append(ev.run(x).length)
    return _finish(m, cands, values, maximize=True)


def _mfi_supports(inst: MfiInstance):
    r = inst.removal_costs
    m = inst.edge_count
    budget = inst.budget + TIE_TOL

    def rec(start, spent, chosen):
        yield tuple(chosen)
        for k in range(start, m):
            if spent + r[k] <= budget:
                chosen.append(k)
                yield from rec(k + 1, spent + r[k], chosen)
                chosen.pop()

    return rec(0, 0.0, [])


def mfi_candidate_bound(inst: MfiInstance) -> int:
    """Upper bound on feasible removal sets (by the cheapest-k cardinality cap)."""
    r = np.sort(inst.removal_costs)
    kmax = int(np.searchsorted(np.cumsum(r), inst.budget + TIE_TOL, side="right"))
    m = inst.edge_count
    return sum(comb(m, k) for k in range(kmax + 1))


def brute_force_mfi(inst: MfiInstance, limit: int = ENUM_LIMIT) -> OracleResult:
    """Minimize the max flow over every removal set within the budget."""
    bound = mfi_candidate_bound(inst)
    if bound > limit:
        raise EnumerationTooLarge(f"up to {bound} candidates exceed the limit {limit}")
    m = inst.edge_count
    cands, values = [], []
    removed = np.zeros(m, dtype=np.int64)
    for support in _mfi_supports(inst):
        removed[:] = 0
        removed[list(support)] = 1
        cands.append(support)
        values.append(max_flow(inst, removed).value)
    return _finish(m, cands, values, maximize=False)


def brute_force(inst: Instance, limit: int = ENUM_LIMIT) -> OracleResult:
    if isinstance(inst, SpiInstance):
        return brute_force_spi(inst, limit)
    return brute_force_mfi(inst, limit)


def interdiction_value(inst: Instance, x) -> float:
    """Follower optimum under leader decision ``x``."""
    x = np.asarray(x)
    if isinstance(inst, SpiInstance):
        return SpiEvaluator(inst).run(x).length
    return max_flow(inst, x).value


@dataclass
class CrossCheckReport:
    passed: bool
    oracle_value: float
    milp_value: float
    milp_x: Optional[np.ndarray]
    milp_x_value: float
    budget_ok: bool
    oracle_x: np.ndarray
    messages: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "oracle_value": self.oracle_value,
            "milp_value": self.milp_value,
            "milp_x": None if self.milp_x is None else self.milp_x.tolist(),
            "milp_x_value": self.milp_x_value,
            "budget_ok": self.budget_ok,
            "oracle_x": self.oracle_x.tolist(),
            "messages": self.messages,
        }


def cross_check(
    inst: Instance,
    milp: Optional[MilpInstance] = None,
    cfg: Optional[SolverConfig] = None,
    tol: float = 1e-6,
) -> CrossCheckReport:
    """Compare the brute-force optimum with branch-and-bound on the reduced MILP.

    Passes when both values agree within ``tol`` and the MILP's interdiction
    part is budget-feasible and re-evaluates to the same value.
    """
    oracle = brute_force(inst)
    milp = milp if milp is not None else reduce_instance(inst)
    sol = solve_milp(milp, cfg)
    msgs = []
    if sol.status != OPTIMAL:
        msgs.append(f"solver status {sol.status}")
        return CrossCheckReport(
            False, oracle.value, sol.value, None, math.nan, False, oracle.best_x, msgs
        )
    x = milp.interdiction_part(sol.x)
    budget_ok = inst.budget_ok(x)
    x_value = interdiction_value(inst, x)
    if abs(sol.value - oracle.value) > tol:
        msgs.append(f"value mismatch: oracle {oracle.value!r} vs milp {sol.value!r}")
    if not budget_ok:
        msgs.append("milp interdiction violates the budget")
    if abs(x_value - oracle.value) > tol:
        msgs.append(f"milp interdiction evaluates to {x_value!r}, oracle optimum {oracle.value!r}")
    return CrossCheckReport(
        not msgs, oracle.value, sol.value, x, x_value, budget_ok, oracle.best_x, msgs
    )


def label_record(inst: Instance, method: str = "oracle", cfg: Optional[SolverConfig] = None) -> dict:
    """One JSONL label line: optimal value and the characteristic vector of one optimum."""
    if method == "oracle":
        res = brute_force(inst)
        value, x, n_opt = res.value, res.best_x, res.n_optima
    elif method == "milp":
        milp = reduce_instance(inst)
        sol = solve_milp(milp, cfg)
        if sol.status != OPTIMAL:
            raise RuntimeError(f"MILP labeling did not reach optimality ({sol.status})")
        x = milp.interdiction_part(sol.x)
        value = interdiction_value(inst, x)
        n_opt = None
    else:
        raise ValueError(f"unknown labeling method {method!r}")
    return {
        "instance": inst.id,
        "optimal_value": float(value),
        "label_x": [int(v) for v in x],
        "n_optima": n_opt,
    }


def dumps_label(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True)
