"""From predicted interdiction probabilities to feasible decisions, and metrics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from netinterdict.instances import Instance, MfiInstance, SpiInstance
from netinterdict.milp import MilpSolution, SolverConfig, solve_milp, solve_milp_with_extra
from netinterdict.oracle import interdiction_value
from netinterdict.reduction import Constraint, MilpInstance, Variable


@dataclass
class InterdictionSolution:
    x: np.ndarray
    value: float
    source: str = "model"


def _desc_order(pred) -> np.ndarray:
    pred = np.asarray(pred, dtype=float)
    # descending probability, lower index first on ties
    return np.lexsort((np.arange(len(pred)), -pred))


def end_to_end(pred, inst: Instance, source: str = "model") -> InterdictionSolution:
    """Interdict the most probable edges that fit the budget.

    Cardinality budgets take the top-``budget`` edges; weighted budgets add
    edges greedily in descending probability while the removal cost fits.
    """
    pred = np.asarray(pred, dtype=float)
    if pred.shape != (inst.edge_count,):
        raise ValueError(f"prediction length {pred.shape} != edge count {inst.edge_count}")
    x = np.zeros(inst.edge_count, dtype=np.int64)
    order = _desc_order(pred)
    if isinstance(inst, SpiInstance):
        x[order[: inst.budget]] = 1
    else:
        r = inst.removal_costs
        spent = 0.0
        for k in order:
            if spent + r[k] <= inst.budget + 1e-9:
                x[k] = 1
                spent += r[k]
    return InterdictionSolution(x, interdiction_value(inst, x), source)


@dataclass(frozen=True)
class PnsConfig:
    k0: int
    k1: int
    delta: int

    def validate(self, n: int):
        if min(self.k0, self.k1, self.delta) < 0:
            raise ValueError("k0, k1 and delta must be >= 0")
        if self.k0 + self.k1 > n:
            raise ValueError(f"k0 + k1 = {self.k0 + self.k1} exceeds |W0| = {n}")


def trust_region_sets(pred, k0: int, k1: int) -> Tuple[List[int], List[int]]:
    """Indices fixed toward 0 (``I0``) and toward 1 (``I1``); I1 wins overlaps."""
    pred = np.asarray(pred, dtype=float)
    idx = np.arange(len(pred))
    i1 = [int(k) for k in np.lexsort((idx, -pred))[:k1]]
    taken = set(i1)
    i0 = [int(k) for k in np.lexsort((idx, pred)) if int(k) not in taken][:k0]
    return i0, i1


def trust_region_extras(milp: MilpInstance, pred, cfg: PnsConfig):
    """Binary deltas, one per fixed index, and the rows bounding violations by delta."""
    cfg.validate(milp.n_interdiction)
    i0, i1 = trust_region_sets(pred, cfg.k0, cfg.k1)
    aux = len(milp.var_groups)
    extra_vars, rows = [], []
    for d in i0 + i1:
        t = len(extra_vars)
        extra_vars.append(Variable(f"delta_{d}", 0.0, 1.0, True, 0.0))
        if d in i0:
            rows.append(Constraint((((0, d), 1.0), ((aux, t), -1.0)), "<=", 0.0, "other"))
        else:
            rows.append(Constraint((((0, d), -1.0), ((aux, t), -1.0)), "<=", -1.0, "other"))
    if extra_vars:
        rows.append(
            Constraint(tuple(((aux, t), 1.0) for t in range(len(extra_vars))), "<=", float(cfg.delta), "other")
        )
    return extra_vars, rows


def predict_and_search(
    pred, milp: MilpInstance, cfg: PnsConfig, solver_cfg: Optional[SolverConfig] = None
) -> MilpSolution:
    """Solve ``milp`` restricted to the trust region around the prediction."""
    extra_vars, rows = trust_region_extras(milp, pred, cfg)
    return solve_milp_with_extra(milp, extra_vars, rows, solver_cfg)


# ---------------------------------------------------------------------------
# evaluation


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    vals = [v for v in values if not math.isnan(v)]
    if not vals:
        return math.nan, math.nan
    mean = math.fsum(vals) / len(vals)
    var = math.fsum((v - mean) ** 2 for v in vals) / len(vals)
    return mean, math.sqrt(var)


@dataclass
class EvalReport:
    """Per-instance rows and aggregates for one strategy.

    ratio = achieved / optimal: higher is better for SPI (<= 1), lower is
    better for MFI (>= 1). gap = |achieved - optimal|. Instances with a zero
    optimum contribute to the gap only.
    """

    strategy: str
    rows: List[dict] = field(default_factory=list)

    def aggregate(self) -> dict:
        ratio = _mean_std([r["ratio"] for r in self.rows])
        gap = _mean_std([r["gap"] for r in self.rows])
        return {
            "strategy": self.strategy,
            "n": len(self.rows),
            "ratio_mean": ratio[0],
            "ratio_std": ratio[1],
            "gap_mean": gap[0],
            "gap_std": gap[1],
        }

    def to_dict(self) -> dict:
        return {"aggregate": self.aggregate(), "rows": self.rows}

    def rows_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["strategy", "instance", "predicted", "optimal", "ratio", "gap"])
        for r in self.rows:
            w.writerow([self.strategy, r["instance"], r["predicted"], r["optimal"], r["ratio"], r["gap"]])
        return buf.getvalue()


Strategy = Callable[[Instance], np.ndarray]


def evaluate(
    dataset: Sequence[Tuple[Instance, float]], strategies: Mapping[str, Strategy]
) -> Dict[str, EvalReport]:
    """Score every strategy's interdiction against the known optimum."""
    reports = {}
    for name, strategy in strategies.items():
        rep = EvalReport(name)
        for n, (inst, opt) in enumerate(dataset):
            x = np.asarray(strategy(inst))
            if not inst.budget_ok(x):
                raise ValueError(f"strategy {name!r} violated the budget on instance {inst.id or n}")
            got = interdiction_value(inst, x)
            ratio = got / opt if opt != 0 else math.nan
            rep.rows.append(
                {
                    "instance": inst.id if inst.id is not None else n,
                    "predicted": float(got),
                    "optimal": float(opt),
                    "ratio": float(ratio),
                    "gap": float(abs(got - opt)),
                }
            )
        reports[name] = rep
    return reports


def model_strategy(model, graph_of: Callable[[Instance], object]) -> Strategy:
    from netinterdict.gnn import forward

    def run(inst):
        return end_to_end(forward(model, graph_of(inst)), inst).x

    return run


def random_strategy(seed: int) -> Strategy:
    """Top-k on i.i.d. uniform scores; seeded per instance position."""
    rng = np.random.Generator(np.random.PCG64(seed))

    def run(inst):
        return end_to_end(rng.random(inst.edge_count), inst, "random").x

    return run


@dataclass
class AnytimeComparison:
    plain: MilpSolution
    guided: MilpSolution

    def first_incumbents(self) -> Tuple[Optional[float], Optional[float]]:
        def first(sol):
            return sol.incumbent_log[0][1] if sol.incumbent_log else None

        return first(self.plain), first(self.guided)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "time_ms", "value"])
        for name, sol in (("plain", self.plain), ("predict_and_search", self.guided)):
            for t, v in sol.incumbent_log:
                w.writerow([name, f"{t * 1000.0:.3f}", repr(v)])
        return buf.getvalue()


def anytime_compare(
    milp: MilpInstance, pred, cfg: PnsConfig, time_limit_ms: float, node_limit: int = 1_000_000
) -> AnytimeComparison:
    """Plain branch-and-bound vs predict-and-search under the same budget."""
    if time_limit_ms < 0:
        raise ValueError("time budget must be >= 0")
    scfg = SolverConfig(node_limit=node_limit, time_limit_ms=time_limit_ms)
    plain = solve_milp(milp, scfg)
    guided = predict_and_search(pred, milp, cfg, scfg)
    return AnytimeComparison(plain, guided)


def first_no_worse(cmp: AnytimeComparison, sense: str, tol: float = 1e-6) -> bool:
    a, b = cmp.first_incumbents()
    if b is None:
        return False
    if a is None:
        return True
    return b >= a - tol if sense == "max" else b <= a + tol
