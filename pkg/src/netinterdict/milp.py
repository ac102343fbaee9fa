"""Dense two-phase primal simplex and best-bound branch-and-bound.

The LP is brought to standard form by shifting every variable to its lower
bound, substituting out fixed variables, and adding one ``x' <= ub - lb``
row per remaining bounded column. No presolve, cuts or primal heuristics.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from netinterdict.reduction import Constraint, MilpInstance, Variable

PIVOT_TOL = 1e-10
FEAS_TOL = 1e-7
COST_TOL = 1e-9
INT_TOL = 1e-6
OBJ_TOL = 1e-6
MAX_COLUMNS = 5000
MAX_CELLS = 4_000_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL = "numerical"
BUDGET_EXCEEDED = "budget_exceeded"


class ProblemTooLarge(ValueError):
    pass


@dataclass
class LpResult:
    status: str
    value: float = math.nan
    x: Optional[np.ndarray] = None
    iterations: int = 0


@dataclass
class SolverConfig:
    node_limit: int = 1_000_000
    time_limit_ms: Optional[float] = None
    gap_tol: float = 1e-6

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        unknown = set(d) - {"node_limit", "time_limit_ms", "gap_tol"}
        if unknown:
            raise ValueError(f"unknown solver config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class MilpSolution:
    status: str
    value: float = math.nan
    x: Optional[np.ndarray] = None
    node_count: int = 0
    wall_time: float = 0.0
    incumbent_log: List[Tuple[float, float]] = field(default_factory=list)
    bound: float = math.nan

    @property
    def has_incumbent(self) -> bool:
        return self.x is not None

    def incumbent_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_ms", "value"])
        for t, v in self.incumbent_log:
            w.writerow([f"{t * 1000.0:.3f}", repr(v)])
        return buf.getvalue()


class _Tableau:
    """Minimize c^T x s.t. A x = b, x >= 0, b >= 0 with a given starting basis."""

    def __init__(self, T: np.ndarray, basis: List[int]):
        self.T = T
        self.basis = basis
        self.iterations = 0

    def pivot(self, r: int, col: int):
        T = self.T
        T[r] /= T[r, col]
        colv = T[:, col].copy()
        colv[r] = 0.0
        T -= np.outer(colv, T[r])
        self.basis[r] = col

    def run(self, ncols: int, allowed: np.ndarray) -> str:
        """Iterate on objective row ``T[-1]`` over columns where ``allowed``."""
        T = self.T
        m = T.shape[0] - 1
        bland_after = 10 * (m + ncols)
        local = 0
        while True:
            rc = T[-1, :ncols]
            cand = np.flatnonzero((rc < -COST_TOL) & allowed)
            if cand.size == 0:
                return OPTIMAL
            if local >= bland_after:
                col = int(cand[0])
            else:
                col = int(cand[np.argmin(rc[cand])])
            colv = T[:m, col]
            pos = colv > PIVOT_TOL
            if not pos.any():
                if np.any(colv > 0):
                    return NUMERICAL
                return UNBOUNDED
            ratios = np.full(m, np.inf)
            ratios[pos] = T[:m, -1][pos] / colv[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            # lowest basic variable index among tied rows
            r = int(min(ties, key=lambda i: self.basis[i]))
            if abs(T[r, col]) < PIVOT_TOL:
                return NUMERICAL
            self.pivot(r, col)
            self.iterations += 1
            local += 1


def _substitution(lb, ub):
    """Write x = off + M y with y >= 0 and y <= span (span may be inf).

    Fixed columns vanish, a finite lower bound shifts, a lone finite upper
    bound mirrors, and a free column splits into a difference of two.
    """
    n = len(lb)
    off = np.zeros(n)
    cols: List[Tuple[int, float]] = []
    span: List[float] = []
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if np.isfinite(lo):
            off[j] = lo
            if hi - lo <= 1e-12:
                continue
            cols.append((j, 1.0))
            span.append(hi - lo)
        elif np.isfinite(hi):
            off[j] = hi
            cols.append((j, -1.0))
            span.append(math.inf)
        else:
            cols += [(j, 1.0), (j, -1.0)]
            span += [math.inf, math.inf]
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    return off, M, np.array(span, dtype=float)


def _lp_min(c, A, rel, b, lb, ub) -> LpResult:
    """min c^T x s.t. A x rel b, lb <= x <= ub (bounds may be infinite)."""
    if np.any(lb > ub + 1e-12) or np.any(lb == math.inf) or np.any(ub == -math.inf):
        return LpResult(INFEASIBLE)
    off, M, span = _substitution(lb, ub)
    shift_b = b - A @ off
    const = float(c @ off)
    Af = A @ M
    cf = c @ M
    nf = M.shape[1]

    # drop rows with no free columns after substitution, checking them
    keep = []
    for r in range(A.shape[0]):
        if nf == 0 or not np.any(Af[r] != 0.0):
            val = 0.0
            rhs = shift_b[r]
            ok = (
                (rel[r] == "<=" and val <= rhs + FEAS_TOL)
                or (rel[r] == ">=" and val >= rhs - FEAS_TOL)
                or (rel[r] == "=" and abs(val - rhs) <= FEAS_TOL)
            )
            if not ok:
                return LpResult(INFEASIBLE)
        else:
            keep.append(r)
    Am = Af[keep]
    bm = shift_b[keep]
    relm = [rel[r] for r in keep]
    # explicit rows y_k <= span_k for finite spans
    bounded = np.flatnonzero(np.isfinite(span))
    Am = np.vstack([Am, np.eye(nf)[bounded]])
    bm = np.concatenate([bm, span[bounded]])
    relm = relm + ["<="] * len(bounded)
    m = len(bm)

    if nf == 0:
        return LpResult(OPTIMAL, const, off.copy(), 0)
    if (nf + 2 * m) * (m + 1) > MAX_CELLS or nf > MAX_COLUMNS:
        raise ProblemTooLarge(
            f"LP with {nf} columns and {m} rows exceeds the dense tableau limit"
        )

    sign = np.where(bm < 0, -1.0, 1.0)
    Am = Am * sign[:, None]
    bm = bm * sign
    relm = [
        r if s > 0 else {"<=": ">=", ">=": "<=", "=": "="}[r] for r, s in zip(relm, sign)
    ]
    n_slack = sum(1 for r in relm if r != "=")
    need_art = [i for i, r in enumerate(relm) if r != "<="]
    n_art = len(need_art)
    ncols = nf + n_slack + n_art
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nf] = Am
    T[:m, -1] = bm
    basis = [-1] * m
    s = nf
    for i, r in enumerate(relm):
        if r == "<=":
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        elif r == ">=":
            T[i, s] = -1.0
            s += 1
    a = nf + n_slack
    art_cols = []
    for i in need_art:
        T[i, a] = 1.0
        basis[i] = a
        art_cols.append(a)
        a += 1

    tab = _Tableau(T, basis)
    is_art = np.zeros(ncols, dtype=bool)
    is_art[art_cols] = True
    if n_art:
        # phase 1: minimize sum of artificials
        T[-1, :] = 0.0
        T[-1, art_cols] = 1.0
        for i in need_art:
            T[-1] -= T[i]
        status = tab.run(ncols, np.ones(ncols, dtype=bool))
        if status == NUMERICAL:
            return LpResult(NUMERICAL, iterations=tab.iterations)
        if -T[-1, -1] > 1e-7 * max(1.0, np.abs(bm).max()):
            return LpResult(INFEASIBLE, iterations=tab.iterations)
        # drive remaining artificials out of the basis
        drop = []
        for i in range(m):
            if is_art[basis[i]]:
                nz = np.flatnonzero(np.abs(T[i, : nf + n_slack]) > 1e-9)
                if nz.size:
                    tab.pivot(i, int(nz[0]))
                else:
                    drop.append(i)
        if drop:
            keep_rows = [i for i in range(m) if i not in drop]
            T = np.vstack([T[keep_rows], T[-1:]])
            tab.T = T
            tab.basis = [basis[i] for i in keep_rows]
            m = len(keep_rows)
    # phase 2
    T = tab.T
    T[-1, :] = 0.0
    T[-1, :nf] = cf
    for i, col in enumerate(tab.basis):
        if T[-1, col] != 0.0:
            T[-1] -= T[-1, col] * T[i]
    status = tab.run(ncols, ~is_art)
    if status != OPTIMAL:
        return LpResult(status, iterations=tab.iterations)
    xf = np.zeros(ncols)
    for i, col in enumerate(tab.basis):
        xf[col] = T[i, -1]
    x = off + M @ np.clip(xf[:nf], 0.0, span)
    value = float(c @ x)
    return LpResult(OPTIMAL, value, x, tab.iterations)


def _lp(c, A, rel, b, lb, ub, maximize: bool) -> LpResult:
    res = _lp_min(-c if maximize else c, A, rel, b, lb, ub)
    if res.status == OPTIMAL:
        res.value = float(c @ res.x)
    return res


def solve_lp(milp: MilpInstance, relaxed: bool = True) -> LpResult:
    """Solve the LP (relaxation) of ``milp``.

    With ``relaxed=False`` every integral variable must already be fixed.
    Failures are reported through ``status``, never raised.
    """
    c, A, rel, b, lb, ub, integral = milp.dense()
    if not relaxed and np.any(integral & (ub > lb)):
        raise ValueError("instance has unfixed integer variables; pass relaxed=True")
    return _lp(c, A, rel, b, lb, ub, milp.sense == "max")


def _row_ok(a, rel, rhs, tol) -> bool:
    if rel == "<=":
        return a <= rhs + tol
    if rel == ">=":
        return a >= rhs - tol
    return abs(a - rhs) <= tol


def check_feasible(milp: MilpInstance, x, tol: float = 1e-6) -> bool:
    c, A, rel, b, lb, ub, integral = milp.dense()
    x = np.asarray(x, dtype=float)
    if np.any(x < lb - tol) or np.any(x > ub + tol):
        return False
    if np.any(np.abs(x[integral] - np.rint(x[integral])) > tol):
        return False
    ax = A @ x
    return all(_row_ok(ax[i], rel[i], b[i], tol) for i in range(len(b)))


@dataclass(order=True)
class _Node:
    key: float
    seq: int
    lb: np.ndarray = field(compare=False)
    ub: np.ndarray = field(compare=False)
    depth: int = field(compare=False, default=0)
    bound: float = field(compare=False, default=math.inf)


def solve_milp(milp: MilpInstance, cfg: Optional[SolverConfig] = None) -> MilpSolution:
    """Branch-and-bound over the LP relaxation.

    Node selection is depth-first until the first incumbent, best-bound
    afterwards. Branching picks the most fractional integral variable
    (lowest column on ties).
    """
    cfg = cfg or SolverConfig()
    t0 = time.perf_counter()
    c, A, rel, b, lb0, ub0, integral = milp.dense()
    maximize = milp.sense == "max"
    # internal objective is minimized
    cmin = -c if maximize else c
    int_idx = np.flatnonzero(integral)
    lb0 = lb0.copy()
    ub0 = ub0.copy()
    lb0[int_idx] = np.ceil(lb0[int_idx] - INT_TOL)
    ub0[int_idx] = np.floor(ub0[int_idx] + INT_TOL)

    def elapsed():
        return time.perf_counter() - t0

    def out_of_time():
        return cfg.time_limit_ms is not None and elapsed() * 1000.0 >= cfg.time_limit_ms

    best_val = math.inf
    best_x = None
    log: List[Tuple[float, float]] = []
    nodes = 0
    seq = 0
    stack: List[_Node] = [_Node(-math.inf, 0, lb0, ub0, 0, -math.inf)]
    heap: List[_Node] = []
    status = None

    def user_value(v):
        return -v if maximize else v

    while stack or heap:
        if out_of_time() or nodes >= cfg.node_limit:
            status = BUDGET_EXCEEDED
            break
        if stack:
            node = stack.pop()
        else:
            node = heapq.heappop(heap)
            # heap order is best-bound, so every open node is within the gap too
            if best_val - node.bound <= cfg.gap_tol:
                heap.clear()
                break
        if node.bound >= best_val - OBJ_TOL:
            continue
        nodes += 1
        res = _lp_min(cmin, A, rel, b, node.lb, node.ub)
        if res.status != OPTIMAL:
            if nodes == 1 and res.status in (UNBOUNDED, NUMERICAL):
                status = res.status
                break
            continue
        val = res.value
        if val >= best_val - OBJ_TOL:
            continue
        xs = res.x
        frac = np.abs(xs[int_idx] - np.rint(xs[int_idx]))
        if int_idx.size == 0 or frac.max() <= INT_TOL:
            xi = xs.copy()
            xi[int_idx] = np.rint(xi[int_idx])
            best_val = float(cmin @ xi)
            best_x = xi
            log.append((elapsed(), user_value(best_val)))
            if stack:
                # first incumbent found: move the dive stack into the heap
                for nd in stack:
                    if nd.bound < best_val - OBJ_TOL:
                        heapq.heappush(heap, nd)
                stack = []
            continue
        dist = np.abs(xs[int_idx] - np.floor(xs[int_idx]) - 0.5)
        j = int(int_idx[int(np.argmin(dist))])
        v = xs[j]
        down_ub = node.ub.copy()
        down_ub[j] = math.floor(v)
        up_lb = node.lb.copy()
        up_lb[j] = math.ceil(v)
        down = _Node(val, 0, node.lb, down_ub, node.depth + 1, val)
        up = _Node(val, 0, up_lb, node.ub, node.depth + 1, val)
        prefer_up = v - math.floor(v) >= 0.5
        if best_x is None:
            first, second = (up, down) if prefer_up else (down, up)
            seq += 1
            second.seq = seq
            seq += 1
            first.seq = seq
            stack.append(second)
            stack.append(first)
        else:
            for child in ((up, down) if prefer_up else (down, up)):
                seq += 1
                child.seq = seq
                heapq.heappush(heap, child)

    if status is None:
        status = OPTIMAL if best_x is not None else INFEASIBLE
    open_nodes = stack + heap
    bound = (
        min([n.bound for n in open_nodes] + [best_val])
        if status in (OPTIMAL, BUDGET_EXCEEDED)
        else math.nan
    )
    return MilpSolution(
        status=status,
        value=user_value(best_val) if best_x is not None else math.nan,
        x=best_x,
        node_count=nodes,
        wall_time=elapsed(),
        incumbent_log=log,
        bound=user_value(bound) if not math.isnan(bound) else math.nan,
    )


def solve_milp_with_extra(
    milp: MilpInstance,
    extra_vars: Sequence[Variable] = (),
    extra_constraints: Sequence[Constraint] = (),
    cfg: Optional[SolverConfig] = None,
) -> MilpSolution:
    """Solve ``milp`` augmented with extra variables (group p+1) and rows.

    The returned assignment covers the original variables only.
    """
    aug = milp.augment(list(extra_vars), list(extra_constraints))
    sol = solve_milp(aug, cfg)
    if sol.x is not None:
        sol.x = sol.x[: milp.n_vars]
    return sol
