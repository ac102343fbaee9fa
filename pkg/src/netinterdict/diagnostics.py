"""On-demand property suites (``netinterdict diagnose``).

Each suite returns ``(passed, summary)``. Sizes are kept small so a full
run finishes in well under a minute.
"""

from __future__ import annotations

import math
from typing import Optional, Tuple

import numpy as np

from netinterdict.encoding import (
    build_graph,
    distinguishable,
    is_refinement,
    permute_graph,
    random_permutations,
    refine,
)
from netinterdict.gnn import GnnConfig, GnnModel, gradient_check, init_model, relative_error
from netinterdict.inner import shortest_path
from netinterdict.instances import GenConfig, SpiInstance, worked_example_spi, generate_mfi, generate_spi
from netinterdict.milp import OPTIMAL, solve_lp
from netinterdict.oracle import cross_check
from netinterdict.reduction import dualize_spi, fix_interdiction

Result = Tuple[bool, str]


def perturb_cost(inst: SpiInstance, k: int, delta: float) -> SpiInstance:
    edges = list(inst.edges)
    i, j, c, d = edges[k]
    edges[k] = (i, j, c + delta, d)
    return SpiInstance(inst.node_count, inst.source, inst.sink, edges, inst.budget, id=inst.id)


def wl_suite(n_graphs: int = 5, n_perms: int = 10, rounds: int = 3, seed: int = 0) -> Result:
    rng = np.random.Generator(np.random.PCG64(seed))
    failures = []
    base = worked_example_spi()
    g = build_graph(dualize_spi(base))
    if not distinguishable(g, build_graph(dualize_spi(perturb_cost(base, 0, 1.0))), rounds):
        failures.append("worked example cost perturbation not distinguished")
    for t in range(n_graphs):
        inst = generate_spi(GenConfig(5, density=0.7, delay=1.0, budget=1, seed=seed + t))
        g = build_graph(dualize_spi(inst))
        res = refine(g, rounds)
        for l in range(1, len(res.history)):
            fine_v, fine_c = res.history[l]
            crs_v, crs_c = res.history[l - 1]
            if not is_refinement(fine_c, crs_c) or not all(
                is_refinement(a, b) for a, b in zip(fine_v, crs_v)
            ):
                failures.append(f"graph {t}: round {l} does not refine round {l - 1}")
        for _ in range(n_perms):
            vp, cp = random_permutations(g, rng)
            if distinguishable(g, permute_graph(g, vp, cp), rounds):
                failures.append(f"graph {t}: permuted copy distinguished")
    return not failures, "; ".join(failures) or f"{n_graphs} graphs x {n_perms} permutations ok"


def duality_suite(n_instances: int = 30, n_x: int = 3, seed: int = 0, tol: float = 1e-6) -> Result:
    rng = np.random.Generator(np.random.PCG64(seed))
    worst = 0.0
    for t in range(n_instances):
        n = int(rng.integers(2, 9))
        inst = generate_spi(GenConfig(n, density=0.6, budget=n * n, seed=seed * 7919 + t))
        milp = dualize_spi(inst)
        for _ in range(n_x):
            # budget covers every edge, so any x is admissible
            x = (rng.random(inst.edge_count) < 0.3).astype(float)
            lp = solve_lp(fix_interdiction(milp, x))
            sp = shortest_path(inst, x).length
            if lp.status != OPTIMAL:
                return False, f"instance {t}: LP status {lp.status}"
            worst = max(worst, abs(lp.value - sp))
    return worst <= tol, f"max |LP - Dijkstra| = {worst:.3g}"


def gradcheck_suite(
    model: Optional[GnnModel] = None, n_samples: int = 100, seed: int = 0, tol: float = 1e-4
) -> Result:
    rng = np.random.Generator(np.random.PCG64(seed))
    if model is None:
        model = init_model(GnnConfig(layers=2, dim=8, hidden=(8,), random_dim=2, seed=seed))
    cfg = model.config
    if not all(np.all(np.isfinite(p)) for p in model.params.values()):
        return False, "model has non-finite parameters"
    inst = generate_spi(GenConfig(5, density=0.8, budget=1, seed=seed))
    g = build_graph(dualize_spi(inst), cfg.random_dim, seed)
    label = (rng.random(inst.edge_count) < 0.3).astype(float)
    try:
        res = gradient_check(model, g, label, n_samples, rng)
    except ValueError as exc:
        return False, f"gradient check could not run: {exc}"
    errs = [relative_error(a, n) for _, _, a, n in res]
    worst = max(errs) if errs else math.nan
    ok = bool(errs) and all(np.isfinite(errs)) and worst < tol
    return ok, f"max relative error {worst:.3g} over {len(errs)} parameters"


def oracle_vs_milp_suite(n_spi: int = 10, n_mfi: int = 5, seed: int = 0) -> Result:
    rng = np.random.Generator(np.random.PCG64(seed))
    bad = []
    for t in range(n_spi):
        n = int(rng.integers(3, 7))
        inst = generate_spi(GenConfig(n, budget=int(rng.integers(0, 3)), seed=seed + t))
        rep = cross_check(inst)
        if not rep.passed:
            bad.append(f"spi {t}: {rep.messages}")
    for t in range(n_mfi):
        n = int(rng.integers(3, 6))
        inst = generate_mfi(
            GenConfig(n, cost_range=(0.5, 1.5), budget=float(rng.integers(0, 3)), seed=seed + t)
        )
        rep = cross_check(inst)
        if not rep.passed:
            bad.append(f"mfi {t}: {rep.messages}")
    return not bad, "; ".join(bad) or f"{n_spi} SPI + {n_mfi} MFI instances agree"


SUITES = {
    "wl": wl_suite,
    "duality": duality_suite,
    "gradcheck": gradcheck_suite,
    "oracle-vs-milp": oracle_vs_milp_suite,
}
