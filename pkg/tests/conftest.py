import itertools

import numpy as np
import pytest

from netinterdict.instances import MfiInstance, SpiInstance
from netinterdict.reduction import Constraint, MilpInstance, Variable, VarGroup


def simple_path_lengths(inst, x=None):
    """Lengths of every simple source-sink path (exhaustive DFS, no Dijkstra)."""
    x = np.zeros(inst.edge_count) if x is None else np.asarray(x, dtype=float)
    out = {}
    for k, (i, j, c, d) in enumerate(inst.edges):
        out.setdefault(i, []).append((j, c + d * x[k]))
    found = []

    def dfs(u, seen, length, path):
        if u == inst.sink:
            found.append((length, tuple(path)))
            return
        for v, w in out.get(u, []):
            if v not in seen:
                seen.add(v)
                path.append(v)
                dfs(v, seen, length + w, path)
                path.pop()
                seen.discard(v)

    dfs(inst.source, {inst.source}, 0.0, [inst.source])
    return found


def path_oracle(inst, x=None):
    found = simple_path_lengths(inst, x)
    return min(found)[0] if found else np.inf


def spi_interdiction_oracle(inst):
    """Max over budget-feasible x of the exhaustive-path shortest length."""
    m = inst.edge_count
    best = -np.inf
    for k in range(inst.budget + 1):
        for sup in itertools.combinations(range(m), k):
            x = np.zeros(m)
            x[list(sup)] = 1
            best = max(best, path_oracle(inst, x))
    return best


def cycle_packing_milp(cycles):
    """max sum x s.t. x_u + x_v <= 1 on every cycle edge; vertices are binaries in W0."""
    n = sum(cycles)
    xs = tuple(Variable(f"x{v}", 0, 1, True, 1.0) for v in range(n))
    rows, start = [], 0
    for size in cycles:
        for a in range(size):
            u, v = start + a, start + (a + 1) % size
            rows.append(Constraint((((0, u), 1.0), ((0, v), 1.0)), "<=", 1.0))
        start += size
    return MilpInstance("max", (VarGroup(0, xs),), rows)


@pytest.fixture
def two_node_spi():
    return SpiInstance(2, 0, 1, [(0, 1, 4.0, 2.5)], 1)


@pytest.fixture
def diamond():
    # s=0, a=1, b=2, t=3; s->a->t caps (3, 2), s->b->t caps (1, 4)
    return MfiInstance(4, 0, 3, [(0, 1, 3, 1), (1, 3, 2, 1), (0, 2, 1, 1), (2, 3, 4, 1)], 0)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
