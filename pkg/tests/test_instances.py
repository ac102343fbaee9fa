import json

import numpy as np
import pytest

from netinterdict.instances import (
    GenConfig,
    InstanceError,
    MfiInstance,
    SpiInstance,
    dumps,
    worked_example_spi,
    generate_mfi,
    generate_spi,
    loads,
    reachable,
)
from netinterdict.inner import max_flow, shortest_path

from conftest import simple_path_lengths


def test_worked_example_example_edges():
    inst = worked_example_spi()
    assert inst.edge_count == 12
    assert (inst.node_count, inst.source, inst.sink, inst.budget) == (7, 0, 6, 1)
    costs = {(i, j): c for i, j, c, _ in inst.edges}
    assert costs == {
        (0, 1): 9, (0, 4): 3, (0, 3): 3, (1, 2): 4, (1, 3): 1, (4, 3): 2,
        (4, 5): 3, (3, 2): 8, (3, 6): 4, (3, 5): 6, (2, 6): 5, (5, 6): 4,
    }
    assert np.all(inst.delays == 1.0)


def test_worked_example_uninterdicted_path_by_enumeration():
    length, path = min(simple_path_lengths(worked_example_spi()))
    assert length == 7.0
    assert path == (0, 3, 6)


def test_spi20_recipe():
    cfg = GenConfig(20, density=1.0, cost_range=(1.0, 10.0), budget=15, seed=3)
    inst = generate_spi(cfg)
    assert inst.edge_count == 20 * 19
    assert inst.budget == 15
    assert (inst.source, inst.sink) == (0, 19)
    assert inst.costs.min() >= 1.0 and inst.costs.max() <= 10.0
    np.testing.assert_array_equal(inst.delays, inst.costs)


def test_mfi20_recipe():
    inst = generate_mfi(GenConfig(20, capacity_range=(10.0, 60.0), budget=15, seed=3))
    assert inst.edge_count == 380
    assert inst.budget == 15.0
    assert 10.0 <= inst.capacities.min() and inst.capacities.max() <= 60.0
    assert 1.0 <= inst.removal_costs.min() and inst.removal_costs.max() <= 10.0


def test_two_node_generation():
    spi = generate_spi(GenConfig(2, budget=1, seed=9))
    assert [e[:2] for e in spi.edges] == [(0, 1), (1, 0)]
    assert shortest_path(spi, [0, 0]).length == spi.edges[0][2]
    mfi = generate_mfi(GenConfig(2, budget=1, seed=9))
    assert max_flow(mfi, [0, 0]).value == mfi.edges[0][2]
    assert max_flow(mfi, [1, 0]).value == 0.0


@pytest.mark.parametrize("make", [generate_spi, generate_mfi])
def test_generation_is_deterministic(make):
    cfg = GenConfig(6, density=0.5, budget=2, seed=12345)
    assert dumps(make(cfg)) == dumps(make(cfg))
    assert dumps(make(cfg)) != dumps(make(GenConfig(6, density=0.5, budget=2, seed=12346)))


def test_generated_invariants_over_1000_seeds():
    rng = np.random.default_rng(0)
    for seed in range(1000):
        n = int(rng.integers(2, 8))
        dens = float(rng.uniform(0.3, 1.0))
        spi = generate_spi(GenConfig(n, density=dens, budget=2, seed=seed))
        mfi = generate_mfi(GenConfig(n, density=dens, budget=2.0, seed=seed))
        for inst in (spi, mfi):
            assert inst.source == 0 and inst.sink == n - 1
            assert all(i != j and 0 <= i < n and 0 <= j < n for i, j, _, _ in inst.edges)
            assert all(a >= 0 and b >= 0 for _, _, a, b in inst.edges)
            assert reachable(n, 0, n - 1, inst.edges)


def test_constant_delay_policy():
    inst = generate_spi(GenConfig(5, delay=1.0, budget=1, seed=0))
    assert np.all(inst.delays == 1.0)


def test_json_roundtrip_worked_example():
    inst = worked_example_spi()
    text = dumps(inst)
    doc = json.loads(text)
    assert doc["kind"] == "spi" and doc["format_version"] == 1
    assert loads(text) == inst
    assert dumps(loads(text)) == text


def test_mfi_json_roundtrip(diamond):
    assert loads(dumps(diamond)) == diamond


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(node_count=1),
        dict(node_count=5, cost_range=(5.0, 1.0)),
        dict(node_count=5, capacity_range=(2.0, 1.0)),
        dict(node_count=5, density=0.0),
        dict(node_count=5, delay="weird"),
    ],
)
def test_bad_configs_rejected(kwargs):
    with pytest.raises(InstanceError):
        GenConfig(**kwargs)


def test_sparse_unreachable_gives_up():
    with pytest.raises(InstanceError, match="100 attempts"):
        generate_spi(GenConfig(30, density=1e-6, seed=1))


@pytest.mark.parametrize(
    "edges, src, snk",
    [
        ([(0, 0, 1, 1), (0, 1, 1, 1)], 0, 1),  # self-loop
        ([(0, 2, 1, 1)], 0, 1),  # endpoint out of range
        ([(0, 1, -1, 1)], 0, 1),  # negative cost
        ([(1, 0, 1, 1)], 0, 1),  # no s-t path
        ([(0, 1, 1, 1)], 1, 1),  # source == sink
    ],
)
def test_instance_invariants(edges, src, snk):
    with pytest.raises(InstanceError):
        SpiInstance(2, src, snk, edges, 1)


def test_budget_checks():
    with pytest.raises(InstanceError):
        SpiInstance(2, 0, 1, [(0, 1, 1, 1)], 1.5)
    with pytest.raises(InstanceError):
        MfiInstance(2, 0, 1, [(0, 1, 1, 1)], -1.0)
