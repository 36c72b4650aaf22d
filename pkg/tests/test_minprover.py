import numpy as np
import pytest

from sgproof.core import Status, classify
from sgproof.instances import filter_config_for, initial_position
from sgproof.minprover import MinProver, ProverError, minimize
from sgproof.prooftree import RandomPolicy, benchmark_policy, make_cut

from oracles import exhaustive_minimum


def _root(instances, shape, sigma):
    inst = instances[sigma]
    return initial_position(inst, shape), filter_config_for(inst)


def test_sigma8_fast_anchor(shape32, instances32):
    root, cfg = _root(instances32, shape32, 8)
    res = minimize(root, cfg)
    assert res.nu_min == 3
    assert (res.matrix == np.array([[2, 3, 3], [3, 2, 3], [3, 3, 2]])).all()


def test_bound_for_cut_and_propagate(shape32, instances32):
    root, cfg = _root(instances32, shape32, 8)
    prover = MinProver(cfg)
    node = prover.node_for(root, 0)
    with pytest.raises(ProverError):
        prover.bound_for_cut(node, (0, 0))
    prover.expand(node)
    lo, hi = prover.bound_for_cut(node, (0, 0))
    assert 0 <= lo <= hi
    assert prover.propagate_bounds(node) in (True, False)
    assert node.lower >= 1


def test_bracket_validity_during_solve(shape32, instances32):
    root, cfg = _root(instances32, shape32, 5)
    prover = MinProver(cfg)
    value = prover.solve(root)
    assert value == 1 + 4  # nu_min(5) = 5: matrix min is 4
    for node in prover.store.values():
        assert node.lower <= node.upper


def test_resolved_nodes_stop_expanding(shape32, instances32):
    root, cfg = _root(instances32, shape32, 8)
    prover = MinProver(cfg)
    prover.solve(root)
    node = prover.store[root.key()]
    assert node.resolved
    assert prover._frontier(node) == []


def test_prune_never_removes_all(shape32, instances32):
    root, cfg = _root(instances32, shape32, 5)
    prover = MinProver(cfg)
    prover.solve(root)
    for node in prover.store.values():
        if node.expanded and node.children:
            assert set(node.children) - node.pruned_cuts


def test_exhaustive_equivalence_22(shape22, instances22):
    for inst in instances22:
        root = initial_position(inst, shape22)
        cfg = filter_config_for(inst)
        res = minimize(root, cfg)
        if classify(root, cfg) != Status.ACTIVE:
            assert res.nu_min == 0
            continue
        assert res.nu_min == exhaustive_minimum(root, cfg), inst.sigma


def test_exhaustive_equivalence_32_sample(shape32, instances32):
    for sigma in (4, 5, 8, 10):
        root, cfg = _root(instances32, shape32, sigma)
        assert minimize(root, cfg).nu_min == exhaustive_minimum(root, cfg)


def test_upper_policy_does_not_change_result(shape32, instances32):
    root, cfg = _root(instances32, shape32, 5)
    a = minimize(root, cfg, upper_policy=benchmark_policy(3))
    b = minimize(root, cfg, upper_policy=RandomPolicy(np.random.default_rng(0)))
    assert a.nu_min == b.nu_min == 5
    assert (a.matrix == b.matrix).all()


def test_second_level_sigma3(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)
    prover = MinProver(cfg)
    kids = make_cut(root, (0, 0), cfg)
    values = [prover.solve(pos, 1) for pos, _st in kids]
    assert values == [13, 10, 13]
    mats = [prover.cut_matrix(pos, 1) for pos, _st in kids]
    expected = [
        [[-1, 12, 12], [12, 13, 14], [12, 14, 13]],
        [[-1, 9, 9], [9, 9, 9], [9, 9, 9]],
        [[-1, 14, 14], [12, 13, 15], [12, 15, 13]],
    ]
    for mat, want in zip(mats, expected):
        assert (mat == np.array(want)).all()


def test_node_guard(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)
    with pytest.raises(ProverError):
        minimize(root, cfg, max_nodes=10)
