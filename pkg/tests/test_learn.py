import numpy as np
import pytest
import torch

from sgproof.core import Shape, Status, classify, multiplex
from sgproof.instances import filter_config_for, initial_position
from sgproof.learn.encoder import encode, encode_batch, feature_count, flat_dim
from sgproof.learn.model import PolicyModel, ValueNet, load_checkpoint, save_checkpoint
from sgproof.learn.pool import GlobalSample, LocalSample, SamplePool
from sgproof.learn.targets import (policy_from_value_grid, rank_modified_targets,
                                   target_global_onestep, target_global_pruned,
                                   target_local)
from sgproof.learn.train import (GLOBAL_SEGMENT, LOCAL_SEGMENT, TrainConfig,
                                 generalization_run, train_segment, training_cycle)
from sgproof.minprover import MinProver
from sgproof.prooftree import available_cuts, benchmark_policy, make_cut, run_proof, run_pruned_proof

from oracles import random_position


def _root(instances, shape, sigma, **kw):
    inst = instances[sigma]
    return initial_position(inst, shape), filter_config_for(inst, **kw)


def _oracle_predictors(cfg, shape):
    """Exact predictors built from the certified minimal counts."""
    prover = MinProver(cfg)

    def predict_global(positions):
        return np.array([np.log10(prover.solve(p)) for p in positions])

    def predict_local(positions):
        grids = []
        for p in positions:
            grid = np.full((shape.a, shape.a), np.inf)
            for cut in available_cuts(p):
                total = sum(prover.solve(child)
                            for child, st in make_cut(p, cut, cfg)
                            if st == Status.ACTIVE)
                with np.errstate(divide="ignore"):
                    grid[cut] = np.log10(total)
            grids.append(grid)
        return np.array(grids)

    return predict_global, predict_local


# -- encoder -------------------------------------------------------------------


def test_feature_arithmetic_53():
    shape = Shape(5, 3)
    assert feature_count(shape) == 30
    assert flat_dim(shape) == 430


def test_encode_layout_and_normalization(shape32, instances32):
    root, _ = _root(instances32, shape32, 3)
    enc = encode(root)
    assert enc.shape == (feature_count(shape32), 3, 3)
    # full m column -> uniform distribution over bz channels
    assert np.allclose(enc[:3, 0, 0], 1 / 3)
    # done m column -> one-hot
    done = root.replace_m(multiplex(np.full((3, 3), 2), 3))
    enc2 = encode(done)
    assert np.allclose(enc2[2, 0, 0], 1.0) and np.allclose(enc2[:2, 0, 0], 0.0)
    # l broadcast along y, r along x
    assert (enc[3:9, 1, 0] == enc[3:9, 1, 2]).all()
    assert (enc[9:15, 0, 1] == enc[9:15, 2, 1]).all()


def test_encode_zero_column_stays_zero(shape32):
    p = random_position(shape32, np.random.default_rng(0), keep=0.5)
    m = p.m.copy()
    m[0, 1, :] = False
    enc = encode(p.replace_m(m))
    assert np.allclose(enc[:3, 0, 1], 0.0)


def test_encode_injective_on_reachable(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)
    result = run_proof(root, benchmark_policy(3), cfg)
    positions, seen = [], {}

    def rec(node):
        positions.append(node.position)
        for c in node.children:
            rec(c)

    rec(result.root)
    for p in positions:
        digest = encode(p).tobytes()
        if digest in seen:
            assert seen[digest] == p.key()
        seen[digest] = p.key()


# -- model ---------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 4, 8])
def test_grouped_conv_parameter_count(n):
    net = ValueNet(Shape(3, 2), n, 1)
    for conv in (net.conv_a, net.conv_c):
        assert conv.weight.numel() == 320 * n
    for conv in (net.conv_b, net.conv_d):
        assert conv.weight.numel() == 320 * n


def test_model_output_shapes(shape32):
    model = PolicyModel(shape32, width_n=2)
    x = torch.randn(7, feature_count(shape32), 3, 3)
    assert model.global_net(x).shape == (7,)
    assert model.local_net(x).shape == (7, 3, 3)


def test_model_runs_at_small_a():
    shape = Shape(2, 2)
    model = PolicyModel(shape, width_n=1)
    x = torch.randn(4, feature_count(shape), 2, 2)
    assert model.global_net(x).shape == (4,)


def test_checkpoint_roundtrip(tmp_path, shape32):
    model = PolicyModel(shape32, width_n=2)
    path = str(tmp_path / "model.ckpt")
    save_checkpoint(path, model)
    loaded = load_checkpoint(path)
    assert loaded.shape == shape32 and loaded.width_n == 2
    for name, net in model.nets().items():
        for (k1, v1), (k2, v2) in zip(net.state_dict().items(),
                                      loaded.nets()[name].state_dict().items()):
            assert k1 == k2
            assert (v1 == v2).all(), k1


def test_gradient_check_against_finite_differences(shape32, instances32):
    torch.manual_seed(0)
    rng = np.random.default_rng(0)
    net = ValueNet(shape32, 1, 1).double()
    root, cfg = _root(instances32, shape32, 3)
    batch_pos = [p for p, _s in make_cut(root, (0, 0), cfg)] + [root]
    x = torch.from_numpy(encode_batch(batch_pos)).double()
    target = torch.from_numpy(rng.standard_normal(len(batch_pos)))

    loss = torch.mean((net(x) - target) ** 2)
    loss.backward()
    params = list(net.parameters())
    flat_grads = torch.cat([p.grad.flatten() for p in params])
    sizes = [p.numel() for p in params]
    eps = 1e-6
    checked = 0
    offsets = np.cumsum([0] + sizes)
    idx_all = rng.choice(int(offsets[-1]), size=50, replace=False)
    for flat_idx in idx_all:
        which = int(np.searchsorted(offsets, flat_idx, side="right") - 1)
        local = int(flat_idx - offsets[which])
        p = params[which]
        with torch.no_grad():
            orig = p.flatten()[local].item()
            p.flatten()[local] = orig + eps
            up = torch.mean((net(x) - target) ** 2).item()
            p.flatten()[local] = orig - eps
            down = torch.mean((net(x) - target) ** 2).item()
            p.flatten()[local] = orig
        numeric = (up - down) / (2 * eps)
        analytic = flat_grads[flat_idx].item()
        denom = max(abs(numeric), abs(analytic), 1e-8)
        assert abs(numeric - analytic) / denom < 1e-4
        checked += 1
    assert checked == 50


# -- targets -------------------------------------------------------------------


def test_target_local_all_leaf_children(shape32, instances32):
    # walk a real proof to a node whose cut produced only terminal children
    root, cfg = _root(instances32, shape32, 8)
    result = run_proof(root, benchmark_policy(3), cfg)

    def zero_global(positions):
        return np.zeros(len(positions))

    found = []

    def rec(node):
        if node.cut is not None and all(c.cut is None and c.status != Status.ACTIVE
                                        for c in node.children):
            found.append(node)
        for c in node.children:
            rec(c)

    rec(result.root)
    assert found, "complete proofs must end in all-leaf cuts"
    node = found[0]
    got = target_local(zero_global, node.position, node.cut, cfg, w_leaf=0.01)
    assert np.isclose(got, np.log10(1 + 0.01 * len(node.children)))


def test_target_local_one_active_child(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)

    def one_global(positions):
        return np.ones(len(positions))

    kids = make_cut(root, (0, 0), cfg)
    active = sum(1 for _p, st in kids if st == Status.ACTIVE)
    leaves = len(kids) - active
    got = target_local(one_global, root, (0, 0), cfg, w_leaf=0.01)
    assert np.isclose(got, np.log10(1 + 10.0 * active + 0.01 * leaves))


def test_target_local_oracle_reproduces_counts(shape22, instances22):
    # with exact values and zero leaf weight the chain identity
    # C(p) = 1 + C(p; best cut) holds through the log formula
    for inst in instances22:
        root = initial_position(inst, shape22)
        cfg = filter_config_for(inst)
        if classify(root, cfg) != Status.ACTIVE:
            continue
        prover = MinProver(cfg)
        predict_global, _ = _oracle_predictors(cfg, shape22)
        best = min(1 + np.sum([prover.solve(c) for c, st in make_cut(root, cut, cfg)
                               if st == Status.ACTIVE])
                   for cut in available_cuts(root))
        targets = [target_local(predict_global, root, cut, cfg, w_leaf=0.0)
                   for cut in available_cuts(root)]
        assert abs(10 ** min(targets) - prover.solve(root)) < 1e-9 * prover.solve(root) + 1e-9
        assert prover.solve(root) == best


def test_rank_modification_preserves_argmin(shape32, instances32):
    root, cfg = _root(instances32, shape32, 4)
    rng = np.random.default_rng(0)

    def noisy_global(positions):
        return rng.standard_normal(len(positions)) * 0.3

    raw = {c: target_local(noisy_global, root, c, cfg) for c in available_cuts(root)}
    rng2 = np.random.default_rng(0)

    def noisy_global2(positions):
        return rng2.standard_normal(len(positions)) * 0.3

    modified = rank_modified_targets(noisy_global2, root, cfg)
    assert min(raw, key=lambda c: (raw[c], c)) == min(modified, key=lambda c: (modified[c], c))
    ranks = sorted(modified[c] - raw[c] for c in raw)
    assert np.allclose(ranks, np.linspace(0, 1, len(raw)))


def test_rank_single_cut_is_zero(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)
    # manufacture a position with exactly one available cut
    m = root.m.copy()
    for x in range(3):
        for y in range(3):
            if (x, y) != (2, 2):
                keep = int(np.argmax(m[x, y]))
                m[x, y, :] = False
                m[x, y, keep] = True
    p = root.replace_m(m)
    if len(available_cuts(p)) == 1:
        def zero(positions):
            return np.zeros(len(positions))
        mod = rank_modified_targets(zero, p, cfg)
        raw = target_local(zero, p, (2, 2), cfg)
        assert np.isclose(mod[(2, 2)], raw)


def test_oracle_policy_reaches_minimum_all_sigma(shape32, instances32):
    expected = [9, 21, 23, 37, 11, 5, 3, 5, 3, 11, 3, 3, 17]
    for inst in instances32:
        root = initial_position(inst, shape32)
        cfg = filter_config_for(inst)
        _pg, predict_local = _oracle_predictors(cfg, shape32)
        policy = policy_from_value_grid(predict_local)
        result = run_proof(root, policy, cfg)
        assert result.passive_nodes == expected[inst.sigma], inst.sigma


def test_target_global_pruned_exact_when_unpruned(shape32, instances32):
    root, cfg = _root(instances32, shape32, 4)

    def zero_global(positions):
        return np.zeros(len(positions))

    full = run_proof(root, benchmark_policy(3), cfg)
    samples = target_global_pruned(zero_global, full)
    by_key = {p.key(): 10 ** t for p, t in samples}
    from sgproof.prooftree import subtree_passive_counts
    counts = subtree_passive_counts(full)

    def rec(node):
        if node.cut is not None:
            assert np.isclose(by_key[node.position.key()], counts[id(node)])
        for c in node.children:
            rec(c)

    rec(full.root)


def test_target_global_pruned_counts_dropped_mass(shape32, instances32):
    root, cfg = _root(instances32, shape32, 3)

    def zero_global(positions):
        return np.zeros(len(positions))  # each dropped leaf contributes 10^0 = 1

    pruned = run_pruned_proof(root, benchmark_policy(3), cfg, dropout=2,
                              mode="stochastic", rng=np.random.default_rng(1))
    assert pruned.active_leaves > 0
    samples = target_global_pruned(zero_global, pruned)
    root_target = dict((p.key(), t) for p, t in samples)[root.key()]
    expected = pruned.passive_nodes + pruned.active_leaves
    assert np.isclose(10 ** root_target, expected)


def test_target_global_onestep(shape32, instances32):
    root, cfg = _root(instances32, shape32, 8)

    def zero_global(positions):
        return np.zeros(len(positions))

    def zero_local(positions):
        return np.zeros((len(positions), 3, 3))

    pos, val = target_global_onestep(zero_global, zero_local, root, cfg)
    pos2, val2 = target_global_onestep(zero_global, zero_local, root, cfg)
    assert pos is root and val == val2
    kids = make_cut(root, (0, 0), cfg)  # zero grid ties -> row-major first
    active = sum(1 for _p, st in kids if st == Status.ACTIVE)
    leaves = len(kids) - active
    # a zero-valued network contributes 10^0 = 1 per active child
    assert np.isclose(val, np.log10(1 + 1.0 * active + 0.01 * leaves))


# -- pool and training ----------------------------------------------------------


def test_pool_fifo_and_provenance(shape32, instances32):
    root, _cfg = _root(instances32, shape32, 3)
    pool = SamplePool(capacity=5)
    for k in range(8):
        pool.add(GlobalSample(root, float(k), "pruned", sigma=3, proof_index=k))
    assert len(pool) == 5
    assert pool.items[0].target == 3.0
    assert pool.sources() == {"pruned": 5}
    assert pool.sigmas() == {3}
    with pytest.raises(ValueError):
        pool.add(GlobalSample(root, float("nan"), "pruned", 3, 0))


def test_segment_step_accounting(shape32, instances32):
    root, _cfg = _root(instances32, shape32, 3)
    model = PolicyModel(shape32, width_n=1)
    gpool, lpool = SamplePool(), SamplePool()
    for k in range(30):
        gpool.add(GlobalSample(root, 1.0, "t", 3, 0))
        lpool.add(LocalSample(root, (0, 0), 1.0, "t", 3, 0))
    cfg = TrainConfig(width_n=1)
    opt = torch.optim.Adam(model.global_net.parameters())
    rows = []
    steps = train_segment(model, "global", gpool, opt, cfg,
                          np.random.default_rng(0), rows, 0)
    assert steps == 194
    assert len(rows) == 194
    assert sum(1 for _ in GLOBAL_SEGMENT) == 7
    opt2 = torch.optim.Adam(model.local_net.parameters())
    rows2 = []
    steps2 = train_segment(model, "local", lpool, opt2, cfg,
                           np.random.default_rng(0), rows2, 0)
    assert steps2 == 135
    total_samples_global = sum(nb * bs for nb, bs, _ in GLOBAL_SEGMENT)
    total_samples_local = sum(nb * bs for nb, bs, _ in LOCAL_SEGMENT)
    assert (total_samples_global, total_samples_local) == (780, 660)


def test_single_sample_overfit(shape32, instances32):
    torch.manual_seed(1)
    root, _cfg = _root(instances32, shape32, 3)
    model = PolicyModel(shape32, width_n=1)
    pool = SamplePool()
    pool.add(GlobalSample(root, 1.5, "t", 3, 0))
    cfg = TrainConfig(width_n=1, learning_rate=1e-3)
    opt = torch.optim.Adam(model.global_net.parameters(), lr=1e-3)
    rows = []
    train_segment(model, "global", pool, opt, cfg, np.random.default_rng(0), rows, 0)
    first = np.mean([r["loss"] for r in rows[:10]])
    last = np.mean([r["loss"] for r in rows[-10:]])
    assert last < first * 0.1


def test_training_cycle_smoke_and_determinism(shape32, instances32, tmp_path):
    cfg = TrainConfig(cycles=2, width_n=1, segments_per_cycle=1, seed=7,
                      checkpoint_every=0, positions_per_cycle=4)
    runs = []
    for _ in range(2):
        run = training_cycle(shape32, instances32, [8], cfg,
                             out_dir=str(tmp_path))
        runs.append(run)
    assert len(runs[0].node_rows) == 2
    assert runs[0].best_counts[8] >= 3
    a = [(r["proof_index"], r["sigma"], r["passive_nodes"]) for r in runs[0].node_rows]
    b = [(r["proof_index"], r["sigma"], r["passive_nodes"]) for r in runs[1].node_rows]
    assert a == b
    assert len(runs[0].loss_rows) == len(runs[1].loss_rows) > 0
    assert (tmp_path / "model_final.ckpt").exists()


def test_generalization_run_isolates_holdout(shape32, instances32):
    cfg = TrainConfig(cycles=2, width_n=1, segments_per_cycle=1, seed=3,
                      checkpoint_every=0, positions_per_cycle=4)
    run = generalization_run(shape32, instances32, [6, 8], 10, cfg)
    assert {r["sigma"] for r in run.node_rows} == {10}
    assert 10 not in run.pool_sigmas
    assert run.pool_sigmas <= {6, 8}
    with pytest.raises(ValueError):
        generalization_run(shape32, instances32, [6, 8], 8, cfg)


def test_onestep_with_oracle_matches_minimum(shape32, instances32):
    # with exact values and zero leaf weight, the one-step bootstrap from
    # the root reproduces the certified minimum
    inst = instances32[8]
    root = initial_position(inst, shape32)
    cfg = filter_config_for(inst)
    predict_global, predict_local = _oracle_predictors(cfg, shape32)
    _pos, val = target_global_onestep(predict_global, predict_local, root,
                                      cfg, w_leaf=0.0)
    assert np.isclose(10 ** val, 3.0)  # nu_min(sigma=8) = 3
