"""Training loop: sample generation, the fixed descent schedule, and the
proof/train cycle for the paired networks.

Each cycle runs the current policy on the chosen instances (recording
official node counts), generates fresh samples by pruned proofs (method
1, stochastic and value-prioritized dropout), one-step bootstraps
(method 2) and randomized-prefix exploration, then trains the global
and local networks alternately on the fixed minibatch schedule.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import torch

from ..core import FilterConfig, Position, Shape, Status
from ..instances import SigmaInstance, filter_config_for, initial_position
from ..prooftree import (ProofResult, RandomizedPrefixPolicy, available_cuts,
                         make_cut, run_proof, run_pruned_proof)
from .encoder import encode_batch
from .model import PolicyModel, save_checkpoint
from .pool import GlobalSample, LocalSample, SamplePool
from .targets import (policy_from_value_grid, rank_modified_targets,
                      target_global_onestep, target_global_pruned)

# (minibatches, minibatch size, descent steps per batch); totals: 21
# minibatches, 780 samples, 194 steps global; 19, 660, 135 local.
GLOBAL_SEGMENT = [(2, 20, 20), (1, 30, 30), (2, 40, 10), (5, 60, 10),
                  (3, 20, 8), (3, 40, 5), (5, 30, 3)]
LOCAL_SEGMENT = [(3, 20, 20), (1, 30, 15), (3, 60, 4), (3, 40, 10),
                 (3, 20, 3), (3, 40, 2), (3, 30, 1)]


@dataclass
class TrainConfig:
    w_leaf: float = 0.01
    dropout: int = 60
    segments_per_cycle: int = 2
    cycles: int = 100
    width_n: int = 4
    learning_rate: float = 1e-3
    pool_capacity: int = 20_000
    positions_per_cycle: int = 16
    noise_scale: float = 0.02
    perturb_scale: float = 1e-3
    profile_on: bool = True
    half_ones_on: bool = True
    seed: int = 0
    checkpoint_every: int = 50


@dataclass
class TrainingRun:
    model: PolicyModel
    node_rows: list[dict] = field(default_factory=list)
    loss_rows: list[dict] = field(default_factory=list)
    best_counts: dict[int, int] = field(default_factory=dict)
    pool_sigmas: set[int] = field(default_factory=set)


def _mse_loss(pred: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    return torch.mean((pred - target) ** 2)


def train_segment(model: PolicyModel, kind: str, pool: SamplePool,
                  optimizer: torch.optim.Optimizer, cfg: TrainConfig,
                  rng: np.random.Generator, loss_rows: list[dict],
                  wall_step: int, noise: float = 0.0) -> int:
    """One schedule table's worth of descent on one network.  Returns the
    updated wall step counter; every step appends a loss record."""
    table = GLOBAL_SEGMENT if kind == "global" else LOCAL_SEGMENT
    net = model.global_net if kind == "global" else model.local_net
    if len(pool) == 0:
        return wall_step
    net.train()
    for n_batches, batch_size, steps in table:
        for _ in range(n_batches):
            batch = pool.sample(rng, batch_size)
            x = torch.from_numpy(encode_batch([s.position for s in batch]))
            if noise > 0:
                x = x + noise * torch.from_numpy(
                    rng.standard_normal(x.shape).astype(np.float32))
            target = torch.tensor([s.target for s in batch], dtype=torch.float32)
            if kind == "local":
                xs = torch.tensor([s.cut[0] for s in batch])
                ys = torch.tensor([s.cut[1] for s in batch])
            for _ in range(steps):
                optimizer.zero_grad()
                out = net(x)
                pred = out if kind == "global" else out[torch.arange(len(batch)), xs, ys]
                loss = _mse_loss(pred, target)
                loss.backward()
                optimizer.step()
                wall_step += 1
                loss_rows.append({"wall_step": wall_step, "network": kind,
                                  "minibatch_size": batch_size,
                                  "loss": float(loss.item())})
    return wall_step


def _perturb_weights(model: PolicyModel, scale: float,
                     rng: np.random.Generator) -> None:
    with torch.no_grad():
        for net in model.nets().values():
            for p in net.parameters():
                jitter = torch.from_numpy(
                    rng.standard_normal(p.shape).astype(np.float32))
                p.mul_(1.0 + scale * jitter)


def _collect_active_positions(result: ProofResult, limit: int,
                              rng: np.random.Generator) -> list[Position]:
    found: list[Position] = []

    def rec(node):
        if node.status == Status.ACTIVE:
            found.append(node.position)
        for ch in node.children:
            rec(ch)

    rec(result.root)
    if len(found) <= limit:
        return found
    idx = rng.choice(len(found), size=limit, replace=False)
    return [found[int(i)] for i in idx]


def _generate_samples(model: PolicyModel, roots: dict[int, tuple[Position, FilterConfig]],
                      global_pool: SamplePool, local_pool: SamplePool,
                      cfg: TrainConfig, rng: np.random.Generator,
                      proof_index: int,
                      full_trees: Optional[dict[int, ProofResult]] = None) -> None:
    policy = policy_from_value_grid(model.predict_local)
    for sigma, (root, fcfg) in roots.items():
        trees = []
        if full_trees and sigma in full_trees:
            # the metric proof is a dropout run that never pruned, so its
            # subtree counts are exact
            trees.append(("full", full_trees[sigma]))
        trees.append(("pruned", run_pruned_proof(
            root, policy, fcfg, dropout=cfg.dropout, mode="stochastic", rng=rng)))
        trees.append(("adaptive", run_pruned_proof(
            root, policy, fcfg, dropout=cfg.dropout, mode="adaptive",
            value_fn=model.predict_global)))
        switch = int(rng.integers(1, max(2, root.shape.a ** 2 // 2)))
        explore = RandomizedPrefixPolicy(policy, switch, rng)
        trees.append(("explore", run_pruned_proof(
            root, explore, fcfg, dropout=cfg.dropout, mode="stochastic", rng=rng)))

        positions: list[Position] = []
        for source, result in trees:
            for pos, target in target_global_pruned(model.predict_global, result):
                global_pool.add(GlobalSample(pos, target, source, sigma, proof_index))
            positions.extend(_collect_active_positions(result, cfg.positions_per_cycle, rng))
        if not positions:
            continue
        idx = rng.choice(len(positions), size=min(cfg.positions_per_cycle,
                                                  len(positions)), replace=False)
        for i in idx:
            pos = positions[int(i)]
            for cut, tval in rank_modified_targets(
                    model.predict_global, pos, fcfg, cfg.w_leaf).items():
                local_pool.add(LocalSample(pos, cut, tval, "rank", sigma, proof_index))
            _, tval = target_global_onestep(model.predict_global,
                                            model.predict_local, pos, fcfg, cfg.w_leaf)
            global_pool.add(GlobalSample(pos, tval, "onestep", sigma, proof_index))
            # widen the pool with raw generated children of a random cut
            cuts = available_cuts(pos)
            cut = cuts[int(rng.integers(len(cuts)))]
            for child, st in make_cut(pos, cut, fcfg):
                if st == Status.ACTIVE and rng.random() < 0.25:
                    for c2, t2 in rank_modified_targets(
                            model.predict_global, child, fcfg, cfg.w_leaf).items():
                        local_pool.add(LocalSample(child, c2, t2, "childexp",
                                                   sigma, proof_index))


def _run_cycle_loop(shape: Shape, train_roots: dict[int, tuple[Position, FilterConfig]],
                    metric_roots: dict[int, tuple[Position, FilterConfig]],
                    cfg: TrainConfig, out_dir: Optional[str] = None,
                    model: Optional[PolicyModel] = None,
                    stop_when=None) -> TrainingRun:
    rng = np.random.default_rng(cfg.seed)
    torch.manual_seed(cfg.seed)
    if model is None:
        model = PolicyModel(shape, cfg.width_n)
    run = TrainingRun(model=model)
    global_pool = SamplePool(cfg.pool_capacity)
    local_pool = SamplePool(cfg.pool_capacity)
    optimizers = {
        "global": torch.optim.Adam(model.global_net.parameters(), lr=cfg.learning_rate),
        "local": torch.optim.Adam(model.local_net.parameters(), lr=cfg.learning_rate),
    }
    wall_step = 0
    early = max(1, cfg.cycles // 3)
    for proof_index in range(cfg.cycles):
        in_early = proof_index < early
        noise = cfg.noise_scale * max(0.0, 1.0 - proof_index / early) if in_early else 0.0
        if in_early and cfg.perturb_scale > 0:
            _perturb_weights(model, cfg.perturb_scale, rng)

        policy = policy_from_value_grid(model.predict_local)
        full_trees = {}
        for sigma, (root, fcfg) in metric_roots.items():
            t0 = time.time()
            result = run_proof(root, policy, fcfg)
            if sigma in train_roots:
                full_trees[sigma] = result
            run.node_rows.append({
                "proof_index": proof_index, "sigma": sigma,
                "passive_nodes": result.passive_nodes,
                "done": result.done_leaves, "impossible": result.impossible_leaves,
                "seconds": time.time() - t0,
            })
            best = run.best_counts.get(sigma)
            if best is None or result.passive_nodes < best:
                run.best_counts[sigma] = result.passive_nodes

        if stop_when is not None and stop_when(run):
            break

        _generate_samples(model, train_roots, global_pool, local_pool,
                          cfg, rng, proof_index, full_trees)
        for _ in range(cfg.segments_per_cycle):
            wall_step = train_segment(model, "global", global_pool,
                                      optimizers["global"], cfg, rng,
                                      run.loss_rows, wall_step, noise)
            wall_step = train_segment(model, "local", local_pool,
                                      optimizers["local"], cfg, rng,
                                      run.loss_rows, wall_step, noise)

        if out_dir and cfg.checkpoint_every and \
                (proof_index + 1) % cfg.checkpoint_every == 0:
            save_checkpoint(f"{out_dir}/model_{proof_index + 1:05d}.ckpt", model)
    run.pool_sigmas = global_pool.sigmas() | local_pool.sigmas()
    if out_dir:
        save_checkpoint(f"{out_dir}/model_final.ckpt", model)
    return run


def _roots_for(shape: Shape, instances: list[SigmaInstance], sigmas: list[int],
               cfg: TrainConfig) -> dict[int, tuple[Position, FilterConfig]]:
    out = {}
    for s in sigmas:
        inst = instances[s]
        fcfg = filter_config_for(inst, cfg.profile_on, cfg.half_ones_on)
        out[s] = (initial_position(inst, shape), fcfg)
    return out


def training_cycle(shape: Shape, instances: list[SigmaInstance],
                   sigmas: list[int], cfg: TrainConfig,
                   out_dir: Optional[str] = None,
                   model: Optional[PolicyModel] = None,
                   stop_when=None) -> TrainingRun:
    """Train and prove on the same instance set.  stop_when, if given, is
    called with the run after each proof round and ends the cycle early
    when it returns True."""
    roots = _roots_for(shape, instances, sigmas, cfg)
    return _run_cycle_loop(shape, roots, roots, cfg, out_dir, model, stop_when)


def generalization_run(shape: Shape, instances: list[SigmaInstance],
                       train_sigmas: list[int], held_out_sigma: int,
                       cfg: TrainConfig, out_dir: Optional[str] = None
                       ) -> TrainingRun:
    """Train on some instances, measure proofs only on a held-out one."""
    if held_out_sigma in train_sigmas:
        raise ValueError("held-out instance must not appear in the training set")
    train_roots = _roots_for(shape, instances, train_sigmas, cfg)
    metric_roots = _roots_for(shape, instances, [held_out_sigma], cfg)
    run = _run_cycle_loop(shape, train_roots, metric_roots, cfg, out_dir)
    if held_out_sigma in run.pool_sigmas:
        raise RuntimeError("held-out instance leaked into the sample pool")
    return run
