"""Training targets for the paired networks and the learned cut policy.

The global network regresses log10 of the passive-node count below a
position; the local network regresses, per cut, log10 of (1 + the sum
of child counts), rank-modified.  Done and impossible children enter
with a small fixed weight instead of 0 for stability; the official node
counts never include these weights.
"""

from __future__ import annotations

import numpy as np

from ..core import FilterConfig, Position, Status
from ..prooftree import (CutLocation, ProofNode, ProofResult, available_cuts,
                         make_cut)


def _contributions(n_values: list[float], n_leaves: int, w_leaf: float) -> float:
    return float(sum(10.0 ** v for v in n_values) + n_leaves * w_leaf)


def target_local(predict_global, p: Position, cut: CutLocation,
                 cfg: FilterConfig, w_leaf: float = 0.01) -> float:
    """log10(1 + sum of child contributions) for one cut."""
    children = make_cut(p, cut, cfg)
    active = [pos for pos, st in children if st == Status.ACTIVE]
    leaves = len(children) - len(active)
    values = list(predict_global(active)) if active else []
    return float(np.log10(1.0 + _contributions(values, leaves, w_leaf)))


def rank_modified_targets(predict_global, p: Position, cfg: FilterConfig,
                          w_leaf: float = 0.01) -> dict[CutLocation, float]:
    """Raw local targets plus the normalized rank of each cut.

    Ranks run 0..1 ascending in the raw target (row-major tie-break), so
    the argmin is preserved exactly.
    """
    cuts = available_cuts(p)
    raw = {c: target_local(predict_global, p, c, cfg, w_leaf) for c in cuts}
    order = sorted(cuts, key=lambda c: (raw[c], c))
    denom = max(len(cuts) - 1, 1)
    return {c: raw[c] + i / denom for i, c in enumerate(order)}


def policy_from_value_grid(predict_local):
    """Policy choosing the available cut with the smallest local
    prediction; ties resolve to the first cut in row-major order."""

    class _Policy:
        def decide(self, position: Position, depth: int) -> CutLocation:
            cuts = available_cuts(position)
            grid = predict_local([position])[0]
            return min(cuts, key=lambda c: (grid[c], c))

        def sample_eligible(self, depth: int) -> bool:
            return True

    return _Policy()


def target_global_pruned(predict_global, result: ProofResult
                         ) -> list[tuple[Position, float]]:
    """Method-1 samples: for every eligible passive node of a pruned proof,
    log10 of (passive count under it + estimated mass of dropped leaves)."""
    samples: list[tuple[Position, float]] = []
    dropped = result.dropped_nodes()
    drop_mass = {id(n): 10.0 ** float(v)
                 for n, v in zip(dropped, predict_global([n.position for n in dropped]))} \
        if dropped else {}

    def rec(node: ProofNode) -> tuple[int, float]:
        if node.cut is None:
            return 0, drop_mass.get(id(node), 0.0)
        count, mass = 1, 0.0
        for ch in node.children:
            c, m = rec(ch)
            count += c
            mass += m
        if node.sample_eligible:
            samples.append((node.position, float(np.log10(count + mass))))
        return count, mass

    if result.root.cut is not None:
        rec(result.root)
    return samples


def target_global_onestep(predict_global, predict_local, p: Position,
                          cfg: FilterConfig, w_leaf: float = 0.01
                          ) -> tuple[Position, float]:
    """Method-2 sample: expand only the locally-best cut and bootstrap the
    child values through the global network."""
    policy = policy_from_value_grid(predict_local)
    cut = policy.decide(p, 0)
    return p, target_local(predict_global, p, cut, cfg, w_leaf)
