"""Cuts, proof trees and cut policies.

A proof expands active positions by branching on the possible values of
one product cell until every leaf is done or impossible.  The official
size of a proof is the number of passive nodes, i.e. nodes at which a
cut was made (the root included when it gets cut).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .core import FilterConfig, Position, Status, classify, stat
from .propagate import process

CutLocation = tuple[int, int]


class CutPolicy(Protocol):
    def decide(self, position: Position, depth: int) -> CutLocation:
        """Pick an available cut for an active position."""
        ...

    def sample_eligible(self, depth: int) -> bool:
        """Whether nodes at this depth may be used as training samples."""
        ...


def available_cuts(p: Position) -> list[CutLocation]:
    """All (x, y) with at least two candidate values, row-major."""
    s = stat(p.m)
    a = p.shape.a
    return [(x, y) for x in range(a) for y in range(a) if s[x, y] >= 2]


def make_cut(p: Position, cut: CutLocation, cfg: FilterConfig
             ) -> list[tuple[Position, Status]]:
    """Children of a cut: one per allowed value, ascending, each processed
    to fixpoint and classified."""
    x, y = cut
    s = int(stat(p.m)[x, y])
    if s < 2:
        raise ValueError(f"cut {cut} is not available (stat {s})")
    out = []
    for z in range(p.shape.bz):
        if p.m[x, y, z]:
            m2 = p.m.copy()
            m2[x, y, :] = False
            m2[x, y, z] = True
            child = process(p.replace_m(m2))
            out.append((child, classify(child, cfg)))
    return out


@dataclass
class ProofNode:
    position: Position
    status: Status
    depth: int
    cut: Optional[CutLocation] = None
    children: list["ProofNode"] = field(default_factory=list)
    dropped: bool = False
    sample_eligible: bool = True


@dataclass
class ProofResult:
    root: ProofNode
    passive_nodes: int
    done_leaves: int
    impossible_leaves: int
    active_leaves: int
    done_positions: list[Position]

    def dropped_nodes(self) -> list[ProofNode]:
        out = []
        _walk(self.root, lambda n: out.append(n) if n.dropped else None)
        return out


def _walk(node: ProofNode, fn: Callable[[ProofNode], None]) -> None:
    fn(node)
    for ch in node.children:
        _walk(ch, fn)


class FixedOrderPolicy:
    """First available location in a fixed preference order."""

    def __init__(self, order: list[CutLocation]):
        self.order = order

    def decide(self, position: Position, depth: int) -> CutLocation:
        s = stat(position.m)
        for c in self.order:
            if s[c] >= 2:
                return c
        raise ValueError("no available cut")

    def sample_eligible(self, depth: int) -> bool:
        return True


def benchmark_policy(a: int) -> FixedOrderPolicy:
    """The heuristic baseline order: (0,0), (1,1), (1,0), (0,1), then the
    remaining locations row-major."""
    first = [(0, 0), (1, 1), (1, 0), (0, 1)]
    rest = [(x, y) for x in range(a) for y in range(a) if (x, y) not in first]
    return FixedOrderPolicy(first + rest)


class RandomPolicy:
    """Uniform choice among available cuts."""

    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def decide(self, position: Position, depth: int) -> CutLocation:
        cuts = available_cuts(position)
        return cuts[int(self.rng.integers(len(cuts)))]

    def sample_eligible(self, depth: int) -> bool:
        return True


class RandomizedPrefixPolicy:
    """Random cuts above switch_depth, the base policy at and below it.
    Only nodes at or below the switching point are sample eligible."""

    def __init__(self, base: CutPolicy, switch_depth: int,
                 rng: np.random.Generator):
        if switch_depth < 0:
            raise ValueError("switch_depth must be >= 0")
        self.base = base
        self.switch_depth = switch_depth
        self.rng = rng

    def decide(self, position: Position, depth: int) -> CutLocation:
        if depth < self.switch_depth:
            cuts = available_cuts(position)
            return cuts[int(self.rng.integers(len(cuts)))]
        return self.base.decide(position, depth)

    def sample_eligible(self, depth: int) -> bool:
        return depth >= self.switch_depth


def run_proof(root: Position, policy: CutPolicy, cfg: FilterConfig) -> ProofResult:
    """Complete proof: expand every active node until none remain."""
    return run_pruned_proof(root, policy, cfg, dropout=None, mode="stochastic",
                            value_fn=None, rng=None)


def run_pruned_proof(root: Position, policy: CutPolicy, cfg: FilterConfig,
                     dropout: Optional[int], mode: str = "stochastic",
                     value_fn: Optional[Callable[[list[Position]], np.ndarray]] = None,
                     rng: Optional[np.random.Generator] = None) -> ProofResult:
    """Proof with per-round dropout: each frontier round expands at most
    `dropout` active nodes; the rest become dropped active leaves.

    mode "stochastic" keeps a uniform sample, mode "adaptive" keeps the
    nodes with the highest value_fn estimate (batched over positions).
    """
    if dropout is not None and dropout < 1:
        raise ValueError("dropout must be >= 1")
    if mode not in ("stochastic", "adaptive"):
        raise ValueError(f"unknown dropout mode {mode!r}")
    if mode == "adaptive" and dropout is not None and value_fn is None:
        raise ValueError("adaptive dropout needs a value function")
    if mode == "stochastic" and dropout is not None and rng is None:
        raise ValueError("stochastic dropout needs an rng")

    status = classify(root, cfg)
    root_node = ProofNode(root, status, depth=0,
                          sample_eligible=policy.sample_eligible(0))
    passive = 0
    done = imp = active_left = 0
    done_positions: list[Position] = []
    if status == Status.DONE:
        done, done_positions = 1, [root]
    elif status == Status.IMPOSSIBLE:
        imp = 1
    frontier = [root_node] if status == Status.ACTIVE else []

    while frontier:
        if dropout is not None and len(frontier) > dropout:
            if mode == "stochastic":
                keep_idx = set(rng.choice(len(frontier), size=dropout,
                                          replace=False).tolist())
            else:
                values = value_fn([n.position for n in frontier])
                order = np.argsort(-np.asarray(values), kind="stable")
                keep_idx = set(order[:dropout].tolist())
            expand, rest = [], []
            for i, n in enumerate(frontier):
                (expand if i in keep_idx else rest).append(n)
            for n in rest:
                n.dropped = True
                active_left += 1
        else:
            expand = frontier
        nxt = []
        for node in expand:
            cut = node.cut = policy.decide(node.position, node.depth)
            passive += 1
            for child_pos, child_status in make_cut(node.position, cut, cfg):
                child = ProofNode(child_pos, child_status, node.depth + 1,
                                  sample_eligible=policy.sample_eligible(node.depth + 1))
                node.children.append(child)
                if child_status == Status.ACTIVE:
                    nxt.append(child)
                elif child_status == Status.DONE:
                    done += 1
                    done_positions.append(child_pos)
                else:
                    imp += 1
        frontier = nxt

    return ProofResult(root_node, passive, done, imp, active_left, done_positions)


def subtree_passive_counts(result: ProofResult) -> dict[int, int]:
    """Passive node count of the subtree under each node (by id)."""
    counts: dict[int, int] = {}

    def rec(node: ProofNode) -> int:
        c = (1 if node.cut is not None else 0) + sum(rec(ch) for ch in node.children)
        counts[id(node)] = c
        return c

    rec(result.root)
    return counts


def proof_result_to_json(result: ProofResult) -> str:
    def enc(node: ProofNode):
        return {
            "depth": node.depth,
            "status": node.status.value,
            "cut": list(node.cut) if node.cut else None,
            "dropped": node.dropped,
            "children": [enc(ch) for ch in node.children],
        }

    return json.dumps({
        "passive_nodes": result.passive_nodes,
        "done": result.done_leaves,
        "impossible": result.impossible_leaves,
        "active_dropped": result.active_leaves,
        "tree": enc(result.root),
    }, indent=1)
