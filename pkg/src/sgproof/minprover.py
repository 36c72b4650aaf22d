"""Exact minimal proof sizes by expansion, bound propagation and pruning.

Every distinct position owns one BoundNode carrying a bracket
[lower, upper] on the minimal passive-node count of a proof rooted
there.  Uppers are realized by concrete policy proofs; lowers start at 1
for any active node.  Brackets tighten by propagating child sums through
cuts; cuts whose lower sum exceeds the best upper sum are pruned.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import FilterConfig, Position, Status, classify
from .prooftree import (CutLocation, CutPolicy, available_cuts, benchmark_policy,
                        make_cut, run_proof)


class ProverError(RuntimeError):
    pass


@dataclass
class BoundNode:
    position: Position
    status: Status
    lower: int
    upper: int
    depth: int
    expanded: bool = False
    children: dict[CutLocation, list[bytes]] = field(default_factory=dict)
    pruned_cuts: set[CutLocation] = field(default_factory=set)

    @property
    def resolved(self) -> bool:
        return self.lower == self.upper


@dataclass
class MinimizeResult:
    nu_min: int
    root_status: Status
    matrix: np.ndarray            # exact per-cut sums, -1 where unavailable
    nodes_created: int
    nodes_expanded: int
    iterations: int
    seconds: float


class MinProver:
    """Shared-store prover: identical positions (bit-equal masks) share one
    node, so values computed for one branch are reused everywhere."""

    def __init__(self, cfg: FilterConfig, upper_policy: Optional[CutPolicy] = None,
                 max_nodes: int = 2_000_000):
        self.cfg = cfg
        self.upper_policy = upper_policy
        self.max_nodes = max_nodes
        self.store: dict[bytes, BoundNode] = {}
        self.expanded_count = 0
        self.iterations = 0
        self._root_bracket: tuple[int, int] | None = None

    # -- node management ----------------------------------------------------

    def node_for(self, position: Position, depth: int,
                 status: Optional[Status] = None) -> BoundNode:
        key = position.key()
        node = self.store.get(key)
        if node is not None:
            node.depth = min(node.depth, depth)
            return node
        if len(self.store) >= self.max_nodes:
            raise ProverError(
                f"node store exceeded {self.max_nodes} positions; "
                f"current root bracket {self._root_bracket}")
        if status is None:
            status = classify(position, self.cfg)
        if status == Status.ACTIVE:
            policy = self.upper_policy or benchmark_policy(position.shape.a)
            upper = run_proof(position, policy, self.cfg).passive_nodes
            node = BoundNode(position, status, lower=1, upper=upper, depth=depth)
        else:
            node = BoundNode(position, status, lower=0, upper=0, depth=depth)
        self.store[key] = node
        return node

    def expand(self, node: BoundNode) -> None:
        if node.expanded or node.status != Status.ACTIVE:
            return
        for cut in available_cuts(node.position):
            keys = []
            for child_pos, child_status in make_cut(node.position, cut, self.cfg):
                child = self.node_for(child_pos, node.depth + 1, child_status)
                keys.append(child_pos.key())
            node.children[cut] = keys
        node.expanded = True
        self.expanded_count += 1

    # -- bound machinery ----------------------------------------------------

    def bound_for_cut(self, node: BoundNode, cut: CutLocation) -> tuple[int, int]:
        """Componentwise sums of child brackets for an expanded cut."""
        keys = node.children.get(cut)
        if keys is None:
            raise ProverError(f"cut {cut} not expanded")
        lo = sum(self.store[k].lower for k in keys)
        hi = sum(self.store[k].upper for k in keys)
        return lo, hi

    def propagate_bounds(self, node: BoundNode) -> bool:
        """Tighten one node's bracket from its unpruned cuts; True on change."""
        if not node.expanded or node.resolved:
            return False
        lows, highs = [], []
        for cut in node.children:
            if cut in node.pruned_cuts:
                continue
            lo, hi = self.bound_for_cut(node, cut)
            lows.append(lo)
            highs.append(hi)
        if not lows:
            raise ProverError("all cuts pruned at an unresolved node")
        new_lower = max(node.lower, 1 + min(lows))
        new_upper = min(node.upper, 1 + min(highs))
        if new_lower > new_upper:
            raise ProverError("bracket inverted; bounds are inconsistent")
        changed = (new_lower, new_upper) != (node.lower, node.upper)
        node.lower, node.upper = new_lower, new_upper
        return changed

    def prune(self, node: BoundNode) -> set[CutLocation]:
        """Drop cuts whose lower sum exceeds the best upper sum."""
        if not node.expanded or node.resolved:
            return set()
        sums = {cut: self.bound_for_cut(node, cut)
                for cut in node.children if cut not in node.pruned_cuts}
        best_upper = min(hi for _, hi in sums.values())
        newly = {cut for cut, (lo, _) in sums.items() if lo > best_upper}
        if newly == set(sums):
            raise ProverError("pruning would eliminate every cut")
        node.pruned_cuts |= newly
        return newly

    def _sweep(self) -> bool:
        changed = False
        for node in self.store.values():
            if self.propagate_bounds(node):
                changed = True
        return changed

    def _settle(self) -> None:
        while True:
            while self._sweep():
                pass
            pruned_any = False
            for node in self.store.values():
                if self.prune(node):
                    pruned_any = True
            if not pruned_any:
                return

    def _frontier(self, target: BoundNode) -> list[BoundNode]:
        """Unexpanded active nodes reachable from target through unresolved
        expanded nodes via unpruned cuts; lowest depth layer only."""
        seen = set()
        found: list[BoundNode] = []
        stack = [target]
        while stack:
            node = stack.pop()
            key = node.position.key()
            if key in seen or node.resolved:
                continue
            seen.add(key)
            if not node.expanded:
                if node.status == Status.ACTIVE:
                    found.append(node)
                continue
            for cut, keys in node.children.items():
                if cut in node.pruned_cuts:
                    continue
                stack.extend(self.store[k] for k in keys)
        if not found:
            return []
        d = min(n.depth for n in found)
        return [n for n in found if n.depth == d]

    # -- entry points ---------------------------------------------------------

    def solve(self, position: Position, depth: int = 0) -> int:
        """Exact minimal passive-node count below a position."""
        node = self.node_for(position, depth)
        while not node.resolved:
            self._root_bracket = (node.lower, node.upper)
            frontier = self._frontier(node)
            if not frontier:
                self._settle()
                if not node.resolved:
                    raise ProverError("no frontier but target unresolved")
                break
            for n in frontier:
                self.expand(n)
            self.iterations += 1
            self._settle()
        return node.lower

    def cut_matrix(self, position: Position, depth: int = 0) -> np.ndarray:
        """Exact per-cut child sums at a position: entry (x, y) is the total
        minimal node count over the children of that cut, -1 if the cut is
        unavailable.  Every child is resolved exactly, so no entry is a
        mere bound."""
        a = position.shape.a
        mat = np.full((a, a), -1, dtype=np.int64)
        for cut in available_cuts(position):
            total = 0
            for child_pos, child_status in make_cut(position, cut, self.cfg):
                if child_status == Status.ACTIVE:
                    total += self.solve(child_pos, depth + 1)
            mat[cut] = total
        return mat


def minimize(root: Position, cfg: FilterConfig,
             upper_policy: Optional[CutPolicy] = None,
             max_nodes: int = 2_000_000) -> MinimizeResult:
    """Certified minimal proof size from a processed root, with the exact
    matrix of per-cut totals at the root."""
    t0 = time.time()
    prover = MinProver(cfg, upper_policy, max_nodes=max_nodes)
    status = classify(root, cfg)
    a = root.shape.a
    if status != Status.ACTIVE:
        return MinimizeResult(0, status, np.full((a, a), -1, dtype=np.int64),
                              0, 0, 0, time.time() - t0)
    mat = prover.cut_matrix(root)
    nu = 1 + int(mat[mat >= 0].min())
    return MinimizeResult(nu, status, mat, len(prover.store),
                          prover.expanded_count, prover.iterations,
                          time.time() - t0)
