"""Associativity propagation: three mask-shrinking deduction steps and
their fixpoint.

Each step removes candidate values that cannot occur in any structure
covered by the position; none of them ever removes a covered structure.
The fixpoint `process` is what runs after every cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Position, Shape, stat

_U8 = np.uint8

# The fixpoint is reached long before this in practice; knowledge is a
# bounded, strictly decreasing integer while changes occur.
MAX_SWEEPS = 1000


class PropagationError(RuntimeError):
    pass


def knowledge(p: Position) -> int:
    """Total count of allowed entries across all four masks."""
    return sum(int(x.sum()) for x in p.masks())


def modify_ternary_step(p: Position) -> Position:
    """Shrink t: tau(x,y,z) = phi(x, mu(y,z)) = psi(mu(x,y), z), so value i
    survives only if both sides still offer a witness for it."""
    m8 = p.m.astype(_U8)
    left_wit = np.einsum("yzp,xpi->xyzi", m8, p.l.astype(_U8)) > 0
    right_wit = np.einsum("xyp,pzi->xyzi", m8, p.r.astype(_U8)) > 0
    return Position(p.shape, p.m, p.l, p.r, p.t & left_wit & right_wit)


def modify_leftright_step(p: Position) -> Position:
    """Shrink l and r: when a product is uniquely determined equal to p_hat,
    the corresponding phi / psi value must agree with tau."""
    unique = stat(p.m) == 1
    m_uni = (p.m & unique[:, :, None]).astype(_U8)
    not_t = (~p.t).astype(_U8)
    # l(x, p_hat, i) dies when some unique y.z = p_hat has tau(x,y,z,i) ruled out
    keep_l = np.einsum("yzp,xyzi->xpi", m_uni, not_t) == 0
    # r(p_hat, z, i) dies when some unique x.y = p_hat has tau(x,y,z,i) ruled out
    keep_r = np.einsum("xyp,xyzi->pzi", m_uni, not_t) == 0
    return Position(p.shape, p.m, p.l & keep_l, p.r & keep_r, p.t)


def modify_prod_step(p: Position) -> Position:
    """Shrink m: value p_hat at (x,y) dies when some outer element leaves
    tau with no consistent value, i.e. side value i and ternary value 1-i
    are both excluded."""
    l, r, t = p.l, p.r, p.t
    # left side: compare phi(x', p_hat) with tau(x', x, y)
    viol_l = ((~l[:, None, None, :, 0]) & (~t[:, :, :, None, 1])) \
        | ((~l[:, None, None, :, 1]) & (~t[:, :, :, None, 0]))
    keep_left = ~viol_l.any(axis=0)
    # right side: compare psi(p_hat, z) with tau(x, y, z)
    r_t = r.transpose(1, 0, 2)  # (z, p_hat, i)
    viol_r = ((~r_t[None, None, :, :, 0]) & (~t[:, :, :, None, 1])) \
        | ((~r_t[None, None, :, :, 1]) & (~t[:, :, :, None, 0]))
    keep_right = ~viol_r.any(axis=2)
    return Position(p.shape, p.m & keep_left & keep_right, l, r, t)


def process(p: Position) -> Position:
    """Apply the three steps in order until nothing changes.

    Positions whose m already has an empty column are returned untouched;
    they are impossible and skipped, matching the proof flow.
    """
    if (stat(p.m) == 0).any():
        return p
    cur = p
    for _ in range(MAX_SWEEPS):
        before = knowledge(cur)
        cur = modify_prod_step(modify_leftright_step(modify_ternary_step(cur)))
        if knowledge(cur) >= before:
            return cur
    raise PropagationError("propagation did not reach a fixpoint "
                           f"within {MAX_SWEEPS} sweeps")


@dataclass
class Batch:
    """A list of positions sharing one shape."""

    shape: Shape
    positions: list[Position] = field(default_factory=list)

    def __post_init__(self):
        for p in self.positions:
            if p.shape != self.shape:
                raise ValueError("batch positions must share one shape")

    @property
    def length(self) -> int:
        return len(self.positions)


def process_batch(batch: Batch) -> Batch:
    """Process every position independently; order never matters."""
    return Batch(batch.shape, [process(p) for p in batch.positions])
