"""Position encoding for the value networks.

A position becomes a float tensor of shape (f, a, a) with
f = 5(b+1) + 2a feature channels over the (x, y) grid:

  [0, b+1)            m, candidate axis as channels
  [b+1, 3(b+1))       l, (value pair per B0 slot), broadcast along y
  [3(b+1), 5(b+1))    r, broadcast along x (its A axis rides on y)
  [5(b+1), f)         t, (z, i) pairs as channels

Each candidate column is normalized to sum 1 before placement; columns
with no candidates stay zero.
"""

from __future__ import annotations

import numpy as np

from ..core import Position, Shape


def feature_count(shape: Shape) -> int:
    return 5 * (shape.b + 1) + 2 * shape.a


def flat_dim(shape: Shape) -> int:
    """Length of the naive flattening of all four masks."""
    a, bz = shape.a, shape.b + 1
    return a * a * bz + 4 * a * bz + 2 * a ** 3


def _normalized(mask: np.ndarray) -> np.ndarray:
    x = mask.astype(np.float32)
    s = x.sum(axis=-1, keepdims=True)
    return np.divide(x, s, out=np.zeros_like(x), where=s > 0)


def encode(p: Position) -> np.ndarray:
    a, bz = p.shape.a, p.shape.bz
    m = _normalized(p.m)                      # (a, a, bz)
    l = _normalized(p.l)                      # (a, bz, 2)
    r = _normalized(p.r)                      # (bz, a, 2)
    t = _normalized(p.t)                      # (a, a, a, 2)
    feats = np.empty((feature_count(p.shape), a, a), dtype=np.float32)
    feats[:bz] = m.transpose(2, 0, 1)
    l_flat = l.reshape(a, 2 * bz).T           # channel = p_hat*2 + i
    feats[bz:3 * bz] = l_flat[:, :, None]
    r_flat = r.transpose(1, 0, 2).reshape(a, 2 * bz).T
    feats[3 * bz:5 * bz] = r_flat[:, None, :]
    feats[5 * bz:] = t.reshape(a, a, 2 * a).transpose(2, 0, 1)
    return feats


def encode_batch(positions: list[Position]) -> np.ndarray:
    if not positions:
        raise ValueError("empty batch")
    return np.stack([encode(p) for p in positions])
