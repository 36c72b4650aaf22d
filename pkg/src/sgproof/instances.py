"""Enumeration of the starting instances: canonical left-multiplication
matrices under the row/column permutation action.

A phi matrix is stored canonically as the orbit element minimizing the
tuple of column keys (column j read as a binary number over the A rows)
lexicographically.  Enumeration lists all canonical matrices sorted by
that tuple; the index into the sorted list is sigma.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import FilterConfig, Position, Shape, full_position
from .propagate import process

# 2^(a*b) matrices each canonicalized over a! row permutations: fine up
# to 20 cells, refuse beyond unless forced.
DEFAULT_MAX_CELLS = 20


class EnumerationSizeError(ValueError):
    pass


@dataclass(frozen=True)
class SigmaInstance:
    sigma: int
    phi: np.ndarray          # (a, b) uint8, read-only
    ones: int
    suggested: bool

    @property
    def keys(self) -> tuple[int, ...]:
        a = self.phi.shape[0]
        return tuple(column_key(self.phi, j) for j in range(self.phi.shape[1]))


def column_key(phi: np.ndarray, j: int) -> int:
    """Column j encoded as sum_x phi[x, j] * 2^x."""
    col = np.asarray(phi)[:, j]
    return int((col.astype(np.int64) << np.arange(len(col))).sum())


def _packed_key(keys: np.ndarray, a: int) -> np.ndarray:
    """Pack per-column keys (ascending) into one integer whose ordering is
    the lexicographic ordering of the tuples."""
    packed = np.zeros(keys.shape[0], dtype=np.int64)
    for j in range(keys.shape[1]):
        packed = (packed << a) | keys[:, j]
    return packed


def _min_packed(mats: np.ndarray, a: int, b: int) -> np.ndarray:
    """Minimal packed key over the full orbit of each matrix.

    Column permutations are absorbed by sorting the column keys; row
    permutations are enumerated explicitly.
    """
    pow2 = (1 << np.arange(a)).astype(np.int64)
    best = None
    for perm in itertools.permutations(range(a)):
        keys = (mats[:, perm, :] * pow2[None, :, None]).sum(axis=1)
        keys.sort(axis=1)
        packed = _packed_key(keys, a)
        best = packed if best is None else np.minimum(best, packed)
    return best


def _unpack(packed: int, a: int, b: int) -> np.ndarray:
    keys = []
    v = int(packed)
    for _ in range(b):
        keys.append(v & ((1 << a) - 1))
        v >>= a
    keys.reverse()
    phi = np.array([[(k >> x) & 1 for k in keys] for x in range(a)], dtype=np.uint8)
    return phi


def canonicalize(phi: np.ndarray) -> np.ndarray:
    """Orbit representative minimizing the column-key tuple; idempotent and
    constant on orbits."""
    phi = np.asarray(phi, dtype=np.uint8)
    a, b = phi.shape
    packed = _min_packed(phi[None, :, :], a, b)[0]
    return _unpack(packed, a, b)


def suggested(phi: np.ndarray, shape: Shape) -> bool:
    """An instance is set aside (not suggested) when strictly more than half
    of the columns of the a x (b+1) left multiplication matrix are
    identically zero; the 0_B column always counts as zero.

    Note: this rule reproduces the documented first-suggested index 22 at
    (4, 5) but predicts 6 where the (5, 3) discussion says 7; the one-index
    discrepancy is inherent to the published description and left exposed.
    """
    phi = np.asarray(phi)
    zero_cols = 1 + int(sum(1 for j in range(shape.b) if not phi[:, j].any()))
    return not (zero_cols > (shape.b + 1) / 2)


def enumerate_sigma(shape: Shape, max_cells: int = DEFAULT_MAX_CELLS,
                    force: bool = False) -> list[SigmaInstance]:
    """All canonical instances for the shape, ascending by key tuple."""
    a, b = shape.a, shape.b
    if a * b > max_cells and not force:
        raise EnumerationSizeError(
            f"enumeration of 2^{a * b} matrices exceeds the guard of "
            f"{max_cells} cells; pass force=True / --max-enum to override")
    n = 1 << (a * b)
    idx = np.arange(n, dtype=np.int64)
    bits = ((idx[:, None] >> np.arange(a * b)[None, :]) & 1).astype(np.int64)
    mats = bits.reshape(n, a, b)
    packed = np.unique(_min_packed(mats, a, b))
    packed.sort()
    out = []
    for sigma, pk in enumerate(packed):
        phi = _unpack(int(pk), a, b)
        phi.flags.writeable = False
        out.append(SigmaInstance(
            sigma=sigma,
            phi=phi,
            ones=int(phi.sum()),
            suggested=suggested(phi, shape),
        ))
    return out


def orbit_size(phi: np.ndarray) -> int:
    """Number of distinct matrices in the permutation orbit of phi."""
    phi = np.asarray(phi, dtype=np.uint8)
    a, b = phi.shape
    seen = set()
    for rp in itertools.permutations(range(a)):
        for cp in itertools.permutations(range(b)):
            seen.add(phi[np.ix_(rp, cp)].tobytes())
    return len(seen)


def filter_config_for(inst: SigmaInstance, profile_on: bool = True,
                      half_ones_on: bool = True) -> FilterConfig:
    return FilterConfig(profile_on, half_ones_on, ones_phi=inst.ones)


def initial_position(inst: SigmaInstance, shape: Shape) -> Position:
    """Processed root position for one instance: l done for phi, m and t
    full, r full apart from the structural zero row."""
    return process(full_position(shape, inst.phi))
