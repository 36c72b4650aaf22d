"""Shapes, masks, positions and their status classification.

A graded semigroup on parts (A, B, I) of sizes (a, b, 1) plus zero is
described by four operations: the product mu: A x A -> B0, the left and
right multiplications phi: A x B0 -> I0 and psi: B0 x A -> I0, and the
derived ternary product tau: A x A x A -> I0.  Partial knowledge about
each operation is a boolean mask whose last axis ranges over candidate
values; a 1 means "still possible".

Index conventions, fixed once and for all:
  A  = {0, .., a-1}
  B0 = {0, .., b} with the zero of B encoded as index b
  I0 = {0, 1} with index 0 the zero, index 1 the nonzero element
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

ZERO_I = 0
ONE_I = 1


class Status(enum.Enum):
    ACTIVE = "active"
    DONE = "done"
    IMPOSSIBLE = "impossible"


@dataclass(frozen=True)
class Shape:
    """Sizes of the graded parts.  bz is |B0|, iz is |I0|."""

    a: int
    b: int

    def __post_init__(self):
        if self.a < 2 or self.b < 2:
            raise ValueError(f"need a >= 2 and b >= 2, got ({self.a}, {self.b})")

    @property
    def bz(self) -> int:
        return self.b + 1

    @property
    def iz(self) -> int:
        return 2

    @property
    def zero_b(self) -> int:
        return self.b


@dataclass(frozen=True)
class FilterConfig:
    """Toggles for the two additional filters plus the ones budget of phi.

    ones_phi is the number of nonzero entries of the fixed left
    multiplication; the half-ones condition says psi may never be forced
    to carry strictly more nonzero entries than that.
    """

    profile_on: bool = True
    half_ones_on: bool = True
    ones_phi: int = 0

    def with_filters(self, profile_on: bool, half_ones_on: bool) -> "FilterConfig":
        return FilterConfig(profile_on, half_ones_on, self.ones_phi)


class Position:
    """A quadruple of masks (m, l, r, t), immutable after construction.

    m: (a, a, bz)   candidates for mu
    l: (a, bz, 2)   candidates for phi (always done: phi is fixed per proof)
    r: (bz, a, 2)   candidates for psi
    t: (a, a, a, 2) candidates for tau
    """

    __slots__ = ("shape", "m", "l", "r", "t", "_key")

    def __init__(self, shape: Shape, m: np.ndarray, l: np.ndarray,
                 r: np.ndarray, t: np.ndarray):
        a, bz = shape.a, shape.bz
        if m.shape != (a, a, bz) or l.shape != (a, bz, 2) \
                or r.shape != (bz, a, 2) or t.shape != (a, a, a, 2):
            raise ValueError("mask dimensions do not match shape")
        self.shape = shape
        self.m = _freeze(m)
        self.l = _freeze(l)
        self.r = _freeze(r)
        self.t = _freeze(t)
        self._key = None

    def masks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.m, self.l, self.r, self.t

    def key(self) -> bytes:
        """Canonical bit-packed digest, usable for memoization."""
        if self._key is None:
            flat = np.concatenate([x.ravel() for x in self.masks()])
            self._key = np.packbits(flat).tobytes()
        return self._key

    def __eq__(self, other):
        return isinstance(other, Position) and self.shape == other.shape \
            and self.key() == other.key()

    def __hash__(self):
        return hash((self.shape, self.key()))

    def replace_m(self, m: np.ndarray) -> "Position":
        return Position(self.shape, m, self.l, self.r, self.t)


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=bool)
    if out is arr and arr.flags.writeable:
        out = arr.copy()
    out.flags.writeable = False
    return out


def stat(mask: np.ndarray) -> np.ndarray:
    """Count of allowed values at each coordinate (sum along the value axis)."""
    return mask.sum(axis=-1, dtype=np.int64)


def multiplex(table: np.ndarray, depth: int) -> np.ndarray:
    """Turn a value table into its done mask with `depth` candidate values."""
    table = np.asarray(table)
    if table.min() < 0 or table.max() >= depth:
        raise ValueError(f"table entries must lie in [0, {depth})")
    mask = np.zeros(table.shape + (depth,), dtype=bool)
    np.put_along_axis(mask, table[..., None], True, axis=-1)
    return mask


def demultiplex(mask: np.ndarray) -> np.ndarray:
    """Inverse of multiplex on done masks."""
    if not (stat(mask) == 1).all():
        raise ValueError("mask is not done")
    return mask.argmax(axis=-1)


def covers(table: np.ndarray, mask: np.ndarray) -> bool:
    """True iff every table value is allowed by the mask."""
    table = np.asarray(table)
    if table.shape != mask.shape[:-1]:
        raise ValueError("table and mask dimensions do not match")
    return bool(np.take_along_axis(mask, table[..., None], axis=-1).all())


def subset(p: Position, q: Position) -> bool:
    """Componentwise mask inclusion."""
    if p.shape != q.shape:
        raise ValueError("positions have different shapes")
    return all(bool((~pm | qm).all()) for pm, qm in zip(p.masks(), q.masks()))


def possible(p: Position) -> bool:
    """No mask has an empty candidate column."""
    return all((stat(x) > 0).all() for x in p.masks())


def is_done(p: Position) -> bool:
    """The product mask m is fully determined (r and t need not be)."""
    return bool((stat(p.m) == 1).all())


def half_ones_filter(p: Position, cfg: FilterConfig) -> bool:
    """Fires when psi is forced to exceed the ones budget of phi.

    Counts entries of r on the B rows that are uniquely determined with
    the nonzero value; strictly more of them than ones_phi contradicts
    the standing assumption ones(psi) <= ones(phi).
    """
    b = p.shape.b
    forced_one = p.r[:b, :, ONE_I] & ~p.r[:b, :, ZERO_I]
    return int(forced_one.sum()) > cfg.ones_phi


def profile_filter(p: Position) -> bool:
    """Fires when two graded elements are forced to share a multiplication
    profile, i.e. to give the same answers in all products with other
    elements.  Such structures arise by doubling an element of a smaller
    classification and are excluded.

    Checked pairs:
      * two B elements: equal phi columns and uniquely determined, equal
        psi rows (fires on partial positions);
      * a B element against the zero element: phi column identically
        zero and psi row determined to zero (fires on partial positions);
      * two A elements / an A element against zero: the analogous
        conditions on mu rows and columns, phi rows and psi columns.
        These bind only once the product table is complete, so they are
        evaluated on done positions only.
    """
    a, b = p.shape.a, p.shape.b
    l, r = p.l, p.r
    stat_r = stat(r)

    # B-side checks: can fire while the position is still being cut.
    for q in range(b):
        row_det = (stat_r[q] == 1).all()
        if not row_det:
            continue
        if not l[:, q, ONE_I].any() and not r[q, :, ONE_I].any():
            return True  # duplicates the zero element
        for q2 in range(q + 1, b):
            if (l[:, q] == l[:, q2]).all() and (stat_r[q2] == 1).all() \
                    and (r[q] == r[q2]).all():
                return True

    # A-side checks: only meaningful once mu is fully determined.
    if not is_done(p):
        return False
    m = p.m
    for x in range(a):
        col_det_x = (stat_r[:, x] == 1).all()
        if col_det_x and not l[x, :, ONE_I].any() and not r[:, x, ONE_I].any() \
                and m[x, :, p.shape.zero_b].all() and m[:, x, p.shape.zero_b].all():
            return True  # duplicates the zero element
        for x2 in range(x + 1, a):
            if not (l[x] == l[x2]).all():
                continue
            if not ((m[x] == m[x2]).all() and (m[:, x] == m[:, x2]).all()):
                continue
            if col_det_x and (stat_r[:, x2] == 1).all() \
                    and (r[:, x] == r[:, x2]).all():
                return True
    return False


def classify(p: Position, cfg: FilterConfig) -> Status:
    """Status of a position under the given filter configuration.

    Impossible beats done: a complete table that trips a filter is
    discarded, not collected.
    """
    if not possible(p):
        return Status.IMPOSSIBLE
    if cfg.profile_on and profile_filter(p):
        return Status.IMPOSSIBLE
    if cfg.half_ones_on and half_ones_filter(p, cfg):
        return Status.IMPOSSIBLE
    if is_done(p):
        return Status.DONE
    return Status.ACTIVE


def full_position(shape: Shape, phi: np.ndarray) -> Position:
    """The raw starting position for a fixed phi matrix (a x b, boolean).

    l is the done mask of phi extended by phi(x, 0_B) = 0; r starts full
    apart from the structural row psi(0_B, .) = 0; m and t start full.
    """
    a, b, bz = shape.a, shape.b, shape.bz
    phi = np.asarray(phi)
    if phi.shape != (a, b):
        raise ValueError(f"phi must be {a}x{b}")
    m = np.ones((a, a, bz), dtype=bool)
    l = np.zeros((a, bz, 2), dtype=bool)
    for x in range(a):
        for j in range(b):
            l[x, j, int(phi[x, j])] = True
        l[x, shape.zero_b, ZERO_I] = True
    r = np.ones((bz, a, 2), dtype=bool)
    r[shape.zero_b, :, ONE_I] = False
    t = np.ones((a, a, a, 2), dtype=bool)
    return Position(shape, m, l, r, t)


def position_to_text(p: Position) -> str:
    """Serialize a position: shape line, then one 0/1 token per value-axis
    column of each mask, row-major.  Round-trips bit-exactly."""
    lines = [f"{p.shape.a} {p.shape.b}"]
    for name, mask in zip("mlrt", p.masks()):
        depth = mask.shape[-1]
        cols = mask.reshape(-1, depth)
        toks = ["".join("1" if v else "0" for v in col) for col in cols]
        lines.append(f"{name} " + " ".join(toks))
    return "\n".join(lines) + "\n"


def position_from_text(text: str) -> Position:
    lines = [ln for ln in text.strip().splitlines() if ln.strip()]
    a, b = map(int, lines[0].split())
    shape = Shape(a, b)
    dims = {
        "m": (a, a, shape.bz),
        "l": (a, shape.bz, 2),
        "r": (shape.bz, a, 2),
        "t": (a, a, a, 2),
    }
    masks = {}
    for ln in lines[1:]:
        name, *toks = ln.split()
        shp = dims[name]
        depth = shp[-1]
        flat = np.array([[c == "1" for c in tok] for tok in toks], dtype=bool)
        if flat.shape != (np.prod(shp[:-1]), depth):
            raise ValueError(f"bad token count for mask {name}")
        masks[name] = flat.reshape(shp)
    return Position(shape, masks["m"], masks["l"], masks["r"], masks["t"])
