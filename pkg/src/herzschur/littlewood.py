"""Littlewood splittings: a matrix as a sum of a column-bounded and a row-bounded part."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .kernel_core import as_array

BRUTE_FORCE_CAP = 8


class LittlewoodError(ValueError):
    pass


def _square(a) -> np.ndarray:
    a = np.asarray(as_array(a))
    if a.ndim != 2:
        raise LittlewoodError("need a matrix")
    n = max(a.shape)
    if a.shape[0] == a.shape[1]:
        return a
    out = np.zeros((n, n), dtype=a.dtype)
    out[:a.shape[0], :a.shape[1]] = a
    return out


def t2_norm(a, cap: int = BRUTE_FORCE_CAP) -> float:
    """``sup (sum_{i in F1, j in F2} |a_ij|^2 / |F1|)^(1/2)`` over ``|F1| = |F2|``.

    Every row subset ``F1`` is enumerated; for a given ``F1`` the best ``F2``
    of the same size takes the largest column sums over ``F1``, so the
    supremum is exact.  Rectangular input is padded with zeros.
    """
    sq = np.abs(_square(a)) ** 2
    n = sq.shape[0]
    if n > cap:
        raise LittlewoodError(
            f"{n}x{n} is above the brute-force cap of {cap}; use l_norm_upper(littlewood_split(a)) "
            "and its factor-2 sandwich instead")
    best = 0.0
    for k in range(1, n + 1):
        for rows in combinations(range(n), k):
            cols = np.sort(sq[list(rows)].sum(axis=0))[::-1]
            best = max(best, float(cols[:k].sum()) / k)
    return float(np.sqrt(best))


@dataclass(frozen=True)
class LittlewoodSplit:
    """``a = b + c`` with disjoint supports.

    ``col_bound`` is the largest Euclidean column norm of ``b`` and
    ``row_bound`` the largest Euclidean row norm of ``c``.
    """

    b: np.ndarray
    c: np.ndarray
    supports_disjoint: bool
    col_bound: float
    row_bound: float

    def to_json(self) -> dict:
        def enc(m):
            return {"re": m.real.tolist(), "im": m.imag.tolist()} if np.iscomplexobj(m) else m.tolist()

        return {"b": enc(self.b), "c": enc(self.c), "supports_disjoint": self.supports_disjoint,
                "col_bound": self.col_bound, "row_bound": self.row_bound,
                "l_norm_upper": l_norm_upper(self)}


def littlewood_split(a) -> LittlewoodSplit:
    """Peel off the lightest row (into ``c``) and the lightest column (into ``b``) until nothing is left.

    At each step both are chosen on the remaining square block, lowest index
    first on ties; their shared entry goes to ``b``.  Each peeled line has
    squared norm at most the block average, which is at most ``t2_norm(a)**2``.
    """
    raw = np.asarray(as_array(a))
    shape = raw.shape
    full = _square(raw)
    sq = np.abs(full) ** 2
    n = full.shape[0]
    in_b = np.zeros((n, n), dtype=bool)
    rows, cols = list(range(n)), list(range(n))
    while rows:
        block = sq[np.ix_(rows, cols)]
        i = rows[int(np.argmin(block.sum(axis=1)))]
        j = cols[int(np.argmin(block.sum(axis=0)))]
        in_b[rows, j] = True
        rows.remove(i)
        cols.remove(j)
    b = np.where(in_b, full, 0)[:shape[0], :shape[1]]
    c = np.where(in_b, 0, full)[:shape[0], :shape[1]]
    disjoint = bool(not np.any((b != 0) & (c != 0)))
    col_bound = float(np.sqrt((np.abs(b) ** 2).sum(axis=0).max())) if b.size else 0.0
    row_bound = float(np.sqrt((np.abs(c) ** 2).sum(axis=1).max())) if c.size else 0.0
    return LittlewoodSplit(b, c, disjoint, col_bound, row_bound)


def l_norm_upper(split: LittlewoodSplit) -> float:
    return max(split.col_bound, split.row_bound)
