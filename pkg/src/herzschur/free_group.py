"""Free groups, their balls and radial kernels, and the homogeneous tree with a fixed end.

Letters are nonzero integers: ``i`` is the generator ``a_i`` and ``-i`` its
inverse.  Tree vertices are ``(k, digits)``: start at spine vertex ``s_k``
and step down along ``digits``.  The contraction ``c`` moves one step toward
the fixed end, which lies in the direction of growing ``k`` along the spine.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .kernel_core import Kernel, RadialProfile, lift_radial
from .qtransform import chi_norm
from .toeplitz import NotBoundedError, OmegaNormCertificate, diagonal_limit_phi0, omega_norm

BALL_CAP = 20_000


class BallTooLarge(ValueError):
    pass


class TreeError(ValueError):
    pass


# --------------------------------------------------------------------------
# words


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(x) for x in self.letters)
        if any(x == 0 for x in letters):
            raise ValueError("0 is not a letter")
        if any(a == -b for a, b in zip(letters, letters[1:])):
            raise ValueError(f"word {letters} is not reduced")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def reduce(cls, letters: Iterable[int]) -> "Word":
        stack: list[int] = []
        for x in letters:
            if stack and stack[-1] == -x:
                stack.pop()
            else:
                stack.append(int(x))
        return cls(tuple(stack))

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        a, b = self.letters, other.letters
        k = 0
        while k < min(len(a), len(b)) and a[len(a) - 1 - k] == -b[k]:
            k += 1
        return Word(a[:len(a) - k] + b[k:])

    def inv(self) -> "Word":
        return Word(tuple(-x for x in reversed(self.letters)))

    def __str__(self) -> str:
        if not self.letters:
            return "e"
        return "".join(f"a{abs(x)}" + ("^-1" if x < 0 else "") for x in self.letters)


def ball_size(n_generators: int, radius: int) -> int:
    return 1 + sum(2 * n_generators * (2 * n_generators - 1) ** (k - 1) for k in range(1, radius + 1))


def enumerate_ball(n_generators: int, radius: int, cap: int = BALL_CAP) -> list[Word]:
    """Reduced words of length at most ``radius``, by length then lexicographically."""
    if n_generators < 2:
        raise ValueError("need at least 2 generators")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    count = ball_size(n_generators, radius)
    if count > cap:
        raise BallTooLarge(f"ball has {count} words, above the cap of {cap}")
    letters = [x for i in range(1, n_generators + 1) for x in (i, -i)]
    out = [Word()]
    layer = [()]
    for _ in range(radius):
        layer = [w + (x,) for w in layer for x in letters if not w or w[-1] != -x]
        out.extend(Word(w) for w in layer)
    return out


def _common_prefix(ball: list[Word]) -> np.ndarray:
    size = len(ball)
    depth = max((len(w) for w in ball), default=0)
    pad = np.zeros((size, depth), dtype=np.int64)
    for i, w in enumerate(ball):
        pad[i, :len(w)] = w.letters
    lengths = np.array([len(w) for w in ball])
    prefix = np.zeros((size, size), dtype=np.int64)
    alive = np.ones((size, size), dtype=bool)
    for pos in range(depth):
        col = pad[:, pos]
        alive &= (col[:, None] == col[None, :]) & (col[:, None] != 0)
        prefix += alive
    return np.minimum(prefix, np.minimum.outer(lengths, lengths))


def word_distances(ball: list[Word]) -> np.ndarray:
    """``|y^-1 x|`` for all pairs of reduced words."""
    lengths = np.array([len(w) for w in ball])
    return lengths[:, None] + lengths[None, :] - 2 * _common_prefix(ball)


def group_matrix(profile: RadialProfile | Callable, ball: list[Word]) -> Kernel:
    """Entry ``(x, y)`` is ``phi(|y^-1 x|)``."""
    d = word_distances(ball)
    if isinstance(profile, RadialProfile):
        vals = profile.values(np.arange(int(d.max()) + 1 if d.size else 1))
    else:
        vals = np.array([profile(k) for k in range(int(d.max()) + 1 if d.size else 1)])
    return Kernel(vals[d])


def _q_of(group) -> float | None:
    if group in (None, "infinite", "finf", "inf"):
        return None
    if isinstance(group, str) and group.startswith("f"):
        group = int(group[1:])
    n = int(group)
    if n < 2:
        raise ValueError("need at least 2 generators")
    return 2 * n - 1


def radial_b2_norm(profile: RadialProfile, group="infinite", n: int = 200) -> OmegaNormCertificate:
    """Norm of a radial multiplier from its Hankel kernel.

    ``group`` is ``"infinite"`` (or ``"finf"``) for infinitely many generators,
    else the number of generators (or ``"f2"``, ``"f3"``, ...).
    """
    phi = lift_radial(profile)
    try:
        q = _q_of(group)
        return omega_norm(phi, n) if q is None else chi_norm(phi, q, n)
    except NotBoundedError as exc:
        raise NotBoundedError(f"not a Herz-Schur multiplier at declared tail ({exc})") from exc


def c_constants(profile: RadialProfile):
    """``(c_plus, c_minus, remainder)`` with ``phi(n) = c_plus + c_minus (-1)^n + remainder(n)``."""
    c_plus, c_minus = diagonal_limit_phi0(lift_radial(profile))

    def remainder(k):
        k = np.asarray(k)
        return profile.values(k) - c_plus - c_minus * np.where(k % 2 == 0, 1.0, -1.0)

    return c_plus, c_minus, remainder


# --------------------------------------------------------------------------
# homogeneous tree with a fixed end


@dataclass(frozen=True, order=True)
class TreeVertex:
    spine: int
    digits: tuple[int, ...] = ()

    @property
    def height(self) -> int:
        """Horocycle index; ``c`` raises it by one."""
        return self.spine - len(self.digits)

    def contract(self) -> "TreeVertex":
        if self.digits:
            return TreeVertex(self.spine, self.digits[:-1])
        return TreeVertex(self.spine + 1)

    def children(self, q: int) -> list["TreeVertex"]:
        if self.digits:
            return [TreeVertex(self.spine, self.digits + (j,)) for j in range(q)]
        return [TreeVertex(self.spine - 1)] + [TreeVertex(self.spine, (j,)) for j in range(1, q)]

    def neighbors(self, q: int) -> list["TreeVertex"]:
        return [self.contract()] + self.children(q)


def confluence(x: TreeVertex, y: TreeVertex) -> tuple[TreeVertex, int, int]:
    """First common vertex of the rays toward the end, with the step counts from ``x`` and ``y``."""
    m = n = 0
    while x.height < y.height:
        x, m = x.contract(), m + 1
    while y.height < x.height:
        y, n = y.contract(), n + 1
    while x != y:
        x, y, m, n = x.contract(), y.contract(), m + 1, n + 1
    return x, m, n


@dataclass
class TreePortion:
    """Ball of the given radius around the spine vertex ``s_0`` in the tree of degree ``q + 1``."""

    q: int
    radius: int
    vertices: list[TreeVertex] = field(init=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.q < 1:
            raise TreeError("q must be at least 1")
        root = TreeVertex(0)
        seen = {root: 0}
        order = [root]
        frontier = deque([root])
        while frontier:
            v = frontier.popleft()
            if seen[v] == self.radius:
                continue
            for w in v.neighbors(self.q):
                if w not in seen:
                    seen[w] = seen[v] + 1
                    order.append(w)
                    frontier.append(w)
        self.vertices = order
        self.index = {v: i for i, v in enumerate(order)}

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, v) -> bool:
        return v in self.index

    def mn_pair(self, x: TreeVertex, y: TreeVertex) -> tuple[int, int]:
        for v in (x, y):
            if v not in self.index:
                raise TreeError(f"vertex {v} is outside the constructed portion")
        return mn_pair(x, y)

    def mn_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        size = len(self.vertices)
        m = np.zeros((size, size), dtype=np.int64)
        n = np.zeros((size, size), dtype=np.int64)
        for i, x in enumerate(self.vertices):
            for j in range(i, size):
                a, b = mn_pair(x, self.vertices[j])
                m[i, j], n[i, j] = a, b
                m[j, i], n[j, i] = b, a
        return m, n

    def graph_distances(self) -> np.ndarray:
        """Breadth-first distances inside the portion, independent of the contraction."""
        size = len(self.vertices)
        adj = [[self.index[w] for w in v.neighbors(self.q) if w in self.index] for v in self.vertices]
        out = np.full((size, size), -1, dtype=np.int64)
        for s in range(size):
            out[s, s] = 0
            frontier = deque([s])
            while frontier:
                u = frontier.popleft()
                for w in adj[u]:
                    if out[s, w] < 0:
                        out[s, w] = out[s, u] + 1
                        frontier.append(w)
        return out


def mn_pair(x: TreeVertex, y: TreeVertex) -> tuple[int, int]:
    """Least ``(m, n)`` with ``c^m(x)`` on the ray from ``y`` and ``c^n(y)`` on the ray from ``x``."""
    _, m, n = confluence(x, y)
    return m, n


def additivity_check(portion: TreePortion) -> int:
    """Count triples with ``m(x,y) - n(x,y) != m(x,z) - n(x,z) + m(z,y) - n(z,y)``."""
    m, n = portion.mn_matrices()
    d = m - n
    lhs = d[:, None, :]
    rhs = d[:, :, None] + d[None, :, :]
    # rhs[x, z, y] = d[x, z] + d[z, y]
    return int(np.count_nonzero(lhs != rhs))


def symmetry_violations(portion: TreePortion) -> int:
    """Pairs where ``mn_pair(x, y)`` is not the swap of ``mn_pair(y, x)``."""
    bad = 0
    vs = portion.vertices
    for x in vs:
        for y in vs:
            a, b = mn_pair(x, y)
            if (b, a) != mn_pair(y, x):
                bad += 1
    return bad


def tree_lift_phi(phi: Callable[[int, int], complex], portion: TreePortion) -> Kernel:
    """Kernel ``(x, y) -> phi(m(x, y), n(x, y))`` on the portion."""
    m, n = portion.mn_matrices()
    size = len(portion)
    vals = np.array([[phi(int(m[i, j]), int(n[i, j])) for j in range(size)] for i in range(size)])
    return Kernel(vals)


def word_vertex_map(n_generators: int, radius: int) -> dict[Word, TreeVertex]:
    """Graph isomorphism from the word ball onto the tree ball of degree ``2 n_generators``.

    Both balls are explored breadth first and unmatched neighbors are paired in
    sorted order.
    """
    q = 2 * n_generators - 1
    portion = TreePortion(q, radius)
    letters = [x for i in range(1, n_generators + 1) for x in (i, -i)]
    w0 = Word()
    mapping = {w0: TreeVertex(0)}
    used = {TreeVertex(0)}
    frontier = deque([(w0, TreeVertex(0), 0)])
    while frontier:
        w, v, depth = frontier.popleft()
        if depth == radius:
            continue
        new_words = sorted(w * Word((x,)) for x in letters if len(w * Word((x,))) > len(w))
        new_verts = sorted(u for u in v.neighbors(q) if u not in used and u in portion)
        if len(new_words) != len(new_verts):
            raise TreeError("degree mismatch while matching balls")
        for nw, nv in zip(new_words, new_verts):
            mapping[nw] = nv
            used.add(nv)
            frontier.append((nw, nv, depth + 1))
    return mapping
