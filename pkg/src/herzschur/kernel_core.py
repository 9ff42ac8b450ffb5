"""Kernels on finite index sets, radial profiles and their Hankel lifts.

A :class:`Kernel` is a dense finite section of a function on N0 x N0 (or on a
finite index set).  A :class:`RadialProfile` is a sequence ``phi(n)`` given by
an explicit prefix and a declared tail rule, so diagonal limits and decay
envelopes are known exactly rather than guessed from samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

HERMITIAN_RTOL = 1e-12


class KernelError(ValueError):
    pass


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _is_hermitian(a: np.ndarray) -> bool:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return True
    return float(np.max(np.abs(a - a.conj().T))) <= HERMITIAN_RTOL * scale


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense N x N section of a kernel.

    Real entries are stored as float64, complex ones as complex128.  The
    ``hermitian`` flag is detected from the data unless given explicitly;
    declaring it for non-hermitian data raises.
    """

    entries: np.ndarray
    hermitian: bool = None  # type: ignore[assignment]

    def __post_init__(self):
        a = np.asarray(self.entries)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise KernelError(f"kernel entries must be a nonempty square matrix, got shape {a.shape}")
        a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
        herm = _is_hermitian(a)
        if self.hermitian and not herm:
            raise KernelError("entries are not hermitian")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "hermitian", herm if self.hermitian is None else bool(self.hermitian))

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.entries)

    def __getitem__(self, idx):
        return self.entries[idx]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Kernel):
            return NotImplemented
        return self.entries.shape == other.entries.shape and bool(np.array_equal(self.entries, other.entries))

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __add__(self, other):
        return Kernel(self.entries + as_array(other))

    def __sub__(self, other):
        return Kernel(self.entries - as_array(other))

    def __neg__(self):
        return Kernel(-self.entries)

    def __mul__(self, s):
        return Kernel(self.entries * s)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return Kernel(self.entries / s)

    def block(self, n: int) -> "Kernel":
        """Leading n x n section."""
        if not 1 <= n <= self.size:
            raise KernelError(f"section size {n} outside 1..{self.size}")
        return Kernel(self.entries[:n, :n])

    def to_json(self) -> dict:
        a = self.entries
        if self.is_real:
            flat = a.ravel().tolist()
        else:
            flat = [[z.real, z.imag] for z in a.ravel().tolist()]
        return {"n": self.size, "real": self.is_real, "entries": flat}

    @classmethod
    def from_json(cls, obj: dict) -> "Kernel":
        try:
            n = int(obj["n"])
            real = bool(obj.get("real", True))
            raw = obj["entries"]
        except (KeyError, TypeError) as exc:
            raise KernelError(f"malformed kernel JSON: {exc}") from None
        arr = np.asarray(raw, dtype=float)
        if not real:
            arr = arr[..., 0] + 1j * arr[..., 1]
        if arr.size != n * n:
            raise KernelError(f"kernel JSON declares n={n} but holds {arr.size} entries")
        return cls(arr.reshape(n, n))


def as_array(k) -> np.ndarray:
    if isinstance(k, Kernel):
        return k.entries
    return np.asarray(k)


# --------------------------------------------------------------------------
# tail rules

Limits = Union[tuple[float, float], None]


class TailRule:
    """How a radial sequence continues beyond its explicit prefix.

    Rules are evaluated at absolute indices.  ``limits`` gives the even and
    odd limits (possibly infinite) or None when there is no limit.
    ``envelope_at(n0)`` returns ``(e0, rho)`` with
    ``|phi(s) - L_parity(s)| <= e0 * rho**(s - n0)`` for every ``s >= n0``,
    or None if no geometric envelope is known from ``n0`` on.
    """

    def values(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def limits(self) -> Limits:
        raise NotImplementedError

    def envelope_at(self, n0: int):
        return None

    def envelope_start(self) -> int:
        return 0

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Constants(TailRule):
    """``c_plus + c_minus * (-1)**n``; the zero tail is ``Constants(0, 0)``."""

    c_plus: float = 0.0
    c_minus: float = 0.0

    def values(self, n):
        n = np.asarray(n)
        return self.c_plus + self.c_minus * np.where(n % 2 == 0, 1.0, -1.0)

    def limits(self):
        return (self.c_plus + self.c_minus, self.c_plus - self.c_minus)

    def envelope_at(self, n0):
        return (0.0, 0.0)

    def to_json(self):
        if self.c_plus == 0 and self.c_minus == 0:
            return {"kind": "zero"}
        return {"kind": "constants", "c_plus": self.c_plus, "c_minus": self.c_minus}


ZERO = Constants(0.0, 0.0)


@dataclass(frozen=True)
class Geometric(TailRule):
    """``c_plus + c_minus * (-1)**n + scale * r**n``."""

    r: float
    scale: float = 1.0
    c_plus: float = 0.0
    c_minus: float = 0.0

    def values(self, n):
        n = np.asarray(n, dtype=float)
        return Constants(self.c_plus, self.c_minus).values(n) + self.scale * np.power(self.r, n)

    def limits(self):
        base_e, base_o = self.c_plus + self.c_minus, self.c_plus - self.c_minus
        r, s = self.r, self.scale
        if s == 0 or abs(r) < 1:
            return (base_e, base_o)
        if r == 1:
            return (base_e + s, base_o + s)
        if r == -1:
            return (base_e + s, base_o - s)
        if r > 1:
            inf = math.copysign(math.inf, s)
            return (inf, inf)
        return None

    def envelope_at(self, n0):
        if self.scale == 0 or abs(self.r) == 1:
            return (0.0, 0.0)
        if abs(self.r) > 1:
            return None
        return (abs(self.scale) * abs(self.r) ** n0, abs(self.r))

    def to_json(self):
        return {"kind": "analytic", "rule": "geometric", "r": self.r, "scale": self.scale,
                "c_plus": self.c_plus, "c_minus": self.c_minus}


@dataclass(frozen=True)
class Polynomial(TailRule):
    """``sum(coeffs[k] * n**k)``."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        c = [float(x) for x in self.coeffs]
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(c) or (0.0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def values(self, n):
        return np.polynomial.polynomial.polyval(np.asarray(n, dtype=float), self.coeffs)

    def limits(self):
        if self.degree == 0:
            return (self.coeffs[0], self.coeffs[0])
        inf = math.copysign(math.inf, self.coeffs[-1])
        return (inf, inf)

    def envelope_at(self, n0):
        return (0.0, 0.0) if self.degree == 0 else None

    def growth_start(self) -> int:
        """First index past which the polynomial is increasing and convex."""
        p = np.polynomial.Polynomial(self.coeffs)
        roots = []
        for d in (p.deriv(1), p.deriv(2)):
            if d.degree() >= 1:
                roots.extend(r.real for r in d.roots() if abs(r.imag) < 1e-9)
        return max(0, math.floor(max(roots, default=0.0)) + 1)

    def to_json(self):
        return {"kind": "analytic", "rule": "polynomial", "coeffs": list(self.coeffs)}


@dataclass(frozen=True)
class ExpTail(TailRule):
    """``exp(-t * inner(n))``."""

    t: float
    inner: TailRule

    def values(self, n):
        return np.exp(-self.t * self.inner.values(n))

    def limits(self):
        lim = self.inner.limits()
        if lim is None:
            return None
        return tuple(0.0 if L == math.inf else math.exp(-self.t * L) for L in lim)

    def _growth(self):
        inner = self.inner
        if isinstance(inner, Polynomial) and inner.degree >= 1 and inner.coeffs[-1] > 0:
            return inner
        return None

    def envelope_start(self):
        g = self._growth()
        if g is not None:
            return g.growth_start()
        return self.inner.envelope_start()

    def envelope_at(self, n0):
        lim = self.inner.limits()
        if lim is None:
            return None
        if all(math.isfinite(L) for L in lim):
            env = self.inner.envelope_at(n0)
            if env is None:
                return None
            e0, rho = env
            # |e^{-t v} - e^{-t L}| <= e^{-t L} (e^{t |v - L|} - 1), and the
            # right side contracts at least as fast as |v - L| by convexity.
            return (math.exp(-self.t * min(lim)) * math.expm1(self.t * e0), rho)
        g = self._growth()
        if g is None or n0 < g.growth_start():
            return None
        p0 = float(g.values(n0))
        step = float(g.values(n0 + 1)) - p0
        return (math.exp(-self.t * p0), math.exp(-self.t * step))

    def to_json(self):
        return {"kind": "analytic", "rule": "exp", "t": self.t, "inner": self.inner.to_json()}


def _exp_of(rule: TailRule, t: float) -> TailRule:
    if isinstance(rule, Constants) or (isinstance(rule, Polynomial) and rule.degree == 0):
        even, odd = (math.exp(-t * L) for L in rule.limits())
        return Constants((even + odd) / 2, (even - odd) / 2)
    if isinstance(rule, Polynomial) and rule.degree == 1 and rule.coeffs[1] > 0:
        c0, c1 = rule.coeffs
        return Geometric(math.exp(-t * c1), math.exp(-t * c0))
    return ExpTail(t, rule)


def tail_from_json(obj: dict) -> TailRule:
    kind = obj.get("kind")
    if kind == "zero":
        return ZERO
    if kind == "constants":
        return Constants(float(obj.get("c_plus", 0.0)), float(obj.get("c_minus", 0.0)))
    if kind != "analytic":
        raise KernelError(f"unknown tail kind {kind!r}")
    rule = obj.get("rule")
    if rule == "geometric":
        return Geometric(float(obj["r"]), float(obj.get("scale", 1.0)),
                         float(obj.get("c_plus", 0.0)), float(obj.get("c_minus", 0.0)))
    if rule == "exponential":
        return Geometric(math.exp(-float(obj["t"])), float(obj.get("scale", 1.0)),
                         float(obj.get("c_plus", 0.0)), float(obj.get("c_minus", 0.0)))
    if rule == "polynomial":
        return Polynomial(tuple(float(c) for c in obj["coeffs"]))
    if rule == "exp":
        return ExpTail(float(obj["t"]), tail_from_json(obj["inner"]))
    raise KernelError(f"unknown analytic rule {rule!r}")


@dataclass(frozen=True)
class RadialProfile:
    """Sequence ``phi(n)``: explicit values for ``n < len(prefix)``, tail rule after."""

    prefix: tuple[float, ...] = ()
    tail: TailRule = ZERO

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(float(x) for x in self.prefix))

    @property
    def prefix_end(self) -> int:
        """First index governed by the tail rule."""
        return len(self.prefix)

    def values(self, n) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        out = np.asarray(self.tail.values(n), dtype=float).copy()
        if self.prefix:
            pre = np.asarray(self.prefix)
            inside = n < len(pre)
            out[inside] = pre[n[inside]]
        return out

    def __call__(self, n: int) -> float:
        return float(self.values(np.array([n]))[0])

    def limits(self) -> Limits:
        return self.tail.limits()

    @classmethod
    def constant(cls, c: float) -> "RadialProfile":
        return cls((), Constants(float(c), 0.0))

    @classmethod
    def geometric(cls, r: float, scale: float = 1.0) -> "RadialProfile":
        return cls((), Geometric(r, scale))

    @classmethod
    def exponential(cls, t: float) -> "RadialProfile":
        return cls.geometric(math.exp(-t))

    @classmethod
    def polynomial(cls, *coeffs: float) -> "RadialProfile":
        return cls((), Polynomial(tuple(coeffs)))

    @classmethod
    def finite(cls, values) -> "RadialProfile":
        """Finitely supported sequence (zero after the given values)."""
        return cls(tuple(values), ZERO)

    def to_json(self) -> dict:
        return {"prefix": list(self.prefix), "tail": self.tail.to_json()}

    @classmethod
    def from_json(cls, obj: dict) -> "RadialProfile":
        if not isinstance(obj, dict):
            raise KernelError("profile JSON must be an object")
        return cls(tuple(obj.get("prefix", ())), tail_from_json(obj.get("tail", {"kind": "zero"})))


@dataclass(frozen=True)
class HankelKernel:
    """The kernel ``(m, n) -> phi(m + n + offset)`` on N0 x N0.

    With ``difference=True`` it is ``phi(s) - phi(s + 2)`` at ``s = m + n + offset``,
    i.e. the kernel minus its diagonal shift.
    """

    profile: RadialProfile
    offset: int = 0
    difference: bool = False

    def dot(self, s) -> np.ndarray:
        """Anti-diagonal values at ``m + n = s``."""
        s = np.asarray(s, dtype=np.int64) + self.offset
        v = self.profile.values(s)
        if self.difference:
            v = v - self.profile.values(s + 2)
        return v

    def __call__(self, m: int, n: int) -> float:
        return float(self.dot(np.array([m + n]))[0])

    def section(self, n: int) -> Kernel:
        if n < 1:
            raise KernelError("section size must be positive")
        d = self.dot(np.arange(2 * n - 1))
        idx = np.add.outer(np.arange(n), np.arange(n))
        return Kernel(d[idx], hermitian=True)

    def limits(self) -> Limits:
        """(even, odd) limits of the anti-diagonal sequence ``s -> dot(s)``."""
        lim = self.profile.limits()
        if lim is None:
            return None
        if self.difference:
            # phi(s) - phi(s+2) has limit L - L = 0 when L is finite
            if not all(math.isfinite(L) for L in lim):
                return None
            return (0.0, 0.0)
        return lim if self.offset % 2 == 0 else (lim[1], lim[0])

    def envelope_at(self, s0: int):
        """Geometric bound on ``|dot(s) - limit|`` for anti-diagonals ``s >= s0``.

        Requires ``s0`` to lie in the tail region of the profile.
        """
        base = s0 + self.offset
        if base < max(self.profile.prefix_end, self.profile.tail.envelope_start()):
            return None
        env = self.profile.tail.envelope_at(base)
        if env is None:
            return None
        e0, rho = env
        if self.difference:
            e0 = e0 * (1 + rho * rho)
        return (e0, rho)

    def envelope_start(self) -> int:
        """First anti-diagonal index at which :meth:`envelope_at` may apply."""
        need = max(self.profile.prefix_end, self.profile.tail.envelope_start()) - self.offset
        return max(0, need)


AnyKernel = Union[Kernel, HankelKernel]


def lift_radial(profile: RadialProfile) -> HankelKernel:
    return HankelKernel(profile)


def shift_sigma(k: AnyKernel) -> AnyKernel:
    """``k(m + 1, n + 1)``; finite sections lose one row and column."""
    if isinstance(k, HankelKernel):
        return HankelKernel(k.profile, k.offset + 2, k.difference)
    a = as_array(k)
    if a.shape[0] < 2:
        raise KernelError("shifting a size-1 kernel leaves nothing")
    return Kernel(a[1:, 1:])


def tau(k) -> Kernel:
    """Shift down and right, zero-filling row and column 0 (size grows by one)."""
    a = as_array(k)
    out = np.zeros((a.shape[0] + 1,) * 2, dtype=a.dtype)
    out[1:, 1:] = a
    return Kernel(out)


def tau_star(k) -> Kernel:
    return shift_sigma(k if isinstance(k, Kernel) else Kernel(k))


def exp_scale(k: AnyKernel, t: float) -> AnyKernel:
    """Entrywise ``exp(-t * k)``."""
    if not t > 0:
        raise KernelError("t must be positive")
    if isinstance(k, HankelKernel):
        if k.difference:
            raise KernelError("exp_scale of a differenced Hankel kernel is not a Hankel lift")
        p = k.profile
        prof = RadialProfile(tuple(np.exp(-t * np.asarray(p.prefix, dtype=float))), _exp_of(p.tail, t))
        return HankelKernel(prof, k.offset)
    return Kernel(np.exp(-t * as_array(k)))


def section(k: AnyKernel, n: int | None = None) -> Kernel:
    """N-section of either kind; Kernel inputs may be cut to a leading block."""
    if isinstance(k, HankelKernel):
        if n is None:
            raise KernelError("a truncation size is needed for Hankel kernels")
        return k.section(n)
    k = k if isinstance(k, Kernel) else Kernel(k)
    return k if n is None or n >= k.size else k.block(n)
