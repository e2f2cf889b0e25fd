"""Exact arithmetic on the Xi-adic circular lattice.

Radii are stored as integer pairs ``(m, eta)`` representing ``m * xi**-eta``
with ``m`` not divisible by ``xi``.  Nothing in this module touches floating
point, so resonance matching is exact equality of canonical pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import total_ordering
from typing import Iterable

# Numerators are held to the signed 128-bit range; Python ints would silently
# grow past it, so the limit is enforced explicitly.
INT_LIMIT = 2**127


class LatticeError(ValueError):
    """Invalid argument for a lattice operation."""


class LatticeOverflowError(ArithmeticError):
    """A numerator left the 128-bit range."""


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def check_xi(xi: int) -> None:
    if not isinstance(xi, int) or xi < 3 or not is_prime(xi):
        raise LatticeError(f"xi must be prime >= 3, got {xi!r}")


def _checked(m: int) -> int:
    if abs(m) >= INT_LIMIT:
        raise LatticeOverflowError(f"numerator {m} exceeds 128-bit range")
    return m


@total_ordering
@dataclass(frozen=True, eq=False)
class LatticeRadius:
    """Canonical radius ``m * xi**-eta``; ``m == 0`` is the zero radius."""

    m: int
    eta: int
    xi: int

    @property
    def is_zero(self) -> bool:
        return self.m == 0

    @property
    def level(self) -> int:
        return self.eta

    @property
    def value(self) -> Fraction:
        if self.m == 0:
            return Fraction(0)
        return Fraction(self.m, self.xi**self.eta)

    def __float__(self) -> float:
        if self.m == 0:
            return 0.0
        return self.m / self.xi**self.eta

    def _key(self) -> tuple[int, int]:
        return (self.m, self.eta) if self.m else (0, 0)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LatticeRadius):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __lt__(self, other: LatticeRadius) -> bool:
        if not isinstance(other, LatticeRadius):
            return NotImplemented
        if self.m == 0 or other.m == 0:
            return self.m < other.m
        xi = _common_xi(self, other)
        level = max(self.eta, other.eta)
        return self.m * xi ** (level - self.eta) < other.m * xi ** (level - other.eta)

    def __repr__(self) -> str:
        if self.m == 0:
            return "ZERO"
        return f"LatticeRadius({self.m}/{self.xi}^{self.eta})"


ZERO = LatticeRadius(0, 0, 0)


def _common_xi(r1: LatticeRadius, r2: LatticeRadius) -> int:
    if r1.m == 0:
        return r2.xi
    if r2.m == 0 or r1.xi == r2.xi:
        return r1.xi
    raise LatticeError(f"radii on different lattices: xi={r1.xi} and xi={r2.xi}")


def upsilon(xi: int, mu: int, nu: int) -> int:
    """Numerator ``xi*mu - nu`` of the level-0 lattice point with indices (mu, nu)."""
    if mu < 1:
        raise LatticeError(f"mu must be >= 1, got {mu}")
    if not 1 <= nu <= xi - 1:
        raise LatticeError(f"nu must lie in [1, {xi - 1}], got {nu}")
    return xi * mu - nu


def decompose(xi: int, m: int) -> tuple[int, int]:
    """Inverse of :func:`upsilon`: the unique ``(mu, nu)`` with ``xi*mu - nu == m``."""
    if m < 1 or m % xi == 0:
        raise LatticeError(f"m must be positive and not divisible by {xi}, got {m}")
    nu = (-m) % xi
    return (m + nu) // xi, nu


def canonical(xi: int, m_raw: int, eta_raw: int) -> LatticeRadius:
    """Canonical representative of ``m_raw * xi**-eta_raw``."""
    if eta_raw < 0:
        raise LatticeError(f"eta must be >= 0, got {eta_raw}")
    if m_raw < 0:
        raise LatticeError("negative radii are not on the lattice")
    if m_raw == 0:
        return ZERO
    m, eta = m_raw, eta_raw
    while m % xi == 0 and eta > 0:
        m //= xi
        eta -= 1
    return LatticeRadius(_checked(m), eta, xi)


def radius(xi: int, m: int, eta: int = 0) -> LatticeRadius:
    """Convenience constructor accepting non-canonical input."""
    return canonical(xi, m, eta)


def _align(r1: LatticeRadius, r2: LatticeRadius) -> tuple[int, int, int, int]:
    xi = _common_xi(r1, r2)
    level = max(r1.eta, r2.eta)
    a = _checked(r1.m * xi ** (level - r1.eta))
    b = _checked(r2.m * xi ** (level - r2.eta))
    return xi, level, a, b


def add(r1: LatticeRadius, r2: LatticeRadius) -> LatticeRadius:
    if r1.m == 0:
        return r2
    if r2.m == 0:
        return r1
    xi, level, a, b = _align(r1, r2)
    return canonical(xi, _checked(a + b), level)


def sub(r_big: LatticeRadius, r_small: LatticeRadius) -> LatticeRadius:
    if r_small.m == 0:
        return r_big
    if r_big.m == 0:
        raise LatticeError("cannot subtract a positive radius from zero")
    xi, level, a, b = _align(r_big, r_small)
    if a < b:
        raise LatticeError(f"{r_big!r} < {r_small!r}")
    return canonical(xi, a - b, level)


def double(r: LatticeRadius) -> LatticeRadius:
    return add(r, r)


def resonance_level_feasible(eta: int, xi_level: int, rho: int) -> bool:
    """Necessary level condition for ``a + b = c`` with levels (eta, xi_level, rho).

    Two summands of different levels keep the deeper level; equal levels can
    only lose depth.
    """
    if min(eta, xi_level, rho) < 0:
        raise LatticeError("levels must be nonnegative")
    return (
        (eta == xi_level >= rho)
        or (eta == rho >= xi_level)
        or (xi_level == rho >= eta)
    )


class TripleKind(Enum):
    MERGE = "merge"
    SPLIT = "split"


@dataclass(frozen=True)
class ResonanceTriple:
    """``a + b == c`` (MERGE) or ``b - a == c`` (SPLIT)."""

    a: LatticeRadius
    b: LatticeRadius
    c: LatticeRadius
    kind: TripleKind

    def is_exact(self) -> bool:
        if self.kind is TripleKind.MERGE:
            return self.a.value + self.b.value == self.c.value
        return self.b > self.a and self.b.value - self.a.value == self.c.value


def enumerate_interactions(
    support: Iterable[LatticeRadius], r: LatticeRadius
) -> list[ResonanceTriple]:
    """All resonances in ``support`` that feed radius ``r``.

    Uses the support as a hash index, so the cost is linear in its size.
    The zero radius never takes part.
    """
    index = {s for s in support if not s.is_zero}
    if r.is_zero or not index:
        return []
    out = []
    for a in sorted(index):
        if a < r:
            b = sub(r, a)
            if b in index and a <= b:
                out.append(ResonanceTriple(a, b, r, TripleKind.MERGE))
        try:
            b = add(r, a)
        except LatticeOverflowError:
            continue
        if b in index:
            out.append(ResonanceTriple(a, b, r, TripleKind.SPLIT))
    return out
