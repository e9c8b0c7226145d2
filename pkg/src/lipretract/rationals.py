"""Exact rational helpers and enumerations of the rationals in [0, 1]."""
from __future__ import annotations

from fractions import Fraction
from math import ceil, floor, gcd
from typing import Iterable, Iterator, Sequence

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


class HorizonExhausted(RuntimeError):
    """The enumeration scan hit its index bound before finding a match."""


def as_rational(value) -> Fraction:
    """Parse ``"p/q"`` strings, ints and Fractions. Floats are rejected."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if not text or any(c in text for c in ".eE"):
            raise ValueError(f"not an exact rational: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot read {value!r} as an exact rational")


def fmt(q: Fraction) -> str:
    """Canonical ``p/q`` text (integers keep the ``/1``)."""
    return f"{q.numerator}/{q.denominator}"


def decimal_text(q: Fraction, digits: int = 12) -> str:
    return format(float(q), f".{digits}g")


def _totient(n: int) -> int:
    result, m, p = n, n, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


class RationalEnumeration:
    """A fixed injective listing q_1, q_2, ... of the rationals in [0, 1].

    Indices are 1-based. Subclasses supply :meth:`__iter__`; the generic
    :meth:`first_in` scans the listing, which is slow but always correct.
    """

    name = "abstract"

    def __iter__(self) -> Iterator[Fraction]:
        raise NotImplementedError

    def at(self, n: int) -> Fraction:
        if n < 1:
            raise IndexError("enumeration indices start at 1")
        for i, q in enumerate(self, start=1):
            if i == n:
                return q
        raise IndexError(n)

    def index(self, q: Fraction, horizon: int | None = None) -> int:
        for i, r in enumerate(self, start=1):
            if r == q:
                return i
            if horizon is not None and i >= horizon:
                break
        raise HorizonExhausted(f"{q} not found within {horizon} indices")

    def first_in(self, intervals: Sequence[tuple[Fraction, Fraction]],
                 horizon: int) -> tuple[int, Fraction] | None:
        """Least index n with q_n in one of the closed ``[lo, hi]`` intervals.

        Returns None when ``intervals`` is empty; raises HorizonExhausted when
        the intervals are nonempty but no index <= horizon hits them.
        """
        if not intervals:
            return None
        for i, q in enumerate(self, start=1):
            if i > horizon:
                break
            if any(lo <= q <= hi for lo, hi in intervals):
                return i, q
        raise HorizonExhausted(f"no enumerated rational within {horizon} indices")


class DenominatorOrder(RationalEnumeration):
    """0, 1, 1/2, 1/3, 2/3, 1/4, 3/4, 1/5, ... (reduced fractions by denominator)."""

    name = "denominator"

    def __iter__(self) -> Iterator[Fraction]:
        yield ZERO
        yield ONE
        d = 2
        while True:
            for p in range(1, d):
                if gcd(p, d) == 1:
                    yield Fraction(p, d)
            d += 1

    @staticmethod
    def _block_start(d: int) -> int:
        # index of the first fraction with denominator d (d >= 2)
        return 3 + sum(_totient(e) for e in range(2, d))

    def at(self, n: int) -> Fraction:
        if n < 1:
            raise IndexError("enumeration indices start at 1")
        if n <= 2:
            return ZERO if n == 1 else ONE
        start, d = 3, 2
        while start + _totient(d) <= n:
            start += _totient(d)
            d += 1
        k = n - start
        for p in range(1, d):
            if gcd(p, d) == 1:
                if k == 0:
                    return Fraction(p, d)
                k -= 1
        raise AssertionError("unreachable")

    def index(self, q: Fraction, horizon: int | None = None) -> int:
        q = as_rational(q)
        if not ZERO <= q <= ONE:
            raise ValueError(f"{q} is outside [0, 1]")
        if q == 0:
            return 1
        if q == 1:
            return 2
        p, d = q.numerator, q.denominator
        return self._block_start(d) + sum(1 for r in range(1, p) if gcd(r, d) == 1)

    def first_in(self, intervals, horizon):
        if not intervals:
            return None
        for q in (ZERO, ONE):
            if any(lo <= q <= hi for lo, hi in intervals):
                i = 1 if q == 0 else 2
                if i > horizon:
                    break
                return i, q
        start, d = 3, 2
        while start <= horizon:
            best = None
            for lo, hi in intervals:
                p = max(1, ceil(lo * d))
                top = min(d - 1, floor(hi * d))
                while p <= top and gcd(p, d) != 1:
                    p += 1
                if p <= top and (best is None or p < best):
                    best = p
            if best is not None:
                n = start + sum(1 for r in range(1, best) if gcd(r, d) == 1)
                if n > horizon:
                    break
                return n, Fraction(best, d)
            start += _totient(d)
            d += 1
        raise HorizonExhausted(f"no enumerated rational within {horizon} indices")


class ExplicitOrder(RationalEnumeration):
    """A caller-supplied finite prefix followed by the denominator order (skipping repeats)."""

    name = "explicit"

    def __init__(self, prefix: Iterable):
        self.prefix = tuple(as_rational(q) for q in prefix)
        if len(set(self.prefix)) != len(self.prefix):
            raise ValueError("explicit enumeration prefix repeats a value")
        if any(not ZERO <= q <= ONE for q in self.prefix):
            raise ValueError("explicit enumeration values must lie in [0, 1]")

    def __iter__(self):
        seen = set(self.prefix)
        yield from self.prefix
        for q in DenominatorOrder():
            if q not in seen:
                yield q


_REGISTRY = {"denominator": DenominatorOrder}


def enumeration_by_name(name: str) -> RationalEnumeration:
    if name.startswith("explicit:"):
        body = name[len("explicit:"):]
        return ExplicitOrder(body.split(",") if body else [])
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise ValueError(f"unknown enumeration {name!r}") from None


def merge_open(intervals: Iterable[tuple[Fraction, Fraction]]) -> list[tuple[Fraction, Fraction]]:
    """Union of open intervals as disjoint open intervals.

    Intervals that merely touch stay separate: the shared endpoint is not covered.
    """
    out: list[list[Fraction]] = []
    for lo, hi in sorted(i for i in intervals if i[0] < i[1]):
        if out and lo < out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return [(a, b) for a, b in out]


def open_contains(cover: Sequence[tuple[Fraction, Fraction]], lo: Fraction, hi: Fraction) -> bool:
    """Whether the open interval (lo, hi) lies inside the union ``cover`` (already merged)."""
    return any(a <= lo and hi <= b for a, b in cover)
