"""Fat Cantor sets as exact finite truncations.

A :class:`GammaSequence` lists the gap lengths; :func:`build_gaps` places the
i-th gap at the first enumerated rational whose interval of that length fits
in what is left of (0, 1). The complement of the placed gaps is a finite
union of closed intervals, which is all the decision procedures need.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .rationals import (
    ONE,
    ZERO,
    DenominatorOrder,
    ExplicitOrder,
    HorizonExhausted,
    RationalEnumeration,
    as_rational,
    enumeration_by_name,
    fmt,
)

DEFAULT_HORIZON = 100_000
GAP_SCHEMA = "lipretract/gap-structure@1"


class GammaError(ValueError):
    """A gamma sequence violates the admissibility conditions."""


class GapStructureError(ValueError):
    """A gap structure violates one of its invariants."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class GammaSequence:
    """Explicit prefix of gap lengths plus a certified bound on the rest.

    With ``tail_ratio`` set, the sequence continues geometrically after the
    prefix and ``tail_bound`` is that exact geometric sum.
    """

    eps0: Fraction
    terms: tuple[Fraction, ...]
    tail_bound: Fraction = ZERO
    tail_ratio: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "eps0", as_rational(self.eps0))
        object.__setattr__(self, "terms", tuple(as_rational(t) for t in self.terms))
        object.__setattr__(self, "tail_bound", as_rational(self.tail_bound))
        if self.tail_ratio is not None:
            rho = as_rational(self.tail_ratio)
            object.__setattr__(self, "tail_ratio", rho)
            if not ZERO < rho < ONE:
                raise GammaError("tail ratio must lie in (0, 1)")
            if not self.terms:
                raise GammaError("a geometric tail needs at least one explicit term")
            exact = self.terms[-1] * rho / (1 - rho)
            if self.tail_bound == 0:
                object.__setattr__(self, "tail_bound", exact)
            elif self.tail_bound != exact:
                raise GammaError(f"tail bound {self.tail_bound} disagrees with geometric sum {exact}")
        self.validate()

    def validate(self, enum: RationalEnumeration | None = None) -> None:
        if not ZERO < self.eps0 < Fraction(1, 2):
            raise GammaError(f"eps0 = {self.eps0} is not in (0, 1/2)")
        if any(t <= 0 for t in self.terms):
            raise GammaError("gap lengths must be positive")
        if any(a < b for a, b in zip(self.terms, self.terms[1:])):
            raise GammaError("gap lengths must be nonincreasing")
        if self.tail_bound < 0:
            raise GammaError("tail bound must be nonnegative")
        if sum(self.terms, ZERO) + self.tail_bound > 1 - self.eps0:
            raise GammaError("sum of gap lengths exceeds 1 - eps0")
        if self.terms:
            q1 = (enum or DenominatorOrder()).at(1)
            if not q1 + self.terms[0] < 1:
                raise GammaError("first gap does not fit: q_1 + gamma_1 >= 1")

    @property
    def available(self) -> int | None:
        """Number of terms that can be produced (None means unbounded)."""
        return None if self.tail_ratio is not None else len(self.terms)

    def term(self, i: int) -> Fraction:
        """1-based access, continuing through the geometric tail when present."""
        if i < 1:
            raise IndexError(i)
        if i <= len(self.terms):
            return self.terms[i - 1]
        if self.tail_ratio is None:
            raise IndexError(f"term {i} is beyond the {len(self.terms)} explicit terms")
        return self.terms[-1] * self.tail_ratio ** (i - len(self.terms))

    def extended(self, m: int) -> "GammaSequence":
        """Same sequence with at least ``m`` explicit terms."""
        if m <= len(self.terms):
            return self
        terms = [self.term(i) for i in range(1, m + 1)]
        return GammaSequence(self.eps0, terms, ZERO, self.tail_ratio)

    def to_json(self) -> dict:
        out = {
            "eps0": fmt(self.eps0),
            "gamma_terms": [fmt(t) for t in self.terms],
            "tail_bound": fmt(self.tail_bound),
        }
        if self.tail_ratio is not None:
            out["tail_ratio"] = fmt(self.tail_ratio)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "GammaSequence":
        ratio = doc.get("tail_ratio")
        return cls(
            as_rational(doc["eps0"]),
            [as_rational(t) for t in doc["gamma_terms"]],
            as_rational(doc.get("tail_bound", "0")),
            None if ratio is None else as_rational(ratio),
        )


@dataclass(frozen=True)
class Gap:
    left: Fraction
    length: Fraction
    source_index: int
    enum_index: int | None = None

    @property
    def right(self) -> Fraction:
        return self.left + self.length

    def contains(self, x: Fraction) -> bool:
        return self.left < x < self.right

    def intersects(self, lo: Fraction, hi: Fraction) -> bool:
        return self.left < hi and lo < self.right

    def __repr__(self):
        return f"Gap#{self.source_index}({self.left}, {self.right})"


@dataclass(frozen=True)
class GapStructure:
    """Depth-m truncation: [0, 1] minus finitely many disjoint open gaps."""

    gaps: tuple[Gap, ...]
    depth: int
    gamma: GammaSequence | None = None
    enumeration: str = "denominator"
    placements: tuple[int | None, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(sorted(self.gaps, key=lambda g: g.left)))
        check_invariants(self)

    # complement geometry -------------------------------------------------
    def components(self) -> list[tuple[Fraction, Fraction]]:
        """Maximal closed intervals of the complement, left to right."""
        comps, cursor = [], ZERO
        for g in self.gaps:
            comps.append((cursor, g.left))
            cursor = g.right
        comps.append((cursor, ONE))
        return comps

    def in_complement(self, x: Fraction) -> bool:
        return ZERO <= x <= ONE and not any(g.contains(x) for g in self.gaps)

    def gap_containing(self, x: Fraction) -> Gap | None:
        for g in self.gaps:
            if g.contains(x):
                return g
        return None

    def gap_by_index(self, i: int) -> Gap | None:
        for g in self.gaps:
            if g.source_index == i:
                return g
        return None

    def floor_point(self, t: Fraction) -> Fraction:
        """Largest complement point <= t (t is clipped to [0, 1])."""
        t = min(max(t, ZERO), ONE)
        g = self.gap_containing(t)
        return t if g is None else g.left

    def component_of(self, x: Fraction) -> int:
        for k, (a, b) in enumerate(self.components()):
            if a <= x <= b:
                return k
        raise PreconditionError(f"{x} is not in the complement")

    def endpoints(self) -> list[Fraction]:
        pts = {ZERO, ONE}
        for g in self.gaps:
            pts.update((g.left, g.right))
        return sorted(pts)

    def removed_length(self) -> Fraction:
        return sum((g.length for g in self.gaps), ZERO)

    # serialization -------------------------------------------------------
    def to_json(self) -> dict:
        doc = {"schema": GAP_SCHEMA, "enumeration": self.enumeration, "depth": self.depth}
        if self.gamma is not None:
            doc.update(self.gamma.to_json())
        doc["gaps"] = [[fmt(g.left), fmt(g.length), g.source_index] for g in self.gaps]
        if self.placements:
            doc["enum_indices"] = list(self.placements)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "GapStructure":
        gamma = GammaSequence.from_json(doc) if "eps0" in doc else None
        placements = tuple(doc.get("enum_indices", ()))
        by_source = {i + 1: n for i, n in enumerate(placements)}
        gaps = [Gap(as_rational(a), as_rational(l), int(i), by_source.get(int(i)))
                for a, l, i in doc["gaps"]]
        return cls(tuple(gaps), int(doc["depth"]), gamma, doc.get("enumeration", "denominator"), placements)

    @classmethod
    def from_intervals(cls, intervals: Iterable[tuple], eps0=Fraction(1, 64)) -> "GapStructure":
        """Wrap arbitrary disjoint open intervals, numbering them by decreasing length."""
        ivs = sorted(((as_rational(a), as_rational(b)) for a, b in intervals),
                     key=lambda ab: (-(ab[1] - ab[0]), ab[0]))
        lengths = [b - a for a, b in ivs]
        gamma = None
        eps0 = as_rational(eps0)
        if lengths and sum(lengths) <= 1 - eps0 and lengths[0] < 1:
            gamma = GammaSequence(eps0, lengths)
        gaps = tuple(Gap(a, b - a, i + 1) for i, (a, b) in enumerate(ivs))
        return cls(gaps, len(gaps), gamma, "explicit")


def check_invariants(gs: GapStructure) -> None:
    """Raise GapStructureError unless the structure is a valid truncation."""
    prev = None
    for g in gs.gaps:
        if g.length <= 0:
            raise GapStructureError(f"{g} has nonpositive length")
        if g.left < 0 or g.right > 1:
            raise GapStructureError(f"{g} is not inside (0, 1)")
        if prev is not None and g.left < prev.right:
            raise GapStructureError(f"{prev} and {g} overlap")
        prev = g
    for g in gs.gaps:
        for h in gs.gaps:
            if h is not g and (h.contains(g.left) or h.contains(g.right)):
                raise GapStructureError(f"endpoint of {g} lies inside {h}")
    if not (gs.in_complement(ZERO) and gs.in_complement(ONE)):
        raise GapStructureError("0 and 1 must stay in the complement")
    if gs.gamma is not None:
        if complement_measure_bound(gs) < gs.gamma.eps0:
            raise GapStructureError("complement measure bound falls below eps0")
        limit = gs.gamma.available
        for g in gs.gaps:
            if limit is None or g.source_index <= limit:
                if g.length != gs.gamma.term(g.source_index):
                    raise GapStructureError(f"{g} length differs from gamma_{g.source_index}")


def _resolve_enum(enum) -> RationalEnumeration:
    if enum is None:
        return DenominatorOrder()
    if isinstance(enum, str):
        return enumeration_by_name(enum)
    return enum


def _enum_name(enum: RationalEnumeration) -> str:
    if isinstance(enum, ExplicitOrder):
        return "explicit:" + ",".join(fmt(q) for q in enum.prefix)
    return enum.name


def fit_intervals(placed: Sequence[Gap], length: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Closed ranges of left endpoints q with (q, q+length) inside (0,1) minus ``placed``."""
    cursor, out = ZERO, []
    for g in sorted(placed, key=lambda g: g.left):
        if g.left - cursor >= length:
            out.append((cursor, g.left - length))
        cursor = max(cursor, g.right)
    if ONE - cursor >= length:
        out.append((cursor, ONE - length))
    return out


def build_gaps(gamma: GammaSequence, enum=None, depth: int | None = None,
               horizon: int = DEFAULT_HORIZON) -> GapStructure:
    """Place gaps 1..depth by the minimal-enumeration-index rule.

    A gap is left empty only when it is provably empty: no complement
    interval is long enough. Otherwise failure to find the index within
    ``horizon`` raises HorizonExhausted.
    """
    enum = _resolve_enum(enum)
    if depth is None:
        depth = gamma.available if gamma.available is not None else len(gamma.terms)
    if gamma.available is not None and depth > gamma.available:
        raise PreconditionError(f"depth {depth} exceeds the {gamma.available} available terms")
    gamma.validate(enum)
    placed: list[Gap] = []
    placements: list[int | None] = []
    for i in range(1, depth + 1):
        length = gamma.term(i)
        ranges = fit_intervals(placed, length)
        hit = enum.first_in(ranges, horizon)
        if hit is None:
            placements.append(None)
            continue
        n, q = hit
        placed.append(Gap(q, length, i, n))
        placements.append(n)
    return GapStructure(tuple(placed), depth, gamma.extended(depth) if gamma.tail_ratio is None else gamma,
                        _enum_name(enum), tuple(placements))


def complement_measure_bound(gs: GapStructure) -> Fraction:
    """1 minus placed lengths minus whatever the tail still owes past the depth."""
    if gs.gamma is None:
        return ONE - gs.removed_length()
    tail = gs.gamma.tail_bound
    if gs.gamma.tail_ratio is not None:
        # geometric terms already built are no longer owed by the tail
        tail -= sum((gs.gamma.term(i) for i in range(len(gs.gamma.terms) + 1, gs.depth + 1)), ZERO)
    return ONE - gs.removed_length() - tail


def consecutive_pair_check(gs: GapStructure, x: Fraction, y: Fraction) -> Gap | Fraction:
    """Return the gap (x, y) if nothing of the complement lies strictly between;
    otherwise a complement point in (x, y) as a refutation."""
    x, y = as_rational(x), as_rational(y)
    if not x < y:
        raise PreconditionError("need x < y")
    if not (gs.in_complement(x) and gs.in_complement(y)):
        raise PreconditionError("x and y must lie in the complement")
    for a, b in gs.components():
        lo, hi = max(a, x), min(b, y)
        if lo < hi:
            return (lo + hi) / 2
        if lo == hi and x < lo < y:
            return lo
    for g in gs.gaps:
        if g.left == x and g.right == y:
            return g
    raise GapStructureError("interval between complement points is not a single gap")


def refinement_witness(gamma: GammaSequence, enum, interval: tuple, max_depth: int,
                       horizon: int = DEFAULT_HORIZON) -> int | None:
    """Least depth <= max_depth whose gap meets the open interval; None if exhausted."""
    lo, hi = (as_rational(v) for v in interval)
    if not (ZERO <= lo < hi <= ONE):
        raise PreconditionError("interval must be a nontrivial subinterval of [0, 1]")
    gs = build_gaps(gamma, enum, max_depth, horizon)
    hits = [g.source_index for g in gs.gaps if g.intersects(lo, hi)]
    return min(hits) if hits else None


def minimality_audit(gs: GapStructure, enum=None) -> bool:
    """Re-check every placement by brute force over the enumeration.

    Independent of :func:`build_gaps`'s search: walks q_1, q_2, ... in order
    and tests the fit condition directly against the earlier gaps.
    """
    enum = _resolve_enum(enum if enum is not None else
                         (None if gs.enumeration == "explicit" else gs.enumeration))
    by_index = {g.source_index: g for g in gs.gaps}
    for i, n_i in enumerate(gs.placements, start=1):
        earlier = [g for j, g in by_index.items() if j < i]
        length = by_index[i].length if i in by_index else gs.gamma.term(i)

        def fits(q):
            lo, hi = q, q + length
            if lo < 0 or hi > 1:
                return False
            return not any(g.left < hi and lo < g.right for g in earlier)

        if n_i is None:
            # provably empty: every complement piece is too short
            cursor, longest = ZERO, ZERO
            for g in sorted(earlier, key=lambda g: g.left):
                longest = max(longest, g.left - cursor)
                cursor = g.right
            longest = max(longest, ONE - cursor)
            if longest >= length:
                return False
            continue
        for n, q in enumerate(enum, start=1):
            if n == n_i:
                if not fits(q) or q != by_index[i].left:
                    return False
                break
            if fits(q):
                return False
    return True


__all__ = [
    "DEFAULT_HORIZON", "Gap", "GapStructure", "GapStructureError", "GammaError",
    "GammaSequence", "HorizonExhausted", "PreconditionError", "build_gaps",
    "check_invariants", "complement_measure_bound", "consecutive_pair_check",
    "fit_intervals", "minimality_audit", "refinement_witness",
]
