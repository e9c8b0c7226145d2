"""Copies of fat Cantor sets glued together at 0 and 1.

Points are the two base points or ``(sheet, x)`` with 0 < x < 1. Inside one
sheet the distance is |x - y|; across sheets a path must pass through a base
point, so the distance is the cheaper of the two detours.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .gaps import GapStructure, PreconditionError
from .rationals import ONE, ZERO, as_rational, fmt


class UnknownSheet(KeyError):
    pass


@dataclass(frozen=True, order=True)
class GluedPoint:
    tag: str  # "base0", "base1" or "inner"
    sheet: str | None = None
    x: Fraction | None = None

    def __post_init__(self):
        if self.tag not in ("base0", "base1", "inner"):
            raise ValueError(f"unknown tag {self.tag!r}")
        if self.tag == "inner":
            x = as_rational(self.x)
            object.__setattr__(self, "x", x)
            if not ZERO < x < ONE:
                raise ValueError("inner points need 0 < x < 1")
            if self.sheet is None:
                raise ValueError("inner points need a sheet")
        elif self.sheet is not None or self.x is not None:
            raise ValueError("base points carry no sheet or coordinate")

    @property
    def to_zero(self) -> Fraction:
        return {"base0": ZERO, "base1": ONE}.get(self.tag, self.x)

    @property
    def to_one(self) -> Fraction:
        return ONE - self.to_zero

    def to_json(self) -> dict:
        if self.tag != "inner":
            return {"tag": self.tag}
        return {"tag": "inner", "sheet": self.sheet, "x": fmt(self.x)}

    @classmethod
    def from_json(cls, doc: dict) -> "GluedPoint":
        if doc["tag"] == "inner":
            return cls("inner", str(doc["sheet"]), as_rational(doc["x"]))
        return cls(doc["tag"])

    def __repr__(self):
        return self.tag if self.tag != "inner" else f"({self.sheet}, {self.x})"


BASE0 = GluedPoint("base0")
BASE1 = GluedPoint("base1")


def inner(sheet: str, x) -> GluedPoint:
    return GluedPoint("inner", sheet, as_rational(x))


@dataclass(frozen=True)
class GluedSpace:
    sheets: Mapping[str, GapStructure]

    def __post_init__(self):
        eps = {gs.gamma.eps0 for gs in self.sheets.values() if gs.gamma is not None}
        if len(eps) > 1:
            raise PreconditionError("all sheets must share eps0")

    def validate(self, p: GluedPoint) -> None:
        if p.tag != "inner":
            return
        if p.sheet not in self.sheets:
            raise UnknownSheet(p.sheet)
        if not self.sheets[p.sheet].in_complement(p.x):
            raise PreconditionError(f"{p.x} lies in a gap of sheet {p.sheet}")


def glued_distance(p: GluedPoint, q: GluedPoint, space: GluedSpace | None = None) -> Fraction:
    if space is not None:
        space.validate(p)
        space.validate(q)
    if p == q:
        return ZERO
    if p.tag == "inner" and q.tag == "inner" and p.sheet == q.sheet:
        return abs(p.x - q.x)
    if p.tag != "inner" or q.tag != "inner":
        # a base point sits on every sheet
        return abs(p.to_zero - q.to_zero)
    return min(p.to_zero + q.to_zero, p.to_one + q.to_one)


def embed(x, sheet_id: str, space: GluedSpace) -> GluedPoint:
    x = as_rational(x)
    if sheet_id not in space.sheets:
        raise UnknownSheet(sheet_id)
    if not space.sheets[sheet_id].in_complement(x):
        raise PreconditionError(f"{x} lies in a gap of sheet {sheet_id}")
    if x == 0:
        return BASE0
    if x == 1:
        return BASE1
    return GluedPoint("inner", sheet_id, x)


@dataclass(frozen=True)
class CollapseResult:
    P: Fraction
    Q: Fraction
    sheet: str | None  # None when [P, Q) only meets base points
    table: tuple[tuple[Fraction, Fraction], ...]

    def to_json(self) -> dict:
        return {"accepted": True, "P": fmt(self.P), "Q": fmt(self.Q), "sheet": self.sheet,
                "F0": [[fmt(x), fmt(y)] for x, y in self.table]}


@dataclass(frozen=True)
class CollapseRejection:
    x: Fraction
    y: Fraction
    image_distance: Fraction
    K: Fraction

    def to_json(self) -> dict:
        return {"accepted": False, "witness": [fmt(self.x), fmt(self.y)],
                "image_distance": fmt(self.image_distance),
                "bound": fmt(self.K * abs(self.y - self.x))}


class DegenerateTable(ValueError):
    pass


class CollapseFailure(AssertionError):
    """The emitted map broke the Lipschitz bound (a bug, never expected)."""


def _sheet_ok(p: GluedPoint, sheet: str) -> bool:
    return p.tag != "inner" or p.sheet == sheet


def collapse_map(samples: Mapping, K, space: GluedSpace | None = None,
                 domain: GapStructure | None = None) -> CollapseResult | CollapseRejection:
    """Turn a K-Lipschitz sample table into a K-Lipschitz map onto one sheet.

    Over the finite table T: P is the least x admitting some y > x in T and a
    sheet s with R(z) in s or a base point and d(R z, 1) + d(R y, 1) <= K(y - z)
    for every z in [x, y); the point 1 always qualifies. Q is the least such y
    for P. The result is 0 below P, the coordinate of R on [P, Q), and 1 from Q on.
    """
    K = as_rational(K)
    table = sorted((as_rational(x), p) for x, p in samples.items())
    xs = [x for x, _ in table]
    if len(table) < 2 or xs[0] != 0 or xs[-1] != 1:
        raise DegenerateTable("table must contain at least 0 and 1")
    if table[0][1] != BASE0 or table[-1][1] != BASE1:
        raise PreconditionError("table must send 0 to base0 and 1 to base1")
    for x, p in table:
        if domain is not None and not domain.in_complement(x):
            raise PreconditionError(f"{x} is not in the domain complement")
        if space is not None:
            space.validate(p)
    for i, (x, p) in enumerate(table):
        for y, q in table[i + 1:]:
            d = glued_distance(p, q)
            if d > K * (y - x):
                return CollapseRejection(x, y, d, K)

    n = len(table)

    def witness(i):
        # least j > i and a sheet making [x_i, x_j) admissible
        for j in range(i + 1, n):
            seg = [p for _, p in table[i:j]]
            sheets = {p.sheet for p in seg if p.tag == "inner"}
            if len(sheets) > 1:
                return None  # every longer window also mixes sheets
            y, ry = table[j]
            if all(p.to_one + ry.to_one <= K * (y - z) for z, p in table[i:j]):
                return j, (next(iter(sheets)) if sheets else None)
        return None

    P_idx, Q_idx, sheet = n - 1, n - 1, None
    for i in range(n - 1):
        hit = witness(i)
        if hit is not None:
            P_idx, (Q_idx, sheet) = i, hit
            break
    P, Q = xs[P_idx], xs[Q_idx]
    out = []
    for k, (x, p) in enumerate(table):
        if k < P_idx:
            out.append((x, ZERO))
        elif k < Q_idx:
            out.append((x, p.to_zero))
        else:
            out.append((x, ONE))
    for i, (x, fx) in enumerate(out):
        for y, fy in out[i + 1:]:
            if abs(fy - fx) > K * (y - x):
                raise CollapseFailure(f"collapse map breaks the bound on ({x}, {y})")
    if out[0][1] != 0 or out[-1][1] != 1:
        raise CollapseFailure("collapse map does not fix 0 and 1")
    if space is not None and sheet is not None:
        target = space.sheets[sheet]
        if not all(target.in_complement(v) for _, v in out):
            raise CollapseFailure("collapse map leaves the target sheet")
    return CollapseResult(P, Q, sheet, tuple(out))
