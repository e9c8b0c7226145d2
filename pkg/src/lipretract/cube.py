"""Sheets in the sup-metric cube [0,1]^Lambda sharing the 0/1 vertices.

A sheet with parameters gamma keeps the points whose every coordinate avoids
the band (1/2 - gamma_a, 1/2 + gamma_a). Vertices e_A belong to all sheets.
Coordinates are indexed from 0.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .gaps import PreconditionError
from .rationals import ONE, ZERO, as_rational, fmt

HALF = Fraction(1, 2)
STAR = "star"


class DimensionMismatch(ValueError):
    pass


class TableIncomplete(KeyError):
    pass


@dataclass(frozen=True)
class SheetSpec:
    gamma: tuple[Fraction, ...]

    def __post_init__(self):
        g = tuple(as_rational(v) for v in self.gamma)
        object.__setattr__(self, "gamma", g)
        if not g:
            raise ValueError("a sheet needs at least one coordinate")
        if any(not ZERO < v < HALF for v in g):
            raise ValueError("sheet parameters must lie in (0, 1/2)")

    @property
    def dim(self) -> int:
        return len(self.gamma)

    def to_json(self):
        return [fmt(v) for v in self.gamma]


def membership(p: Sequence, sheet: SheetSpec) -> bool:
    coords = [as_rational(v) for v in p]
    if len(coords) != sheet.dim:
        raise DimensionMismatch(f"{len(coords)} coordinates for a {sheet.dim}-dimensional sheet")
    if any(not ZERO <= v <= ONE for v in coords):
        raise PreconditionError("coordinates must lie in [0, 1]")
    return all(not (HALF - g < v < HALF + g) for v, g in zip(coords, sheet.gamma))


@dataclass(frozen=True, order=True)
class CubePoint:
    """Either a vertex (``sheet`` is None, coords are 0/1) or an inner point of a sheet."""

    coords: tuple[Fraction, ...]
    sheet: str | None = None

    @property
    def is_vertex(self) -> bool:
        return self.sheet is None

    def to_json(self) -> dict:
        if self.is_vertex:
            return {"tag": "vertex", "A": sorted(vertex_set(self))}
        return {"tag": "inner", "sheet": self.sheet, "coords": [fmt(v) for v in self.coords]}


def vertex(A, dim: int) -> CubePoint:
    A = frozenset(A)
    if any(not 0 <= a < dim for a in A):
        raise DimensionMismatch("vertex index out of range")
    return CubePoint(tuple(ONE if a in A else ZERO for a in range(dim)))


def vertex_set(p: CubePoint) -> frozenset:
    return frozenset(a for a, v in enumerate(p.coords) if v == 1)


def cube_point(sheet: str | None, coords) -> CubePoint:
    """Inner point, collapsing to a vertex when every coordinate is 0 or 1."""
    c = tuple(as_rational(v) for v in coords)
    if all(v in (ZERO, ONE) for v in c):
        return CubePoint(c)
    if sheet is None:
        raise ValueError("non-vertex points need a sheet")
    return CubePoint(c, sheet)


def point_from_json(doc: dict, dim: int) -> CubePoint:
    if doc["tag"] == "vertex":
        return vertex(doc["A"], dim)
    return cube_point(str(doc["sheet"]), doc["coords"])


@dataclass(frozen=True)
class CubeSpace:
    sheets: Mapping[str, SheetSpec]

    def __post_init__(self):
        dims = {s.dim for s in self.sheets.values()}
        if len(dims) > 1:
            raise DimensionMismatch("sheets disagree on dimension")

    @property
    def dim(self) -> int:
        return next(iter(self.sheets.values())).dim

    def validate(self, p: CubePoint) -> None:
        if len(p.coords) != self.dim:
            raise DimensionMismatch("wrong number of coordinates")
        if p.is_vertex:
            if any(v not in (ZERO, ONE) for v in p.coords):
                raise PreconditionError("vertex with fractional coordinates")
            return
        if p.sheet not in self.sheets:
            raise KeyError(p.sheet)
        if not membership(p.coords, self.sheets[p.sheet]):
            raise PreconditionError(f"{p} is not on sheet {p.sheet}")


def component_of(p: CubePoint) -> frozenset:
    return frozenset(a for a, v in enumerate(p.coords) if v > HALF)


def sup_distance(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    if len(u) != len(v):
        raise DimensionMismatch("dimension mismatch")
    return max((abs(a - b) for a, b in zip(u, v)), default=ZERO)


def _cross_sheet(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    # min over bit vectors e of max|p - e| + max|q - e|: fix the p-side
    # threshold t, then each coordinate takes its cheapest admissible bit for q.
    costs = [((abs(a), abs(b)), (ONE - a, ONE - b)) for a, b in zip(p, q)]
    best = None
    for t in sorted({c[0] for pair in costs for c in pair}):
        worst_q = ZERO
        for options in costs:
            ok = [qc for pc, qc in options if pc <= t]
            if not ok:
                break
            worst_q = max(worst_q, min(ok))
        else:
            if best is None or t + worst_q < best:
                best = t + worst_q
    return best


def cross_sheet_bruteforce(p: Sequence[Fraction], q: Sequence[Fraction]) -> Fraction:
    best = None
    for bits in product((ZERO, ONE), repeat=len(p)):
        val = sup_distance(p, bits) + sup_distance(q, bits)
        if best is None or val < best:
            best = val
    return best


def cube_distance(p: CubePoint, q: CubePoint, space: CubeSpace | None = None) -> Fraction:
    if len(p.coords) != len(q.coords):
        raise DimensionMismatch("dimension mismatch")
    if space is not None:
        space.validate(p)
        space.validate(q)
    if p.is_vertex or q.is_vertex or p.sheet == q.sheet:
        return sup_distance(p.coords, q.coords)
    return _cross_sheet(p.coords, q.coords)


@dataclass(frozen=True)
class DefeatWitness:
    family: tuple[SheetSpec, ...]
    K: Fraction
    gamma_star: SheetSpec
    p_star: CubePoint
    q_star: CubePoint
    beta0: int
    bound: Fraction  # gamma^{beta0}_{beta0} / K

    @property
    def distance(self) -> Fraction:
        return sup_distance(self.p_star.coords, self.q_star.coords)

    def space(self) -> CubeSpace:
        sheets = {str(b): s for b, s in enumerate(self.family)}
        sheets[STAR] = self.gamma_star
        return CubeSpace(sheets)

    def to_json(self) -> dict:
        return {
            "schema": "lipretract/cube-witness@1",
            "K": fmt(self.K),
            "family": [s.to_json() for s in self.family],
            "gamma_star": self.gamma_star.to_json(),
            "p_star": self.p_star.to_json(),
            "q_star": self.q_star.to_json(),
            "beta0": self.beta0,
            "bound": fmt(self.bound),
            "distance": fmt(self.distance),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "DefeatWitness":
        return defeat_family([SheetSpec(tuple(s)) for s in doc["family"]],
                             as_rational(doc["K"]), doc["beta0"])


def flip_point(gamma_star: SheetSpec, beta: int) -> CubePoint:
    coords = [HALF - g for g in gamma_star.gamma]
    coords[beta] = HALF + gamma_star.gamma[beta]
    return cube_point(STAR, coords)


def defeat_family(family: Sequence[SheetSpec], K, beta0: int | None = None) -> DefeatWitness:
    family = tuple(family)
    K = as_rational(K)
    if K < 1:
        raise PreconditionError("K must be at least 1")
    dim = len(family)
    if any(s.dim != dim for s in family):
        raise DimensionMismatch("family size must equal the dimension")
    diag = [family[a].gamma[a] for a in range(dim)]
    star = SheetSpec(tuple(g / (2 * K) for g in diag))
    for b, s in enumerate(family):
        assert star.gamma[b] != s.gamma[b]
    if beta0 is None:
        beta0 = min(range(dim), key=lambda a: (diag[a], a))
    if not 0 <= beta0 < dim:
        raise DimensionMismatch("beta0 out of range")
    p = cube_point(STAR, [HALF - g for g in star.gamma])
    q = flip_point(star, beta0)
    w = DefeatWitness(family, K, star, p, q, beta0, diag[beta0] / K)
    d = w.distance
    assert d == 2 * star.gamma[beta0]
    assert K * d == diag[beta0]
    assert K * d < HALF  # case of R(p*) at the empty vertex
    assert 2 * diag[beta0] > K * d  # case of R(p*) on the sheet beta0
    return w


@dataclass(frozen=True)
class ViolationReport:
    status: str  # "violated", "out-of-model"
    case: str | None = None
    lhs: Fraction | None = None  # d(R p*, R q*)
    rhs: Fraction | None = None  # K d(p*, q*)
    lower_bound: Fraction | None = None
    beta0: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        out = {"status": self.status, "case": self.case, "beta0": self.beta0, "detail": self.detail}
        for name in ("lhs", "rhs", "lower_bound"):
            val = getattr(self, name)
            out[name] = None if val is None else fmt(val)
        return out


def check_retraction_violation(R: Mapping[CubePoint, CubePoint], K, witness: DefeatWitness,
                               space: CubeSpace | None = None) -> ViolationReport:
    K = as_rational(K)
    space = space or witness.space()
    for p, img in R.items():
        if p.is_vertex and img != p:
            raise PreconditionError(f"table moves the vertex {sorted(vertex_set(p))}")
        if not img.is_vertex and img.sheet == STAR:
            raise PreconditionError("images must lie on family sheets or vertices")
    for p, img in sorted(R.items()):
        if component_of(p) != component_of(img):
            return ViolationReport("out-of-model", detail=f"{p} leaves its component")
    p_star = witness.p_star
    if p_star not in R:
        raise TableIncomplete("p*")
    rp = R[p_star]
    if rp.is_vertex:
        q_star = witness.q_star
        if q_star not in R:
            raise TableIncomplete("q*")
        lhs = cube_distance(rp, R[q_star], space)
        rhs = K * cube_distance(p_star, q_star, space)
        assert rhs < HALF
        return ViolationReport("violated" if lhs > rhs else "consistent", "vertex",
                               lhs, rhs, HALF, witness.beta0)
    beta = int(rp.sheet)
    q_star = flip_point(witness.gamma_star, beta)
    if q_star not in R:
        raise TableIncomplete(f"q* for coordinate {beta}")
    lhs = cube_distance(rp, R[q_star], space)
    rhs = K * cube_distance(p_star, q_star, space)
    g = witness.family[beta].gamma[beta]
    assert rhs == g
    return ViolationReport("violated" if lhs > rhs else "consistent", "sheet",
                           lhs, rhs, min(2 * g, HALF), beta)


def nearest_point_retraction(targets: Sequence[CubePoint], sources: Sequence[CubePoint],
                             space: CubeSpace) -> dict[CubePoint, CubePoint]:
    """Send each source to its closest target in the same arc component.

    Ties go to the smallest target. A continuous retraction cannot change
    components, so targets elsewhere are never considered.
    """
    out = {t: t for t in targets}
    for s in sources:
        if s in out:
            continue
        comp = component_of(s)
        pool = [t for t in targets if component_of(t) == comp]
        if not pool:
            raise PreconditionError(f"no target shares the component of {s}")
        out[s] = min(pool, key=lambda t: (cube_distance(s, t, space), t.sheet or "", t.coords))
    return out
