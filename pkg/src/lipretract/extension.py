"""Lipschitz extension on finite metric spaces.

McShane extension, cone/lattice norming functions with controlled support,
finite nets of distance vectors, separated chains, and the finite version of
the linear extension operator built from them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from math import comb, lcm
from typing import Iterable, Mapping, Sequence

import numpy as np

from .gaps import PreconditionError
from .rationals import ZERO, as_rational, fmt

SPACE_SCHEMA = "lipretract/metric-space@1"
DEFAULT_CAP = 200_000


class MetricAxiomError(ValueError):
    pass


class NetBlowUp(RuntimeError):
    """Too many candidate sets for exhaustive enumeration."""


class ChainMismatch(ValueError):
    pass


class CoveringBug(AssertionError):
    pass


@dataclass(frozen=True)
class FiniteMetricSpace:
    ids: tuple
    dist: tuple[tuple[Fraction, ...], ...]
    base: object

    def __post_init__(self):
        ids = tuple(self.ids)
        rows = tuple(tuple(as_rational(v) for v in row) for row in self.dist)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "dist", rows)
        n = len(ids)
        if len(set(ids)) != n:
            raise MetricAxiomError("duplicate point ids")
        if self.base not in ids:
            raise MetricAxiomError("base point is not in the space")
        if len(rows) != n or any(len(r) != n for r in rows):
            raise MetricAxiomError("distance matrix has the wrong shape")
        for i in range(n):
            if rows[i][i] != 0:
                raise MetricAxiomError(f"d({ids[i]}, {ids[i]}) != 0")
            for j in range(i + 1, n):
                if rows[i][j] != rows[j][i]:
                    raise MetricAxiomError("distance matrix is not symmetric")
                if rows[i][j] <= 0:
                    raise MetricAxiomError("distinct points at distance 0")
        for i in range(n):
            for j in range(n):
                dij = rows[i][j]
                for k in range(n):
                    if dij > rows[i][k] + rows[k][j]:
                        raise MetricAxiomError(
                            f"triangle inequality fails at {ids[i]}, {ids[k]}, {ids[j]}")

    @cached_property
    def pos(self) -> dict:
        return {p: i for i, p in enumerate(self.ids)}

    def d(self, p, q) -> Fraction:
        return self.dist[self.pos[p]][self.pos[q]]

    @cached_property
    def scaled(self) -> tuple[np.ndarray, int]:
        """Distances times their common denominator, as integers."""
        den = 1
        for row in self.dist:
            for v in row:
                den = lcm(den, v.denominator)
        vals = [[v.numerator * (den // v.denominator) for v in row] for row in self.dist]
        big = max((abs(v) for row in vals for v in row), default=0)
        dtype = np.int64 if big < 2 ** 40 else object
        return np.array(vals, dtype=dtype), den

    def order(self, pts: Iterable) -> list:
        return sorted(pts, key=self.pos.__getitem__)

    def restrict(self, pts: Iterable) -> "FiniteMetricSpace":
        keep = self.order(set(pts))
        if self.base not in keep:
            raise PreconditionError("a subspace must keep the base point")
        idx = [self.pos[p] for p in keep]
        return FiniteMetricSpace(tuple(keep), tuple(tuple(self.dist[i][j] for j in idx) for i in idx),
                                 self.base)

    def separation(self, pts: Sequence) -> Fraction | None:
        pts = list(pts)
        vals = [self.d(a, b) for a, b in combinations(pts, 2)]
        return min(vals) if vals else None

    def is_separated(self, pts: Sequence, eps: Fraction) -> bool:
        sep = self.separation(pts)
        return sep is None or sep >= eps

    def radius(self, pts: Sequence) -> Fraction:
        """Least r such that one point of the space is within r of every point of ``pts``."""
        return min(max(self.d(c, p) for p in pts) for c in self.ids)

    def ball(self, center, r: Fraction) -> list:
        return [p for p in self.ids if self.d(center, p) <= r]

    def to_json(self) -> dict:
        return {"schema": SPACE_SCHEMA, "ids": [str(p) for p in self.ids], "base": str(self.base),
                "dist": [[fmt(v) for v in row] for row in self.dist]}

    @classmethod
    def from_json(cls, doc: dict) -> "FiniteMetricSpace":
        return cls(tuple(str(p) for p in doc["ids"]),
                   tuple(tuple(as_rational(v) for v in row) for row in doc["dist"]),
                   str(doc["base"]))


def lipschitz_constant(f: Mapping, space: FiniteMetricSpace) -> Fraction:
    pts = list(f)
    best = ZERO
    for a, b in combinations(pts, 2):
        best = max(best, abs(f[a] - f[b]) / space.d(a, b))
    return best


def map_lipschitz(L: Mapping, space: FiniteMetricSpace) -> Fraction:
    """Lipschitz constant of a point map (self-map of the space)."""
    best = ZERO
    for a, b in combinations(list(L), 2):
        best = max(best, space.d(L[a], L[b]) / space.d(a, b))
    return best


@dataclass(frozen=True)
class LipschitzSample:
    table: Mapping
    L: Fraction

    def check(self, space: FiniteMetricSpace) -> None:
        if lipschitz_constant(self.table, space) > self.L:
            raise PreconditionError(f"sample is not {self.L}-Lipschitz")
        if space.base in self.table and self.table[space.base] != 0:
            raise PreconditionError("sample does not vanish at the base point")


def mcshane_extend(f: Mapping, space: FiniteMetricSpace, L) -> dict:
    """Largest L-Lipschitz extension: min over the domain of f(y) + L d(x, y)."""
    L = as_rational(L)
    f = {p: as_rational(v) for p, v in f.items()}
    if not f:
        raise PreconditionError("cannot extend from an empty set")
    if lipschitz_constant(f, space) > L:
        raise PreconditionError(f"function is not {L}-Lipschitz on its domain")
    return {x: min(v + L * space.d(x, y) for y, v in f.items()) for x in space.ids}


def lower_mcshane(f: Mapping, space: FiniteMetricSpace, L) -> dict:
    L = as_rational(L)
    return {x: max(as_rational(v) - L * space.d(x, y) for y, v in f.items()) for x in space.ids}


def cone_function(x0, value, lam, eps, sign: str, space: FiniteMetricSpace) -> dict:
    value, lam, eps = as_rational(value), as_rational(lam), as_rational(eps)
    if lam < 1 or eps <= 0:
        raise PreconditionError("need lam >= 1 and eps > 0")
    c = lam * (1 + eps)
    if sign == "positive":
        if value <= 0:
            raise ValueError("positive cone needs a positive value")
        return {p: max(value - c * space.d(p, x0), ZERO) for p in space.ids}
    if sign == "negative":
        if value >= 0:
            raise ValueError("negative cone needs a negative value")
        return {p: min(value + c * space.d(p, x0), ZERO) for p in space.ids}
    raise ValueError(f"unknown sign {sign!r}")


def norming_function(f: Mapping, F: Iterable, lam, eps, space: FiniteMetricSpace) -> dict:
    """Lattice combination of cones agreeing with f on F.

    Positive points take the max of the cones from positive points of F,
    negative points the min of the cones from negative points of F, zeros stay 0.
    """
    f = {p: as_rational(v) for p, v in f.items()}
    F = list(F)
    if set(f) != set(space.ids):
        raise PreconditionError("f must be defined on the whole space")
    if space.base not in F:
        raise PreconditionError("F must contain the base point")
    if f[space.base] != 0:
        raise PreconditionError("f must vanish at the base point")
    if lipschitz_constant(f, space) > 1:
        raise PreconditionError("f must be 1-Lipschitz (normalize first)")
    pos = [(x, cone_function(x, f[x], lam, eps, "positive", space)) for x in F if f[x] > 0]
    neg = [(x, cone_function(x, f[x], lam, eps, "negative", space)) for x in F if f[x] < 0]
    g = {}
    for p in space.ids:
        if f[p] > 0:
            g[p] = max((t[p] for _, t in pos), default=ZERO)
        elif f[p] < 0:
            g[p] = min((t[p] for _, t in neg), default=ZERO)
        else:
            g[p] = ZERO
    return g


def norming_properties(g: Mapping, f: Mapping, F: Iterable, lam, eps,
                       space: FiniteMetricSpace) -> dict[str, bool]:
    """The four guarantees: agreement on F, g(base) = 0, ball support, Lipschitz bound."""
    c = as_rational(lam) * (1 + as_rational(eps))
    F = list(F)
    support = all(
        any(space.d(p, x) < space.d(x, space.base) / c for x in F)
        for p in space.ids if g[p] != 0)
    return {
        "agrees_on_F": all(g[x] == f[x] for x in F),
        "vanishes_at_base": g[space.base] == 0,
        "ball_support": support,
        "lipschitz": lipschitz_constant(g, space) <= c,
    }


# ---------------------------------------------------------------- finite nets

@dataclass
class _CenterIndex:
    thr: int
    buckets: dict = field(default_factory=dict)

    def key(self, v):
        m = min(3, len(v))
        return tuple(int(x) // (self.thr + 1) for x in v[:m])

    def near(self, v):
        k = self.key(v)
        seen = []
        for delta in np.ndindex(*(3,) * len(k)):
            kk = tuple(a + b - 1 for a, b in zip(k, delta))
            seen.extend(self.buckets.get(kk, ()))
        for j, w in sorted(seen):
            if not len(v) or int(np.max(np.abs(v - w))) <= self.thr:
                return j
        return None

    def add(self, j, v):
        self.buckets.setdefault(self.key(v), []).append((j, v))


@dataclass(frozen=True)
class NetResult:
    F: tuple
    k: int
    eps: Fraction
    Z: tuple
    centers: tuple[tuple, ...]  # extras of each chosen E_j, in id order
    admissible: int
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def radius(self) -> Fraction:
        return self.eps * self.eps

    def to_json(self) -> dict:
        return {"F": [str(p) for p in self.F], "k": self.k, "eps": fmt(self.eps),
                "radius": fmt(self.radius), "Z": [str(p) for p in self.Z],
                "centers": [[str(p) for p in c] for c in self.centers],
                "admissible_sets": self.admissible}


def distance_vector(space: FiniteMetricSpace, F: Sequence, extras: Sequence) -> np.ndarray:
    """Scaled distances from every point of F, then every extra, to each extra."""
    M, _ = space.scaled
    rows = [space.pos[p] for p in list(F) + list(extras)]
    cols = [space.pos[p] for p in extras]
    return M[np.ix_(rows, cols)].reshape(-1) if cols else np.zeros(0, dtype=M.dtype)


def _threshold(space: FiniteMetricSpace, eps: Fraction) -> int:
    _, den = space.scaled
    r = eps * eps * den
    return r.numerator // r.denominator


def admissible_sets(space: FiniteMetricSpace, F: Sequence, k: int, eps: Fraction,
                    cap: int = DEFAULT_CAP):
    """Yield extras tuples (id order) of every eps-separated E with F in E and |E - F| <= k."""
    Fs = set(F)
    others = [p for p in space.ids if p not in Fs]
    total = sum(comb(len(others), l) for l in range(k + 1))
    if total > cap:
        raise NetBlowUp(f"{total} candidate sets exceed the cap {cap}")
    ok = {p: all(space.d(p, f) >= eps for f in F) for p in others}
    cand = [p for p in others if ok[p]]
    for l in range(k + 1):
        for extras in combinations(cand, l):
            if all(space.d(a, b) >= eps for a, b in combinations(extras, 2)):
                yield extras


def finite_net(space: FiniteMetricSpace, F: Iterable, k: int, eps,
               cap: int = DEFAULT_CAP) -> NetResult:
    eps = as_rational(eps)
    F = tuple(space.order(set(F)))
    if eps <= 0 or k < 0:
        raise PreconditionError("need eps > 0 and k >= 0")
    sep = space.separation(F)
    if sep is not None and eps > sep:
        raise PreconditionError(f"eps = {eps} exceeds the separation {sep} of F")
    thr = _threshold(space, eps)
    index: dict[int, _CenterIndex] = {}
    centers: list[tuple] = []
    count = 0
    for extras in admissible_sets(space, F, k, eps, cap):
        count += 1
        v = distance_vector(space, F, extras)
        idx = index.setdefault(len(extras), _CenterIndex(thr))
        if idx.near(v) is None:
            idx.add(len(centers), v)
            centers.append(extras)
    Z = tuple(space.order(set(F) | {p for c in centers for p in c}))
    return NetResult(F, k, eps, Z, tuple(centers), count, index)


@dataclass(frozen=True)
class LocalMap:
    pairing: dict
    center: tuple
    lipschitz: Fraction


def local_map(E: Iterable, net: NetResult, space: FiniteMetricSpace) -> LocalMap:
    E = set(E)
    if not set(net.F) <= E:
        raise PreconditionError("E must contain F")
    extras = tuple(space.order(E - set(net.F)))
    if len(extras) > net.k:
        raise PreconditionError(f"E has {len(extras)} extra points, more than k = {net.k}")
    if not space.is_separated(space.order(E), net.eps):
        raise PreconditionError(f"E is not {net.eps}-separated")
    v = distance_vector(space, net.F, extras)
    idx = net._index.get(len(extras))
    if idx is None:
        idx = _CenterIndex(_threshold(space, net.eps))
        for j, c in enumerate(net.centers):
            if len(c) == len(extras):
                idx.add(j, distance_vector(space, net.F, c))
        net._index[len(extras)] = idx
    j = idx.near(v)
    if j is None:
        raise CoveringBug(f"no center covers {sorted(E, key=space.pos.__getitem__)}")
    center = net.centers[j]
    pairing = {p: p for p in net.F}
    pairing.update(zip(extras, center))
    lip = map_lipschitz(pairing, space)
    if lip > 1 + net.eps:
        raise CoveringBug(f"local map has Lipschitz constant {lip} > {1 + net.eps}")
    return LocalMap(pairing, center, lip)


# ----------------------------------------------------------- separated chains

@dataclass(frozen=True)
class SeparatedChain:
    F_chain: tuple[tuple, ...]
    eps_chain: tuple[Fraction, ...]
    D_chain: tuple[tuple, ...]

    def to_json(self) -> dict:
        return {"F": [[str(p) for p in F] for F in self.F_chain],
                "eps": [fmt(e) for e in self.eps_chain],
                "D": [[str(p) for p in D] for D in self.D_chain]}


def _check_chain_input(space, F_chain, eps_chain):
    if len(F_chain) != len(eps_chain) or not F_chain:
        raise PreconditionError("need one eps per level and at least one level")
    for a, b in zip(F_chain, F_chain[1:]):
        if not set(a) <= set(b):
            raise PreconditionError("F chain must increase")
    for a, b in zip(eps_chain, eps_chain[1:]):
        if b > a:
            raise PreconditionError("eps chain must not increase")
    for F, e in zip(F_chain, eps_chain):
        if e <= 0:
            raise PreconditionError("eps values must be positive")
        sep = space.separation(F)
        if sep is not None and e > sep:
            raise PreconditionError(f"eps = {e} exceeds the separation {sep} of its level")


def separated_chain(space: FiniteMetricSpace, F_chain, eps_chain) -> SeparatedChain:
    F_chain = tuple(tuple(space.order(set(F))) for F in F_chain)
    eps_chain = tuple(as_rational(e) for e in eps_chain)
    _check_chain_input(space, F_chain, eps_chain)
    n = len(F_chain)
    D_chain: list[tuple] = []
    prev: set = set()
    for lvl in range(n):
        D = prev | set(F_chain[lvl])
        for p in space.ids:
            if p in D:
                continue
            if all(all(space.d(p, q) >= eps_chain[m] for q in D | set(F_chain[m]) if q != p)
                   for m in range(lvl, n)):
                D.add(p)
        D_chain.append(tuple(space.order(D)))
        prev = D
    chain = SeparatedChain(F_chain, eps_chain, tuple(D_chain))
    problems = chain_problems(chain, space)
    if problems:
        raise AssertionError("; ".join(problems))
    return chain


def chain_problems(chain: SeparatedChain, space: FiniteMetricSpace) -> list[str]:
    out = []
    Fs, es, Ds = chain.F_chain, chain.eps_chain, chain.D_chain
    for a, b in zip(Ds, Ds[1:]):
        if not set(a) <= set(b):
            out.append("D chain is not increasing")
    for F, D in zip(Fs, Ds):
        if not set(F) <= set(D):
            out.append("some F_n is not inside D_n")
    for n in range(len(Ds)):
        for m in range(n, len(Ds)):
            if not space.is_separated(space.order(set(Ds[n]) | set(Fs[m])), es[m]):
                out.append(f"D_{n + 1} with F_{m + 1} is not {es[m]}-separated")
    if any(blocking_point(chain, space, p) is None for p in space.ids if p not in set(Ds[-1])):
        out.append("last D is not maximal")
    return out


def blocking_point(chain: SeparatedChain, space: FiniteMetricSpace, p):
    """A point of the last D (or F) closer than the finest eps to p, if any."""
    eps = chain.eps_chain[-1]
    for q in space.order(set(chain.D_chain[-1]) | set(chain.F_chain[-1])):
        if q != p and space.d(p, q) < eps:
            return q
    return None


# -------------------------------------------------------- extension operator

@dataclass(frozen=True)
class NetLevel:
    n: int
    F: tuple
    theta: Fraction | None
    eps: Fraction
    r: Fraction
    R: Fraction
    ball: tuple
    net: NetResult

    @property
    def S(self) -> tuple:
        return self.net.Z

    def to_json(self) -> dict:
        return {"n": self.n, "F": [str(p) for p in self.F],
                "theta": None if self.theta is None else fmt(self.theta),
                "eps": fmt(self.eps), "r": fmt(self.r), "R": fmt(self.R),
                "ball": [str(p) for p in self.ball], "net": self.net.to_json()}


def build_net_chain(space: FiniteMetricSpace, points: Sequence, cap: int = DEFAULT_CAP) -> list[NetLevel]:
    """S_0 = {base}; F_n = S_{n-1} + p_n; S_n is the net of F_n with k = n."""
    S = (space.base,)
    levels = []
    for n, p in enumerate(points, start=1):
        F = tuple(space.order(set(S) | {p}))
        theta = space.separation(F)
        eps = Fraction(1, n) if theta is None else min(Fraction(1, n), theta)
        r = space.radius(F)
        R = max(r, Fraction(n))
        ball = tuple(space.ball(space.base, R))
        if not set(F) <= set(ball):
            raise ChainMismatch(f"F_{n} is not inside the ball of radius {R} about the base")
        net = finite_net(space.restrict(ball), F, n, eps, cap)
        levels.append(NetLevel(n, F, theta, eps, r, R, ball, net))
        S = net.Z
    return levels


@dataclass(frozen=True)
class ExtensionOperator:
    domain: tuple  # the index set E the operator is defined on
    S: tuple
    core: tuple  # points fixed by the assignment
    assignment: dict
    certificate: Fraction
    maximal: bool  # whether the domain is the unique largest admissible set

    def apply(self, f: Mapping) -> dict:
        missing = set(self.S) - set(f)
        if missing:
            raise PreconditionError("f must be defined on all of S")
        return {p: f[self.assignment[p]] for p in self.domain}

    def to_json(self) -> dict:
        return {"schema": "lipretract/extension-operator@1",
                "domain": [str(p) for p in self.domain], "S": [str(p) for p in self.S],
                "core": [str(p) for p in self.core],
                "assignment": {str(p): str(q) for p, q in self.assignment.items()},
                "certificate": fmt(self.certificate), "maximal": self.maximal}


def chain_eps(space: FiniteMetricSpace, levels: Sequence[NetLevel]) -> tuple[Fraction, ...]:
    return tuple(l.eps for l in levels)


def extension_operator(space: FiniteMetricSpace, levels: Sequence[NetLevel],
                       D: SeparatedChain) -> ExtensionOperator:
    if tuple(l.F for l in levels) != D.F_chain or chain_eps(space, levels) != D.eps_chain:
        raise ChainMismatch("separated chain was not built from these levels")
    top = levels[-1]
    m = top.n
    pool = [p for p in space.order(set(D.D_chain[-1]) & set(top.ball)) if p not in set(top.F)]
    maximal = len(pool) <= m
    E = tuple(space.order(set(top.F) | set(pool[:m])))
    sub = space.restrict(top.ball)
    lm = local_map(E, top.net, sub)
    return ExtensionOperator(E, top.S, top.F, dict(lm.pairing), 1 + top.eps, maximal)
