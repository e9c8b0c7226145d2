"""Monotone K-Lipschitz maps between gap structures.

The decider is an exact left-to-right sweep producing the pointwise-largest
nondecreasing K-Lipschitz map F* with F*(0) = 0 whose values stay in the
codomain. A K-Lipschitz map fixing 0 and 1 exists iff F*(1) = 1.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

from .gaps import Gap, GapStructure, PreconditionError, consecutive_pair_check
from .rationals import ONE, ZERO, as_rational, fmt


class CertificateError(RuntimeError):
    """Certificate construction failed: the input map is not feasible."""


@dataclass(frozen=True)
class MonotonePLMap:
    """Nondecreasing map given by breakpoints, linear in between."""

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    K: Fraction

    def __post_init__(self):
        pts = tuple((as_rational(x), as_rational(y)) for x, y in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        object.__setattr__(self, "K", as_rational(self.K))
        if not pts or pts[0] != (ZERO, ZERO):
            raise ValueError("a map must start at (0, 0)")
        for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
            if not x0 < x1:
                raise ValueError("breakpoint abscissae must increase strictly")
            if y1 < y0:
                raise ValueError("breakpoint values must be nondecreasing")
            if y1 - y0 > self.K * (x1 - x0):
                raise ValueError(f"slope between {x0} and {x1} exceeds K = {self.K}")

    def __call__(self, x) -> Fraction:
        x = as_rational(x)
        xs = [p[0] for p in self.breakpoints]
        i = bisect_left(xs, x)
        if i < len(xs) and xs[i] == x:
            return self.breakpoints[i][1]
        if i == 0 or i == len(xs):
            raise ValueError(f"{x} is outside the breakpoint range")
        (x0, y0), (x1, y1) = self.breakpoints[i - 1], self.breakpoints[i]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def lipschitz_constant(self) -> Fraction:
        return sample_lipschitz(self.breakpoints)

    def check_codomain(self, domain: GapStructure, codomain: GapStructure) -> None:
        """Every value on the domain lands in the codomain complement."""
        comps = domain.components()
        for a, b in comps:
            inside = [a] + [x for x, _ in self.breakpoints if a < x < b] + [b]
            for lo, hi in zip(inside, inside[1:]):
                ylo, yhi = self(lo), self(hi)
                if codomain.component_of(ylo) != codomain.component_of(yhi):
                    raise PreconditionError(f"map crosses a codomain gap on [{lo}, {hi}]")
            if a == b and not codomain.in_complement(self(a)):
                raise PreconditionError(f"value at {a} lies in a codomain gap")

    def to_json(self) -> dict:
        return {"K": fmt(self.K), "breakpoints": [[fmt(x), fmt(y)] for x, y in self.breakpoints]}

    @classmethod
    def from_json(cls, doc: dict) -> "MonotonePLMap":
        return cls(tuple((as_rational(x), as_rational(y)) for x, y in doc["breakpoints"]),
                   as_rational(doc["K"]))


def sample_lipschitz(samples: Sequence[tuple[Fraction, Fraction]]) -> Fraction:
    best = ZERO
    for i, (x0, y0) in enumerate(samples):
        for x1, y1 in samples[i + 1:]:
            best = max(best, abs(y1 - y0) / abs(x1 - x0))
    return best


def monotonize(samples) -> MonotonePLMap:
    """Running maximum of a sampled map fixing 0 and 1."""
    pts = sorted((as_rational(x), as_rational(y)) for x, y in samples)
    xs = [x for x, _ in pts]
    if len(set(xs)) != len(xs):
        raise ValueError("sample abscissae must be distinct")
    table = dict(pts)
    if table.get(ZERO) != ZERO or table.get(ONE) != ONE:
        raise PreconditionError("samples must contain (0, 0) and (1, 1)")
    out, running = [], ZERO
    for x, y in pts:
        running = max(running, y)
        out.append((x, running))
    return MonotonePLMap(tuple(out), max(sample_lipschitz(out), ONE))


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    max_map: MonotonePLMap
    terminal_value: Fraction
    blocking_chain: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "terminal_value": fmt(self.terminal_value),
            "blocking_chain": [fmt(c) for c in self.blocking_chain],
            "max_map": self.max_map.to_json(),
        }


def max_feasible_map(domain: GapStructure, codomain: GapStructure, K) -> FeasibilityResult:
    K = as_rational(K)
    if K <= 0:
        raise PreconditionError("K must be positive")
    comps = domain.components()
    v = ZERO
    bps: list[tuple[Fraction, Fraction]] = [(ZERO, ZERO)]
    chain: list[Fraction] = []

    def note(c):
        if not chain or chain[-1] != c:
            chain.append(c)

    def add(x, y):
        if bps[-1][0] == x:
            bps[-1] = (x, y)
        else:
            bps.append((x, y))

    prev_b = None
    for a, b in comps:
        if prev_b is not None:
            t = min(v + K * (a - prev_b), ONE)
            g = codomain.gap_containing(t)
            v = t if g is None else g.left
            if g is not None:
                note(g.left)
            add(a, v)
        top = codomain.components()[codomain.component_of(v)][1]
        if v + K * (b - a) <= top:
            v = v + K * (b - a)
        else:
            stall = a + (top - v) / K
            add(stall, top)
            v = top
            if top < ONE:
                note(top)
        add(b, v)
        prev_b = b
    fmap = MonotonePLMap(tuple(bps), K)
    return FeasibilityResult(v == ONE, fmap, v, tuple(chain))


@dataclass(frozen=True)
class JumpCertificate:
    codomain_gap: Gap
    domain_gap: Gap
    p_minus: Fraction
    p_plus: Fraction
    x_minus: Fraction
    y_plus: Fraction

    def to_json(self) -> dict:
        return {
            "codomain_gap": [fmt(self.codomain_gap.left), fmt(self.codomain_gap.right),
                             self.codomain_gap.source_index],
            "domain_gap": [fmt(self.domain_gap.left), fmt(self.domain_gap.right),
                           self.domain_gap.source_index],
            "evidence": {"p_minus": fmt(self.p_minus), "p_plus": fmt(self.p_plus),
                         "x_minus": fmt(self.x_minus), "y_plus": fmt(self.y_plus)},
        }


def jump_certificates(F: MonotonePLMap, domain: GapStructure,
                      codomain: GapStructure) -> list[JumpCertificate]:
    """One certificate per codomain gap, naming the domain gap that jumps it."""
    if F(ZERO) != ZERO or F(ONE) != ONE:
        raise CertificateError("map does not fix 0 and 1")
    comps = domain.components()
    right_vals = [F(b) for _, b in comps]
    left_vals = [F(a) for a, _ in comps]
    certs = []
    for cg in codomain.gaps:
        below = [k for k, val in enumerate(right_vals) if val <= cg.left]
        if not below or below[-1] + 1 >= len(comps):
            raise CertificateError(f"no domain component ends below {cg}")
        k = below[-1]
        p_minus, p_plus = right_vals[k], left_vals[k + 1]
        if p_plus < cg.right:
            raise CertificateError(f"map lands inside {cg} at {comps[k + 1][0]}")
        x_minus, y_plus = comps[k][1], comps[k + 1][0]
        dg = consecutive_pair_check(domain, x_minus, y_plus)
        if not isinstance(dg, Gap):
            raise CertificateError(f"({x_minus}, {y_plus}) is not a domain gap")
        certs.append(JumpCertificate(cg, dg, p_minus, p_plus, x_minus, y_plus))
    return certs


def jump_spread(certs: Sequence[JumpCertificate]) -> Fraction:
    spread = ZERO
    for c1, c2 in permutations(certs, 2):
        spread = max(spread, abs(c1.codomain_gap.right - c2.codomain_gap.left))
    return spread


def check_jump_length(certs: Sequence[JumpCertificate], K) -> bool:
    """K times the shared domain gap length covers every endpoint spread of the jumped gaps."""
    K = as_rational(K)
    if not certs:
        return True
    dg = certs[0].domain_gap
    if any(c.domain_gap != dg for c in certs):
        raise PreconditionError("certificates do not share a domain gap")
    return K * dg.length >= jump_spread(certs)


def group_by_domain_gap(certs: Sequence[JumpCertificate]) -> dict[Gap, list[JumpCertificate]]:
    groups: dict[Gap, list[JumpCertificate]] = {}
    for c in certs:
        groups.setdefault(c.domain_gap, []).append(c)
    return groups


@dataclass(frozen=True)
class SweepInterval:
    a: Fraction
    b: Fraction
    r: Fraction

    @property
    def lo(self) -> Fraction:
        return self.b - self.r

    @property
    def hi(self) -> Fraction:
        return self.a + self.r

    @property
    def empty(self) -> bool:
        return self.lo >= self.hi

    @property
    def length(self) -> Fraction:
        return ZERO if self.empty else self.hi - self.lo

    def as_interval(self) -> tuple[Fraction, Fraction] | None:
        return None if self.empty else (self.lo, self.hi)


def sweeping(a, b, r) -> SweepInterval:
    a, b, r = as_rational(a), as_rational(b), as_rational(r)
    if not a < b or r <= 0:
        raise PreconditionError("sweeping needs a < b and r > 0")
    return SweepInterval(a, b, r)


def sweep_contains(sw: SweepInterval, lo: Fraction, hi: Fraction) -> bool:
    return not sw.empty and sw.lo <= lo and hi <= sw.hi


def sweep_escape_check(cert1: JumpCertificate, cert2: JumpCertificate, r, K) -> bool:
    r, K = as_rational(r), as_rational(K)
    if cert1.domain_gap != cert2.domain_gap:
        raise PreconditionError("certificates must share a domain gap")
    sw = sweeping(cert1.codomain_gap.left, cert1.codomain_gap.right, r)
    if sweep_contains(sw, cert2.codomain_gap.left, cert2.codomain_gap.right):
        raise PreconditionError("second codomain gap lies inside the sweeping")
    return K * cert1.domain_gap.length > r


__all__ = [
    "CertificateError", "FeasibilityResult", "JumpCertificate", "MonotonePLMap",
    "SweepInterval", "check_jump_length", "group_by_domain_gap", "jump_certificates",
    "jump_spread", "max_feasible_map", "monotonize", "sample_lipschitz",
    "sweep_contains", "sweep_escape_check", "sweeping",
]
