"""Diagonal construction of a gap sequence that no K-Lipschitz map can follow.

Given members gamma^1..gamma^N of a family and K, :func:`construct_gamma_star`
picks gamma*_1, gamma*_2, ... so that for each i there is no monotone
K-Lipschitz map from any structure starting with gamma*_1..gamma*_i onto
L_{gamma^i} fixing 0 and 1. :func:`verify_prefix_defeat` replays the claim
with the exact decider.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from itertools import permutations

from .gaps import GammaSequence, GapStructure, PreconditionError, build_gaps
from .maps import FeasibilityResult, max_feasible_map, sweeping
from .rationals import ONE, ZERO, as_rational, fmt, merge_open, open_contains

MAX_FAMILY = 8
DEFAULT_DEPTH = 16
DEPTH_CAP = 1024
DEFAULT_TAIL_RATIO = Fraction(1, 2)


class DepthInsufficient(RuntimeError):
    def __init__(self, needed: int):
        super().__init__(f"chain needs target gaps beyond depth {needed - 1}")
        self.needed = needed


class GuardViolation(ValueError):
    pass


@lru_cache(maxsize=256)
def _built(target: GammaSequence, depth: int) -> GapStructure:
    return build_gaps(target, None, depth)


@dataclass(frozen=True)
class SweepChain:
    target_index: int
    sigma: tuple[int, ...]
    indices: tuple[int, ...]  # n_0 = 1 first, n_sigma last
    sweep_sets: tuple[tuple[tuple[Fraction, Fraction], ...], ...]

    @property
    def n_sigma(self) -> int:
        return self.indices[-1]

    def to_json(self) -> dict:
        return {
            "target": self.target_index,
            "sigma": list(self.sigma),
            "n": list(self.indices),
            "sweep_sets": [[[fmt(a), fmt(b)] for a, b in s] for s in self.sweep_sets],
        }


def chain_on_structure(gs: GapStructure, sigma, gamma_star, K, target_index: int = 0) -> SweepChain:
    """Chain indices against an already built target structure."""
    K = as_rational(K)
    n = 1
    if gs.gap_by_index(1) is None:
        raise PreconditionError("target has no first gap")
    raw: list[tuple[Fraction, Fraction]] = []
    indices, sets = [1], []
    for j in sigma:
        g = gs.gap_by_index(n)
        sw = sweeping(g.left, g.right, K * gamma_star[j - 1]).as_interval()
        if sw is not None:
            raw.append(sw)
        cover = merge_open(raw)
        m = n + 1
        while True:
            if m > gs.depth:
                raise DepthInsufficient(m)
            h = gs.gap_by_index(m)
            if h is not None and not open_contains(cover, h.left, h.right):
                break
            m += 1
        n = m
        indices.append(n)
        sets.append(tuple(cover))
    return SweepChain(target_index, tuple(sigma), tuple(indices), tuple(sets))


def sweep_chain(target: GammaSequence, sigma, gamma_star_prefix, K, depth: int,
                target_index: int = 0) -> SweepChain:
    if len(gamma_star_prefix) < len(sigma):
        raise PreconditionError("prefix shorter than the ordering")
    return chain_on_structure(_built(target, depth), tuple(sigma),
                              tuple(gamma_star_prefix), K, target_index)


def _chain_task(args):
    target, sigma, prefix, K, depth, idx = args
    return sweep_chain(target, sigma, prefix, K, depth, idx)


@dataclass(frozen=True)
class StepRecord:
    step: int
    chains: tuple[SweepChain, ...]
    n_omega: int
    bound: Fraction  # the strict upper bound gamma*_step must stay below
    value: Fraction
    depth: int

    def to_json(self) -> dict:
        return {
            "step": self.step, "n_omega": self.n_omega, "bound": fmt(self.bound),
            "value": fmt(self.value), "depth": self.depth,
            "chains": [c.to_json() for c in self.chains],
        }


@dataclass(frozen=True)
class AdversaryPrefix:
    K: Fraction
    eps0: Fraction
    family: tuple[GammaSequence, ...]
    gamma_star: tuple[Fraction, ...]
    steps: tuple[StepRecord, ...] = field(default=())

    def codomain_depth(self, member: int) -> int:
        """Target depth that holds every gap used in the member's step (1-based)."""
        rec = self.steps[member - 1]
        return max([rec.n_omega] + [n for c in rec.chains for n in c.indices])

    def to_json(self) -> dict:
        return {
            "schema": "lipretract/adversary-prefix@1",
            "K": fmt(self.K),
            "eps0": fmt(self.eps0),
            "family": [m.to_json() for m in self.family],
            "gamma_star": [fmt(g) for g in self.gamma_star],
            "steps": [s.to_json() for s in self.steps],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "AdversaryPrefix":
        steps = []
        for s in doc.get("steps", []):
            chains = tuple(
                SweepChain(c["target"], tuple(c["sigma"]), tuple(c["n"]),
                           tuple(tuple((as_rational(a), as_rational(b)) for a, b in ss)
                                 for ss in c["sweep_sets"]))
                for c in s["chains"])
            steps.append(StepRecord(s["step"], chains, s["n_omega"], as_rational(s["bound"]),
                                    as_rational(s["value"]), s["depth"]))
        return cls(as_rational(doc["K"]), as_rational(doc["eps0"]),
                   tuple(GammaSequence.from_json(m) for m in doc["family"]),
                   tuple(as_rational(g) for g in doc["gamma_star"]), tuple(steps))


def property_bound(i: int, K: Fraction, eps0: Fraction) -> Fraction:
    """gamma*_i must stay strictly below 2^{-(i+1)} eps0 / K."""
    return eps0 / (K * 2 ** (i + 1))


def _gap_nonempty(eps0, prefix, depth_index) -> bool:
    gs = build_gaps(GammaSequence(eps0, prefix), None, depth_index)
    return gs.gap_by_index(depth_index) is not None


def construct_gamma_star(family, K, eps0=None, depth: int = DEFAULT_DEPTH,
                         jobs: int = 1, depth_cap: int = DEPTH_CAP) -> AdversaryPrefix:
    family = tuple(family)
    K = as_rational(K)
    if not family:
        raise GuardViolation("empty family")
    if len(family) > MAX_FAMILY:
        raise GuardViolation(f"family size {len(family)} exceeds the limit of {MAX_FAMILY}")
    eps0 = family[0].eps0 if eps0 is None else as_rational(eps0)
    if any(m.eps0 != eps0 for m in family):
        raise PreconditionError("family members must share eps0")
    if K <= 0:
        raise PreconditionError("K must be positive")

    g1 = eps0 * family[0].term(1) / (4 * K)
    stars = [g1]
    steps = [StepRecord(1, (SweepChain(1, (), (1,), ()),), 1, property_bound(1, K, eps0), g1, 1)]
    for i in range(1, len(family)):
        target = family[i]
        orders = list(permutations(range(1, i + 1)))
        d = depth
        while True:
            try:
                tasks = [(target, s, tuple(stars), K, d, i + 1) for s in orders]
                if jobs > 1 and len(tasks) > 1:
                    with ProcessPoolExecutor(max_workers=jobs) as pool:
                        chains = list(pool.map(_chain_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
                else:
                    chains = [_chain_task(t) for t in tasks]
                break
            except DepthInsufficient:
                if d >= depth_cap or (target.available is not None and d >= target.available):
                    raise
                d = min(2 * d, depth_cap)
                if target.available is not None:
                    d = min(d, target.available)
        for c in chains:
            seq = [target.term(n) for n in c.indices]
            # each chain gap is no larger than the gaps before it
            assert all(seq[-1] <= s for s in seq[:-1]), c
        n_omega = max(c.n_sigma for c in chains)
        assert target.term(n_omega) <= min(target.term(c.n_sigma) for c in chains)
        step = i + 1
        value = eps0 * target.term(n_omega) / (K * 2 ** (step + 2))
        if value >= stars[-1]:
            value = stars[-1] / 2
        while not _gap_nonempty(eps0, stars + [value], step):
            value /= 2
        bound = eps0 * target.term(n_omega) / (K * 2 ** (step + 1))
        stars.append(value)
        steps.append(StepRecord(step, tuple(chains), n_omega, bound, value, d))
    return AdversaryPrefix(K, eps0, family, tuple(stars), tuple(steps))


def audit_prefix(prefix: AdversaryPrefix) -> list[str]:
    """Proof properties (1) and (2) plus monotonicity; returns problems found."""
    problems = []
    stars = prefix.gamma_star
    for i, g in enumerate(stars, start=1):
        if not ZERO < g < property_bound(i, prefix.K, prefix.eps0):
            problems.append(f"gamma*_{i} = {g} violates the size bound")
    if any(a < b for a, b in zip(stars, stars[1:])):
        problems.append("gamma* is not nonincreasing")
    gs = build_gaps(GammaSequence(prefix.eps0, stars), None, len(stars))
    for i in range(1, len(stars) + 1):
        if gs.gap_by_index(i) is None:
            problems.append(f"gap {i} of gamma* is empty")
    for rec in prefix.steps:
        if not rec.value < rec.bound:
            problems.append(f"step {rec.step} value not below its bound")
    return problems


@dataclass(frozen=True)
class MemberVerdict:
    member: int
    feasible: bool
    domain_depth: int
    codomain_depth: int
    result: FeasibilityResult

    def to_json(self) -> dict:
        out = {
            "member": self.member,
            "verdict": "FEASIBLE" if self.feasible else "INFEASIBLE",
            "domain_depth": self.domain_depth,
            "codomain_depth": self.codomain_depth,
            "terminal_value": fmt(self.result.terminal_value),
            "blocking_chain": [fmt(c) for c in self.result.blocking_chain],
        }
        if self.feasible:
            out["witness"] = self.result.max_map.to_json()
        return out


def extend_prefix(prefix: AdversaryPrefix, tail_ratio=DEFAULT_TAIL_RATIO) -> GammaSequence:
    return GammaSequence(prefix.eps0, prefix.gamma_star, tail_ratio=as_rational(tail_ratio))


def verify_prefix_defeat(prefix: AdversaryPrefix, tail_ratio=DEFAULT_TAIL_RATIO,
                         depth_domain: int | None = None,
                         depth_codomain: int | None = None) -> list[MemberVerdict]:
    N = len(prefix.family)
    dd = N if depth_domain is None else depth_domain
    if dd < N:
        raise PreconditionError(f"domain depth {dd} is below the family size {N}")
    domain = build_gaps(extend_prefix(prefix, tail_ratio), None, dd)
    out = []
    for i, member in enumerate(prefix.family, start=1):
        need = prefix.codomain_depth(i)
        dc = need if depth_codomain is None else depth_codomain
        if dc < need:
            raise PreconditionError(f"codomain depth {dc} is below {need} needed for member {i}")
        codomain = _built(member, dc)
        res = max_feasible_map(domain, codomain, prefix.K)
        out.append(MemberVerdict(i, res.feasible, dd, dc, res))
    return out


def sabotage(prefix: AdversaryPrefix, index: int, value) -> AdversaryPrefix:
    """Copy of the prefix with gamma*_index replaced (negative controls)."""
    stars = list(prefix.gamma_star)
    stars[index - 1] = as_rational(value)
    return replace(prefix, gamma_star=tuple(stars))
