"""Brute-force dynamic program for monotone K-Lipschitz feasibility.

Shares no code with the sweep in :mod:`lipretract.maps`. Values at the
domain's component endpoints are restricted to a finite candidate set that
contains every value an extremal map can take; forward and backward
reachability over that set decide feasibility and bound every feasible map.
"""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from fractions import Fraction

from .gaps import GapStructure
from .rationals import ONE, ZERO, as_rational


@dataclass(frozen=True)
class GridResult:
    feasible: bool
    keys: tuple[Fraction, ...]
    reachable: tuple[tuple[Fraction, ...], ...]
    through: tuple[tuple[Fraction, ...], ...]  # values on some full feasible map


def _codomain_block(intervals, v):
    for k, (lo, hi) in enumerate(intervals):
        if lo <= v <= hi:
            return k
    return None


def grid_feasibility(domain: GapStructure, codomain: GapStructure, K) -> GridResult:
    K = as_rational(K)
    # domain complement pieces and codomain complement pieces, recomputed here
    d_cuts = sorted((g.left, g.right) for g in domain.gaps)
    d_pieces, cur = [], ZERO
    for lo, hi in d_cuts:
        d_pieces.append((cur, lo))
        cur = hi
    d_pieces.append((cur, ONE))
    c_cuts = sorted((g.left, g.right) for g in codomain.gaps)
    c_pieces, cur = [], ZERO
    for lo, hi in c_cuts:
        c_pieces.append((cur, lo))
        cur = hi
    c_pieces.append((cur, ONE))

    keys: list[Fraction] = []
    for a, b in d_pieces:
        keys.extend((a, b))
    c_ends = sorted({ZERO, ONE} | {e for piece in c_pieces for e in piece})

    def candidates(t: int) -> list[Fraction]:
        x = keys[t]
        vals = set()
        for xp in keys[: t + 1]:
            for e in c_ends:
                v = e + K * (x - xp)
                if v <= ONE and _codomain_block(c_pieces, v) is not None:
                    vals.add(v)
        return sorted(vals)

    cand = [candidates(t) for t in range(len(keys))]

    def step_ok(t, v, w):
        # transition from keys[t] value v to keys[t+1] value w
        dx = keys[t + 1] - keys[t]
        if not v <= w <= v + K * dx:
            return False
        if t % 2 == 0:  # inside a domain component: stay in one codomain piece
            return _codomain_block(c_pieces, v) == _codomain_block(c_pieces, w)
        return True

    reach = [[ZERO] if ZERO in cand[0] else []]
    for t in range(len(keys) - 1):
        src = reach[-1]
        nxt = []
        for w in cand[t + 1]:
            i, j = bisect_left(src, w - K * (keys[t + 1] - keys[t])), bisect_right(src, w)
            if any(step_ok(t, v, w) for v in src[i:j]):
                nxt.append(w)
        reach.append(nxt)
    feasible = ONE in reach[-1]

    back = [[ONE] if feasible else []]
    for t in range(len(keys) - 2, -1, -1):
        dst = back[0]
        prev = []
        for v in reach[t]:
            i, j = bisect_left(dst, v), bisect_right(dst, v + K * (keys[t + 1] - keys[t]))
            if any(step_ok(t, v, w) for w in dst[i:j]):
                prev.append(v)
        back.insert(0, prev)
    return GridResult(feasible, tuple(keys), tuple(map(tuple, reach)), tuple(map(tuple, back)))
