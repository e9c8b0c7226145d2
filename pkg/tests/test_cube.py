from __future__ import annotations

import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from generators import all_vertices, project_to_sheet, random_sheet_point
from lipretract.cube import (STAR, CubePoint, DefeatWitness, DimensionMismatch, SheetSpec,
                             TableIncomplete, check_retraction_violation, component_of,
                             cross_sheet_bruteforce, cube_distance, cube_point, defeat_family,
                             flip_point, membership, nearest_point_retraction, vertex)
from lipretract.gaps import PreconditionError

SHEET = SheetSpec((Q(1, 10), Q(1, 5)))
FAMILY = [SHEET, SheetSpec((Q(1, 5), Q(2, 5)))]


def test_membership_examples():
    assert membership((0, 0), SHEET)
    assert membership((Q(3, 10), Q(4, 5)), SHEET)
    assert not membership((Q(1, 2), 0), SHEET)
    with pytest.raises(DimensionMismatch):
        membership((0,), SHEET)


def test_component_examples():
    assert component_of(vertex({1}, 3)) == frozenset({1})
    assert component_of(cube_point("0", (Q(3, 10), Q(4, 5)))) == frozenset({1})
    assert component_of(cube_point("0", (Q(1, 10), Q(2, 5)))) == frozenset()


def test_cross_sheet_distance_example():
    p = cube_point("0", (Q(3, 10), Q(4, 5)))
    q = cube_point("1", (Q(3, 10), Q(4, 5)))
    assert cube_distance(p, q) == Q(3, 5)
    assert cross_sheet_bruteforce(p.coords, q.coords) == Q(3, 5)
    assert cube_distance(p, p) == 0


def test_vertices_are_shared():
    v = vertex({0}, 2)
    p = cube_point("0", (Q(4, 5), Q(1, 10)))
    assert cube_distance(v, p) == Q(1, 5)
    assert cube_point("1", (1, 0)) == v


def test_defeat_example():
    w = defeat_family(FAMILY, 2)
    assert w.gamma_star.gamma == (Q(1, 40), Q(1, 10))
    assert w.beta0 == 0
    assert w.distance == Q(1, 20)
    assert 2 * w.distance == w.family[0].gamma[0]
    for b, s in enumerate(FAMILY):
        assert w.gamma_star.gamma[b] < s.gamma[b]


def test_defeat_guards():
    with pytest.raises(PreconditionError):
        defeat_family(FAMILY, Q(1, 2))
    with pytest.raises(DimensionMismatch):
        defeat_family(FAMILY[:1], 2)
    with pytest.raises(DimensionMismatch):
        defeat_family(FAMILY, 2, beta0=2)


def test_witness_json_round_trip():
    w = defeat_family(FAMILY, 3, beta0=1)
    assert DefeatWitness.from_json(w.to_json()) == w


def _candidates(w):
    dim = len(w.family)
    flips = [flip_point(w.gamma_star, a) for a in range(dim)]
    targets = all_vertices(dim)
    for b in range(dim):
        targets.append(project_to_sheet(w.p_star, b, w.family))
        targets.extend(project_to_sheet(f, b, w.family) for f in flips)
    return list(dict.fromkeys(targets)), [w.p_star] + flips


def test_nearest_point_retraction_is_violated():
    w = defeat_family(FAMILY, 2)
    targets, sources = _candidates(w)
    R = nearest_point_retraction(targets, sources, w.space())
    rep = check_retraction_violation(R, 2, w)
    assert (rep.status, rep.case, rep.lhs, rep.rhs) == ("violated", "vertex", 1, Q(1, 10))


def test_sheet_case_report():
    w = defeat_family(FAMILY, 2)
    beta = 1
    q = flip_point(w.gamma_star, beta)
    R = {v: v for v in all_vertices(2)}
    R[w.p_star] = project_to_sheet(w.p_star, beta, FAMILY)
    R[q] = project_to_sheet(q, beta, FAMILY)
    rep = check_retraction_violation(R, 2, w)
    assert rep.case == "sheet" and rep.beta0 == beta
    assert rep.rhs == FAMILY[beta].gamma[beta]
    assert rep.lhs == 2 * FAMILY[beta].gamma[beta]
    assert rep.status == "violated"


def test_incomplete_and_invalid_tables():
    w = defeat_family(FAMILY, 2)
    with pytest.raises(TableIncomplete):
        check_retraction_violation({}, 2, w)
    with pytest.raises(TableIncomplete):
        check_retraction_violation({w.p_star: vertex(set(), 2)}, 2, w)
    with pytest.raises(PreconditionError):
        check_retraction_violation({vertex({0}, 2): vertex(set(), 2)}, 2, w)
    with pytest.raises(PreconditionError):
        check_retraction_violation({w.p_star: w.p_star}, 2, w)
    moved = {w.p_star: vertex({0}, 2)}
    assert check_retraction_violation(moved, 2, w).status == "out-of-model"


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10 ** 7), st.integers(1, 12))
def test_cross_sheet_matches_bruteforce(seed, dim):
    rng = random.Random(seed)
    a, b = (SheetSpec(tuple(Q(rng.randint(1, 15), 32) for _ in range(dim))) for _ in range(2))
    p = cube_point("a", random_sheet_point(rng, a))
    q = cube_point("b", random_sheet_point(rng, b))
    if p.is_vertex or q.is_vertex:
        return
    assert cube_distance(p, q) == cross_sheet_bruteforce(p.coords, q.coords)
    assert cube_distance(p, q) >= max(abs(x - y) for x, y in zip(p.coords, q.coords))


def test_star_sheet_name_reserved():
    w = defeat_family(FAMILY, 2)
    assert STAR in w.space().sheets
    assert isinstance(w.p_star, CubePoint) and w.p_star.sheet == STAR
