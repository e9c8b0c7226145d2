from __future__ import annotations

import random
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from generators import random_gap_structure
from lipretract.gaps import Gap, GapStructure, PreconditionError
from lipretract.grid_oracle import grid_feasibility
from lipretract.maps import (CertificateError, JumpCertificate, MonotonePLMap, check_jump_length,
                             group_by_domain_gap, jump_certificates, max_feasible_map, monotonize,
                             sweep_contains, sweep_escape_check, sweeping)

DOM = GapStructure.from_intervals([(Q(2, 5), Q(3, 5))])
COD = GapStructure.from_intervals([(Q(1, 10), Q(3, 10))])


def test_k1_is_blocked():
    res = max_feasible_map(DOM, COD, 1)
    assert not res.feasible
    assert res.terminal_value == Q(7, 10)
    assert res.blocking_chain == (Q(1, 10),)


def test_k2_is_feasible_with_pinned_envelope():
    res = max_feasible_map(DOM, COD, 2)
    assert res.feasible and res.terminal_value == 1
    assert res.max_map.breakpoints == (
        (Q(0), Q(0)), (Q(1, 20), Q(1, 10)), (Q(2, 5), Q(1, 10)), (Q(3, 5), Q(1, 2)),
        (Q(17, 20), Q(1)), (Q(1), Q(1)))
    res.max_map.check_codomain(DOM, COD)


def test_identity_structure_is_feasible_for_k1():
    gs = GapStructure.from_intervals([(Q(1, 5), Q(2, 5)), (Q(1, 2), Q(3, 4))])
    res = max_feasible_map(gs, gs, 1)
    assert res.feasible
    for a, b in gs.components():
        assert res.max_map(a) >= a and res.max_map(b) >= b


def test_k_below_one_never_reaches_one():
    assert not max_feasible_map(DOM, DOM, Q(1, 2)).feasible


def test_monotonize_examples():
    m = monotonize([(0, 0), (Q(2, 5), Q(1, 2)), (Q(7, 10), Q(3, 10)), (1, 1)])
    assert m.breakpoints == ((0, 0), (Q(2, 5), Q(1, 2)), (Q(7, 10), Q(1, 2)), (1, 1))
    same = monotonize([(0, 0), (Q(1, 2), Q(1, 4)), (1, 1)])
    assert same.breakpoints == ((0, 0), (Q(1, 2), Q(1, 4)), (1, 1))
    assert monotonize([(0, 0), (1, 1)]).breakpoints == ((0, 0), (1, 1))
    with pytest.raises(PreconditionError):
        monotonize([(0, 0), (1, Q(1, 2))])


def test_map_rejects_steep_slope():
    with pytest.raises(ValueError):
        MonotonePLMap(((0, 0), (Q(1, 4), Q(1, 2))), 1)


def test_certificate_for_k2_example():
    res = max_feasible_map(DOM, COD, 2)
    (cert,) = jump_certificates(res.max_map, DOM, COD)
    assert (cert.codomain_gap.left, cert.codomain_gap.right) == (Q(1, 10), Q(3, 10))
    assert (cert.domain_gap.left, cert.domain_gap.right) == (Q(2, 5), Q(3, 5))
    assert cert.p_minus == Q(1, 10) and cert.p_plus == Q(1, 2)


def test_identity_self_jumps():
    gs = GapStructure.from_intervals([(Q(1, 5), Q(2, 5)), (Q(1, 2), Q(3, 4))])
    ident = MonotonePLMap(((0, 0), (1, 1)), 1)
    for c in jump_certificates(ident, gs, gs):
        assert c.domain_gap == c.codomain_gap
        assert (c.x_minus, c.y_plus) == (c.codomain_gap.left, c.codomain_gap.right)


def test_certificates_refuse_infeasible_map():
    res = max_feasible_map(DOM, COD, 1)
    with pytest.raises(CertificateError):
        jump_certificates(res.max_map, DOM, COD)


def _cert(cod, dom):
    return JumpCertificate(cod, dom, cod.left, cod.right, dom.left, dom.right)


def test_check_jump_length_two_gaps():
    c1 = Gap(Q(1, 10), Q(1, 5), 1)
    c2 = Gap(Q(7, 10), Q(1, 10), 2)
    short, long = Gap(Q(0), Q(1, 4), 1), Gap(Q(0), Q(7, 20), 1)
    assert not check_jump_length([_cert(c1, short), _cert(c2, short)], 2)
    assert check_jump_length([_cert(c1, long), _cert(c2, long)], 2)
    assert check_jump_length([_cert(c1, short)], 2)
    assert check_jump_length([], 2)


@pytest.mark.parametrize("a, b, r, interval, length", [
    (Q(3, 10), Q(2, 5), Q(1, 20), None, Q(0)),
    (Q(3, 10), Q(2, 5), Q(1, 5), (Q(1, 5), Q(1, 2)), Q(3, 10)),
    (Q(0), Q(1), Q(1), (Q(0), Q(1)), Q(1)),
    (Q(0), Q(1), Q(4, 5), (Q(1, 5), Q(4, 5)), Q(3, 5)),
])
def test_sweeping_examples(a, b, r, interval, length):
    sw = sweeping(a, b, r)
    assert sw.as_interval() == interval
    assert sw.length == length


def test_sweep_escape_example():
    c1 = Gap(Q(1, 10), Q(1, 5), 1)
    c2 = Gap(Q(7, 10), Q(1, 10), 2)
    sw = sweeping(c1.left, c1.right, Q(1, 4))
    assert sw.as_interval() == (Q(1, 20), Q(7, 20))
    assert not sweep_contains(sw, c2.left, c2.right)
    dom = Gap(Q(0), Q(3, 5), 1)
    assert sweep_escape_check(_cert(c1, dom), _cert(c2, dom), Q(1, 4), 2)
    assert not sweep_escape_check(_cert(c1, Gap(Q(0), Q(1, 8), 1)), _cert(c2, Gap(Q(0), Q(1, 8), 1)),
                                  Q(1, 4), 2)
    inner = Gap(Q(1, 8), Q(1, 20), 3)
    with pytest.raises(PreconditionError):
        sweep_escape_check(_cert(c1, dom), _cert(inner, dom), Q(1, 4), 2)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10 ** 7), st.sampled_from([Q(1), Q(3, 2), Q(2), Q(3)]))
def test_decider_agrees_with_grid_oracle(seed, K):
    rng = random.Random(seed)
    dom, cod = random_gap_structure(rng), random_gap_structure(rng)
    res = max_feasible_map(dom, cod, K)
    grid = grid_feasibility(dom, cod, K)
    assert res.feasible == grid.feasible
    for x, reach in zip(grid.keys, grid.reachable):
        if reach:
            assert max(reach) == res.max_map(x)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10 ** 7))
def test_certificates_on_feasible_instances(seed):
    rng = random.Random(seed)
    dom, cod = random_gap_structure(rng), random_gap_structure(rng, max_gaps=3)
    res = max_feasible_map(dom, cod, 4)
    if not res.feasible:
        return
    certs = jump_certificates(res.max_map, dom, cod)
    assert [c.codomain_gap for c in certs] == list(cod.gaps)
    for group in group_by_domain_gap(certs).values():
        assert check_jump_length(group, 4)
