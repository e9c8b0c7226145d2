from __future__ import annotations

import json
from fractions import Fraction as Q

import pytest

from lipretract.adversary import (AdversaryPrefix, GuardViolation, audit_prefix, construct_gamma_star,
                                  property_bound, sabotage, sweep_chain, verify_prefix_defeat)
from lipretract.gaps import GammaSequence, PreconditionError


def geo(eps0, first, ratio):
    return GammaSequence(Q(eps0), [Q(first)], tail_ratio=Q(ratio))


FAMILY3 = [geo("1/4", "1/4", "1/2"), geo("1/4", "1/3", "1/3"), geo("1/4", "2/5", "1/5")]
FAMILY4 = [geo("1/4", "1/4", "1/2"), geo("1/4", "1/3", "1/3"), geo("1/4", "2/5", "1/5"),
           geo("1/4", "1/5", "2/3")]


def test_single_member_first_step():
    prefix = construct_gamma_star([GammaSequence(Q(1, 4), [Q(1, 4)])], 2)
    assert prefix.gamma_star == (Q(1, 128),)
    (verdict,) = verify_prefix_defeat(prefix, depth_domain=4, depth_codomain=1)
    assert not verdict.feasible


def test_three_member_golden_prefix():
    prefix = construct_gamma_star(FAMILY3, 2)
    assert prefix.gamma_star == (Q(1, 128), Q(1, 1152), Q(1, 16000))
    assert [s.n_omega for s in prefix.steps] == [1, 2, 3]
    assert audit_prefix(prefix) == []
    assert not any(v.feasible for v in verify_prefix_defeat(prefix))


def test_four_member_golden_prefix():
    prefix = construct_gamma_star(FAMILY4, 3)
    assert prefix.gamma_star == (Q(1, 192), Q(1, 1728), Q(1, 24000), Q(1, 48000))
    assert [s.n_omega for s in prefix.steps] == [1, 2, 3, 4]
    assert audit_prefix(prefix) == []
    verdicts = verify_prefix_defeat(prefix, depth_domain=6, depth_codomain=6)
    assert [v.feasible for v in verdicts] == [False] * 4


def test_values_respect_property_bounds():
    prefix = construct_gamma_star(FAMILY4, 3)
    for i, g in enumerate(prefix.gamma_star, start=1):
        assert 0 < g < property_bound(i, prefix.K, prefix.eps0)
    assert list(prefix.gamma_star) == sorted(prefix.gamma_star, reverse=True)


def test_sabotage_restores_feasibility():
    prefix = construct_gamma_star(FAMILY4, 3)
    bad = sabotage(prefix, 1, FAMILY4[0].term(1))
    assert any(v.feasible for v in verify_prefix_defeat(bad, depth_domain=4, depth_codomain=4))
    assert audit_prefix(bad)


def test_contraction_factor_below_one_is_infeasible():
    prefix = construct_gamma_star(FAMILY3, 2)
    slow = AdversaryPrefix(prefix.K / 4, prefix.eps0, prefix.family, prefix.gamma_star, prefix.steps)
    assert not any(v.feasible for v in verify_prefix_defeat(slow))


def test_sweep_chain_base_and_monotone_indices():
    prefix = construct_gamma_star(FAMILY3, 2)
    empty = sweep_chain(FAMILY3[1], (), prefix.gamma_star, 2, 8)
    assert empty.indices == (1,)
    for step in prefix.steps[1:]:
        for c in step.chains:
            assert list(c.indices) == sorted(set(c.indices))
            assert len(c.indices) == len(c.sigma) + 1


def test_guards():
    with pytest.raises(GuardViolation):
        construct_gamma_star([FAMILY3[0]] * 9, 2)
    with pytest.raises(GuardViolation):
        construct_gamma_star([], 2)
    with pytest.raises(PreconditionError):
        construct_gamma_star([FAMILY3[0], geo("1/8", "1/4", "1/2")], 2)
    prefix = construct_gamma_star(FAMILY3, 2)
    with pytest.raises(PreconditionError):
        verify_prefix_defeat(prefix, depth_domain=2)
    with pytest.raises(PreconditionError):
        verify_prefix_defeat(prefix, depth_codomain=1)


def test_parallel_construction_matches_serial():
    serial = construct_gamma_star(FAMILY4, 3, jobs=1)
    parallel = construct_gamma_star(FAMILY4, 3, jobs=4)
    assert json.dumps(serial.to_json()) == json.dumps(parallel.to_json())


def test_prefix_json_round_trip():
    prefix = construct_gamma_star(FAMILY3, 2)
    again = AdversaryPrefix.from_json(json.loads(json.dumps(prefix.to_json())))
    assert again == prefix
