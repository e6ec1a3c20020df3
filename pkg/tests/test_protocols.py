"""Worked derivations: each case replays to its expected endpoint and every
intermediate judgement denotes the same matrix as the start."""

import numpy as np
import pytest

from daggerlc import protocols as P
from daggerlc.classical import rule_instance
from daggerlc.oracle import equal_up_to_scalar, interpret
from daggerlc.sequent import alpha_equiv
from daggerlc.terms import Phase


def replay(case):
    trace = P.run_protocol(case)
    m0 = interpret(trace.initial, case.interpretation)
    for label, j in trace.steps:
        m = interpret(j, case.interpretation)
        assert equal_up_to_scalar(m, m0, 1e-9), f"value drifted at {label}"
    assert alpha_equiv(trace.final, case.expected), str(trace.final)
    return trace, m0


class TestCases:
    @pytest.mark.parametrize("name", P.case_names())
    def test_case_replays(self, name):
        replay(P.protocol_case(name))

    def test_unknown_case_rejected(self):
        with pytest.raises(KeyError):
            P.protocol_case("nonesuch")


class TestTeleportation:
    @pytest.mark.parametrize("alpha", [Phase.of(0), Phase.of(1)])
    @pytest.mark.parametrize("beta", [Phase.of(0), Phase.of(1)])
    def test_all_measurement_branches(self, alpha, beta):
        case = P.teleportation_case(alpha, beta)
        _, m0 = replay(case)
        # each branch is the identity channel up to a scalar
        assert equal_up_to_scalar(m0, np.eye(2), 1e-9)


class TestKeyDistribution:
    @pytest.mark.parametrize("mismatch", [False, True])
    def test_measurement_lemmas(self, mismatch):
        replay(P.qkd_lemma_case(mismatch))

    def test_defining_and_derived_rules_sound(self):
        interp = P.qkd_interpretation()
        for rule in P.CONTROLLED_RULES + P.derived_rules()[:5]:
            jl, jr = rule_instance(rule)
            assert equal_up_to_scalar(interpret(jl, interp),
                                      interpret(jr, interp),
                                      1e-9), rule.name

    def test_matched_run_yields_correlated_output(self):
        case = P.protocol_case("qkd-matched")
        trace = P.run_protocol(case)
        term = trace.final.conclusion.term
        # both halves of the output are the same variable: a shared bit
        assert term.left == term.right
