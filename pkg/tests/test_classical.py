"""The named rule catalog: matching, application, oracle validity."""

import numpy as np
import pytest

from daggerlc.classical import (
    ConstantFlags, MetaVar, NoMatch, apply_rule, derive_cup,
    equiv_modulo_rules, match_soup, rule_instance, rule_library,
    rules_by_name, run_script, script_complementarity,
    script_dualiser_unitarity, Script,
)
from daggerlc.oracle import equal_up_to_scalar, interpret, scalar_ratio
from daggerlc.rewrite import normalize
from daggerlc.sequent import (
    ContextEntry, alpha_equiv, closed, connect, judgement, rule_curry,
)
from daggerlc.terms import (
    GREEN, HADAMARD, RED,
    Phase, Spider, Star, TAtom, TDual, TTensor, Tensor, Var, negate_term,
    tensor, tensor_type,
)

A = TAtom("A")
R = rules_by_name()
PI = Phase.of(1)


def v(name):
    return Var(name)


# a red point is a scaled computational-basis state: the green structure
# copies and deletes it
CLASSICAL_POINT = Spider(RED, 0, 1)
FLAGS = (ConstantFlags(CLASSICAL_POINT, classical_for=frozenset({GREEN})),
         ConstantFlags(Spider(RED, 0, 1, PI),
                       classical_for=frozenset({GREEN})),
         ConstantFlags(Spider(GREEN, 0, 1),
                       classical_for=frozenset({RED})))


class TestMatching:
    def test_match_respects_site(self):
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(Spider(GREEN, 1, 1), Tensor(Star(v("x")), v("m")),
                     TTensor(TDual(A), A)),
             connect(Spider(GREEN, 1, 1), Tensor(Star(v("m")), v("z")),
                     TTensor(TDual(A), A))],
            ContextEntry(v("z"), A))
        idx, _, _ = match_soup(R["spider-identity"].lhs, j.soup, site=(1,))
        assert idx == (1,)

    def test_where_pins_binding(self):
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(Spider(GREEN, 1, 1), Tensor(Star(v("x")), v("m")),
                     TTensor(TDual(A), A)),
             connect(Spider(GREEN, 1, 1), Tensor(Star(v("m")), v("z")),
                     TTensor(TDual(A), A))],
            ContextEntry(v("z"), A))
        _, b, _ = match_soup(R["spider-identity"].lhs, j.soup,
                             where={"a": v("m")})
        assert b["a"] == v("m")

    def test_no_match_raises(self):
        j = closed(v("k"), A, [(Spider(GREEN, 0, 1), v("k"), A)])
        with pytest.raises(NoMatch):
            apply_rule(j, R["hadamard-involution"])

    def test_backward_direction(self):
        j = judgement([ContextEntry(v("x"), A)],
                      [connect(Spider(GREEN, 1, 1),
                               Tensor(Star(v("x")), v("z")),
                               TTensor(TDual(A), A))],
                      ContextEntry(v("z"), A))
        wire = apply_rule(j, R["spider-identity"])
        back = apply_rule(wire, R["spider-identity"],
                          direction="backward")
        assert alpha_equiv(back, j)


class TestCatalogOracle:
    @pytest.mark.parametrize(
        "name", [r.name for r in rule_library() if r.transform is None])
    def test_pattern_rule_sound(self, name):
        rule = R[name]
        where = None
        if rule.side_conditions:
            mv = rule.side_conditions[0][0]
            color = rule.side_conditions[0][2]
            where = {mv: Spider(RED if color == GREEN else GREEN, 0, 1)}
        jl, jr = rule_instance(rule, where)
        assert equal_up_to_scalar(interpret(jl), interpret(jr), 1e-9), name


class TestProceduralRules:
    def test_spider_fusion(self):
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(Spider(GREEN, 1, 2, Phase.of(1, 4)),
                     tensor(Star(v("x")), v("m"), v("p")),
                     tensor_type(TDual(A), A, A)),
             connect(Spider(GREEN, 1, 1, Phase.of(1, 4)),
                     Tensor(Star(v("m")), v("q")),
                     TTensor(TDual(A), A))],
            ContextEntry(Tensor(v("p"), v("q")), TTensor(A, A)))
        j2 = apply_rule(j, R["spider-fusion"])
        assert len(j2.soup) == 1
        sp = j2.soup[0].left
        assert sp == Spider(GREEN, 1, 2, Phase.of(1, 2))
        assert equal_up_to_scalar(interpret(j2), interpret(j), 1e-9)

    def test_fusion_needs_same_color(self):
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(Spider(GREEN, 1, 1), Tensor(Star(v("x")), v("m")),
                     TTensor(TDual(A), A)),
             connect(Spider(RED, 1, 1), Tensor(Star(v("m")), v("z")),
                     TTensor(TDual(A), A))],
            ContextEntry(v("z"), A))
        with pytest.raises(NoMatch):
            apply_rule(j, R["spider-fusion"])

    def test_pi_commutation_self_inverse(self):
        j = judgement(
            [ContextEntry(v("a"), A)],
            [connect(Spider(RED, 1, 1, PI), Tensor(Star(v("a")), v("m")),
                     TTensor(TDual(A), A)),
             connect(Spider(GREEN, 1, 1, Phase.of(1, 4)),
                     Tensor(Star(v("m")), v("b")), TTensor(TDual(A), A))],
            ContextEntry(v("b"), A))
        j2 = apply_rule(j, R["pi-commutation"])
        assert equal_up_to_scalar(interpret(j2), interpret(j), 1e-9)
        j3 = apply_rule(j2, R["pi-commutation"])
        assert np.allclose(interpret(j3), interpret(j), atol=1e-9)

    def test_color_change_embedded_state(self):
        st = Spider(RED, 0, 1, PI)
        j = judgement([], [connect(HADAMARD,
                                   Tensor(negate_term(st), v("b")),
                                   TTensor(TDual(A), A))],
                      ContextEntry(v("b"), A))
        j2 = apply_rule(j, R["color-change"])
        assert equal_up_to_scalar(interpret(j2), interpret(j), 1e-9)
        assert any(isinstance(c.left, Spider) and c.left.color == GREEN
                   for c in j2.soup)

    def test_copy_through_classical_point(self):
        j = judgement(
            [],
            [connect(Spider(GREEN, 1, 2),
                     tensor(negate_term(CLASSICAL_POINT), v("p"), v("q")),
                     tensor_type(TDual(A), A, A))],
            ContextEntry(Tensor(v("p"), v("q")), TTensor(A, A)))
        j2 = apply_rule(j, R["copy-through"], flags=FLAGS)
        assert j2.conclusion.term == Tensor(CLASSICAL_POINT, CLASSICAL_POINT)
        assert equal_up_to_scalar(interpret(j2), interpret(j), 1e-9)

    def test_copy_through_needs_flag(self):
        j = judgement(
            [],
            [connect(Spider(GREEN, 1, 2),
                     tensor(negate_term(Spider(RED, 0, 1, Phase.of(1, 4))),
                            v("p"), v("q")),
                     tensor_type(TDual(A), A, A))],
            ContextEntry(Tensor(v("p"), v("q")), TTensor(A, A)))
        with pytest.raises(NoMatch):
            apply_rule(j, R["copy-through"], flags=FLAGS)

    def test_cap_bend(self):
        j = judgement([ContextEntry(v("x"), A)],
                      [connect(Spider(GREEN, 2, 0),
                               Tensor(v("p"), v("x")), tensor_type(A, A)),
                       connect(Spider(GREEN, 0, 1), v("p"), A)],
                      ContextEntry(Tensor(v("z"), v("z")), TTensor(A, A)))
        j2 = apply_rule(j, R["cap-bend"])
        assert np.allclose(interpret(j2), interpret(j), atol=1e-9)

    def test_phase_lift_backward_state_on_output(self):
        j = judgement(
            [ContextEntry(v("x"), A)],
            [connect(Spider(GREEN, 1, 2),
                     tensor(Star(v("x")), v("p"), v("q")),
                     tensor_type(TDual(A), A, A)),
             connect(Spider(GREEN, 0, 1, Phase.of(1, 4)), v("p"), A)],
            ContextEntry(v("q"), A))
        merged, _ = normalize(j)
        j2 = apply_rule(merged, R["phase-lift"], direction="backward")
        assert any(isinstance(c.left, Spider)
                   and (c.left.n_in, c.left.n_out) == (1, 1)
                   and c.left.phase == Phase.of(-1, 4) for c in j2.soup)
        assert equal_up_to_scalar(interpret(j2), interpret(merged), 1e-9)


class TestDerivedScripts:
    def test_dualiser_unitarity(self):
        trace = script_dualiser_unitarity()
        assert str(trace.final.soup[0]) in ("x1 : x2", "x1* : x2*")
        m0 = interpret(trace.initial)
        for _, j in trace.steps:
            assert equal_up_to_scalar(interpret(j), m0, 1e-9)

    def test_derive_cup(self):
        j = derive_cup()
        want = closed(Tensor(Star(v("x")), v("x")), TTensor(TDual(A), A))
        assert alpha_equiv(j, want)

    def test_cup_cut_reproduces_curry(self):
        from daggerlc.sequent import (rule_cut, rule_id, rule_tensor_left,
                                      rule_tensor_right)

        cup = derive_cup()
        wire = rule_id("w", A)
        curried = rule_curry(wire)
        # currying a map is cutting the cup into its tensored-up context:
        # u:A*, w:A |- u (x) w, packed, receives the cup
        paired = rule_tensor_left(
            rule_tensor_right(rule_id("u", TDual(A)), wire), 0, "pack")
        cut = rule_cut(cup, paired)
        assert alpha_equiv(normalize(cut)[0], normalize(curried)[0])

    def test_complementarity_scripts(self):
        for color, const in ((GREEN, Spider(RED, 0, 1)),
                             (RED, Spider(GREEN, 0, 1))):
            trace = script_complementarity(color, const, FLAGS)
            m0 = interpret(trace.initial)
            for _, j in trace.steps:
                assert equal_up_to_scalar(interpret(j), m0, 1e-9)

    def test_equiv_modulo_rules(self):
        j1 = judgement([ContextEntry(v("x"), A)],
                       [connect(Spider(GREEN, 1, 1),
                                Tensor(Star(v("x")), v("z")),
                                TTensor(TDual(A), A))],
                       ContextEntry(v("z"), A))
        j2 = judgement([ContextEntry(v("x"), A)],
                       [connect(v("x"), v("z"), A)],
                       ContextEntry(v("z"), A))
        assert equiv_modulo_rules(j1, j2, depth=2)

    def test_run_script_normalize_pseudo_rule(self):
        j = judgement([ContextEntry(v("x"), A)],
                      [connect(Spider(GREEN, 1, 1),
                               Tensor(Star(v("x")), v("m")),
                               TTensor(TDual(A), A)),
                       connect(v("m"), v("z"), A)],
                      ContextEntry(v("z"), A))
        script = Script("t", j, [("spider-identity", None, "forward"),
                                 ("normalize", None, "forward")])
        trace = run_script(script, R)
        assert alpha_equiv(trace.final,
                           judgement([ContextEntry(v("x"), A)],
                                     [connect(v("x"), v("z"), A)],
                                     ContextEntry(v("z"), A)))
