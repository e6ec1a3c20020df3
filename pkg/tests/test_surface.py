"""Parsing, printing, round-trips, and JSON serialization."""

import json
import random

import pytest

from daggerlc.gen import random_judgement
from daggerlc.rewrite import normalize
from daggerlc.sequent import alpha_equiv
from daggerlc.surface import (
    SurfaceError, judgement_json, parse, parse_judgement, parse_script,
    print_judgement, print_script, to_json_text, trace_json,
)
from daggerlc.terms import (
    GREEN, Phase, Spider, Star, TAtom, TDual, TTensor, Tensor, Var,
)


class TestParsing:
    def test_identity(self):
        j = parse_judgement("x:A |- x:A")
        assert str(j) == "x : A |- x : A"

    def test_copying_sequent(self):
        j = parse_judgement(
            "x1:A |- { G{1,2} : x1* (x) x2 (x) x3 } x2 (x) x3 : A (x) A")
        assert len(j.soup) == 1
        assert j.soup[0].left == Spider(GREEN, 1, 2)

    def test_connection_type_inferred(self):
        j = parse_judgement(
            "x1:A |- { G{1,2} : x1* (x) x2 (x) x3 } x2 (x) x3 : A (x) A")
        assert str(j.soup[0].type) == "A* (x) A (x) A"

    def test_phases(self):
        j = parse_judgement("|- { G{0,1}[3/4pi] : k } k : A")
        assert j.soup[0].left.phase == Phase.of(3, 4)
        j = parse_judgement("|- { G{0,1}[-1/4pi] : k } k : A")
        assert j.soup[0].left.phase == Phase.of(-1, 4)
        j = parse_judgement("|- { G{0,1}[1pi] : k } k : A")
        assert j.soup[0].left.phase == Phase.of(1)

    def test_star_postfix(self):
        j = parse_judgement("x : A, y : B |- (x (x) y)* : B* (x) A*")
        assert j.conclusion.term == Tensor(Star(Var("y")), Star(Var("x")))

    def test_declared_constant(self):
        j = parse_judgement(
            "declare #m : A* (x) B\n|- { #m : x* (x) y } x* (x) y "
            ": A* (x) B")
        assert j.declarations == (("m", TTensor(TDual(TAtom("A")),
                                                TAtom("B"))),)

    def test_undeclared_constant_rejected(self):
        with pytest.raises(SurfaceError):
            parse_judgement("|- { #m : x* (x) y } x* (x) y : A* (x) B")

    def test_linearity_violation(self):
        with pytest.raises(SurfaceError, match="linearity"):
            parse_judgement("x:A |- y:A")

    def test_type_conflict(self):
        with pytest.raises(SurfaceError, match="types"):
            parse_judgement("x:A |- { x* : y : B* } y:B")

    def test_syntax_error_has_position(self):
        with pytest.raises(SurfaceError, match="line 1"):
            parse_judgement("x : A |-")

    def test_uninferable_connection_rejected(self):
        with pytest.raises(SurfaceError, match="infer"):
            parse_judgement("|- { G{0,1} : k, G{1,0} : k* } 1 : I")

    def test_comments_and_blank_lines(self):
        j = parse_judgement("-- a wire\n\nx:A |- x:A  -- trailing\n")
        assert str(j) == "x : A |- x : A"

    def test_kind_detection(self):
        assert parse("x:A |- x:A").conclusion.type == TAtom("A")
        s = parse("start x:A |- x:A\napply spider-identity at *")
        assert s.steps == [("spider-identity", None, "forward")]


class TestScripts:
    def test_parse_apply_forms(self):
        s = parse_script(
            "start x:A |- { G{1,1} : x* (x) y } y:A\n"
            "apply spider-identity at 0\n"
            "apply normalize at *\n"
            "apply phase-lift at * backward\n"
            "apply copy-regroup at 1,2 with a=p, b=q\n")
        assert s.steps[0] == ("spider-identity", (0,), "forward")
        assert s.steps[1] == ("normalize", None, "forward")
        assert s.steps[2] == ("phase-lift", None, "backward")
        assert s.steps[3] == ("copy-regroup", (1, 2), "forward",
                              {"a": Var("p"), "b": Var("q")})

    def test_script_round_trip(self):
        text = ("start x:A |- { G{1,1} : x* (x) y } y:A\n"
                "apply spider-identity at 0\n"
                "apply normalize at *")
        s = parse_script(text)
        s2 = parse_script(print_script(s))
        assert s2.steps == s.steps
        assert alpha_equiv(s2.start, s.start)

    def test_malformed_apply_rejected(self):
        with pytest.raises(SurfaceError):
            parse_script("start x:A |- x:A\napply spider-identity")

    def test_apply_before_start_rejected(self):
        with pytest.raises(SurfaceError):
            parse_script("apply spider-identity at *\nstart x:A |- x:A")


class TestRoundTrip:
    def test_print_parse_alpha_identity_random(self):
        rng = random.Random(11)
        for _ in range(100):
            j = random_judgement(rng)
            assert alpha_equiv(parse_judgement(print_judgement(j)), j)

    def test_print_parse_on_normal_forms(self):
        rng = random.Random(12)
        for _ in range(50):
            j, _ = normalize(random_judgement(rng))
            assert alpha_equiv(parse_judgement(print_judgement(j)), j)


class TestJson:
    def test_tagged_nodes(self):
        j = parse_judgement("x:A |- x:A")
        d = judgement_json(j)
        assert d["k"] == "judgement"
        assert d["conclusion"]["term"] == {"k": "var", "name": "x"}
        assert d["conclusion"]["type"] == {"k": "tatom", "name": "A"}

    def test_serializes_to_json(self):
        j = parse_judgement(
            "x1:A |- { G{1,2} : x1* (x) x2 (x) x3 } x2 (x) x3 : A (x) A")
        text = to_json_text(judgement_json(j))
        back = json.loads(text)
        assert back["soup"][0]["k"] == "conn"
        assert back["soup"][0]["left"]["k"] == "spider"

    def test_trace_json(self):
        j = parse_judgement("|- { G{0,1} : a, a : b } b : A")
        _, trace = normalize(j)
        d = trace_json(trace)
        assert d["k"] == "trace"
        assert all({"ruleOrStep", "before", "after"} <= set(s)
                   for s in d["steps"])
