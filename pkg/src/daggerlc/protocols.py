"""Worked protocol derivations over the rule catalog: state teleportation,
a two-qubit Fourier transform, and key distribution with matched or
mismatched measurement bases.

Each case bundles a start judgement, a replayable script, the rule table and
constant flags the script needs, the oracle interpretation under which every
step preserves the denotation, and the expected final judgement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .terms import (
    Declared, GREEN, HADAMARD, Phase, RED, Spider, Star, TAtom, TDual,
    TTensor, Tensor, Var, negate_term, negate_type, tensor, tensor_type,
)
from .sequent import (
    ContextEntry, Judgement, connect, judgement, rule_cut, rule_tensor_left,
)
from .rewrite import normalize
from .classical import (
    ConstantFlags, MetaVar, NamedRule, Script, ScriptTrace, apply_rule,
    declare_defined_constant, match_soup, rules_by_name, run_script,
)
from .oracle import Interpretation, hadamard_matrix

A = TAtom("A")
B = TAtom("B")
PI = Phase.of(1)

# the measurement-controlled unitary and its conjugate, as declared constants
M_TYPE = tensor_type(negate_type(TTensor(A, B)), B)
MBAR_TYPE = tensor_type(TTensor(A, B), TDual(B))

_R0 = Spider(RED, 0, 1)
_RPI = Spider(RED, 0, 1, PI)


def _mv(name: str) -> MetaVar:
    return MetaVar(name)


def _controlled_rules():
    """The defining equations of m (identity on control 0, a color changer
    on control 1) and of its conjugate mbar."""
    b, b2 = _mv("b"), _mv("b2")
    m, mbar = Declared("m", M_TYPE), Declared("mbar", MBAR_TYPE)
    leg_m = tensor_type(TDual(A), TDual(B), B)
    leg_mbar = tensor_type(A, B, TDual(B))
    return m, mbar, (
        NamedRule("controlled-on-zero",
                  ((m, tensor(negate_term(_R0), Star(b), b2), leg_m),),
                  ((b, b2, B),)),
        NamedRule("controlled-on-one",
                  ((m, tensor(negate_term(_RPI), Star(b), b2), leg_m),),
                  ((HADAMARD, Tensor(Star(b), b2), TTensor(TDual(B), B)),)),
        NamedRule("conjugate-controlled-on-zero",
                  ((mbar, tensor(_R0, b, Star(b2)), leg_mbar),),
                  ((b, b2, B),)),
        NamedRule("conjugate-controlled-on-one",
                  ((mbar, tensor(_RPI, b, Star(b2)), leg_mbar),),
                  ((HADAMARD, Tensor(Star(b2), b), TTensor(TDual(B), B)),)),
    )


M, MBAR, CONTROLLED_RULES = _controlled_rules()
declare_defined_constant("m", M_TYPE, CONTROLLED_RULES[:2])
declare_defined_constant("mbar", MBAR_TYPE, CONTROLLED_RULES[2:])

_DECLS = (("m", M_TYPE), ("mbar", MBAR_TYPE))


def controlled_arrays():
    """Leaf-state arrays for m and mbar: axes (control, wire in, wire out),
    identity on control 0 and the color-change matrix on control 1."""
    ch = np.zeros((2, 2, 2), dtype=complex)
    ch[0] = np.eye(2)
    ch[1] = hadamard_matrix()
    return ch.ravel(), np.conj(ch).ravel()


def qkd_interpretation() -> Interpretation:
    m_arr, mbar_arr = controlled_arrays()
    return Interpretation(constants={"m": m_arr, "mbar": mbar_arr})


def derived_rules():
    """Rules derived for the key-distribution runs; each instance is checked
    against the oracle in the test suites."""
    x, y, z, w, c = _mv("x"), _mv("y"), _mv("z"), _mv("w"), _mv("c")
    b1, b2, b3 = _mv("b1"), _mv("b2"), _mv("b3")
    p, q, s, t, u, v = (_mv(n) for n in "pqstuv")
    m_conn = (M, tensor(Star(x), Star(b1), b2),
              tensor_type(TDual(A), TDual(B), B))
    mbar_conn = (MBAR, tensor(y, b1, Star(b3)),
                 tensor_type(A, B, TDual(B)))
    copy_conn = (Spider(GREEN, 1, 2), tensor(Star(c), x, z),
                 tensor_type(TDual(A), A, A))
    counit = (Spider(GREEN, 1, 0), Star(c), TDual(A))
    return (
        NamedRule("controlled-unitary-1",
                  (m_conn, mbar_conn, copy_conn,
                   (Spider(GREEN, 2, 0), Tensor(Star(z), Star(y)),
                    tensor_type(TDual(A), TDual(A)))),
                  (counit, (b3, b2, B)),
                  bidirectional=False),
        NamedRule("controlled-unitary-2",
                  (m_conn, mbar_conn, copy_conn,
                   (Spider(RED, 1, 1, PI), Tensor(Star(z), w),
                    TTensor(TDual(A), A)),
                   (Spider(GREEN, 2, 0), Tensor(Star(w), Star(y)),
                    tensor_type(TDual(A), TDual(A)))),
                  (counit,
                   (HADAMARD, Tensor(Star(b3), b2), TTensor(TDual(B), B))),
                  bidirectional=False),
        NamedRule("fusion-cup",
                  ((Spider(GREEN, 2, 1), tensor(Star(p), Star(q), w),
                    tensor_type(TDual(B), TDual(B), B)),
                   (Spider(GREEN, 2, 1), tensor(q, p, Star(s)),
                    tensor_type(B, B, TDual(B))),
                   (Spider(GREEN, 2, 0), Tensor(s, t), tensor_type(B, B))),
                  ((w, t, B),),
                  bidirectional=False),
        NamedRule("unbiased-fusion",
                  ((HADAMARD, Tensor(Star(u), p), TTensor(TDual(B), B)),
                   (HADAMARD, Tensor(Star(v), q), TTensor(TDual(B), B)),
                   (Spider(GREEN, 2, 1), tensor(Star(p), Star(q), w),
                    tensor_type(TDual(B), TDual(B), B)),
                   (Spider(GREEN, 2, 1), tensor(u, v, Star(s)),
                    tensor_type(B, B, TDual(B))),
                   (Spider(GREEN, 2, 0), Tensor(s, t), tensor_type(B, B))),
                  ((Spider(GREEN, 0, 1), w, B),
                   (Spider(GREEN, 0, 1), t, B)),
                  bidirectional=False),
        NamedRule("pi-copy",
                  ((Spider(RED, 1, 1, PI), Tensor(Star(x), y),
                    TTensor(TDual(A), A)),
                   (Spider(GREEN, 1, 2), tensor(Star(y), u, v),
                    tensor_type(TDual(A), A, A))),
                  ((Spider(GREEN, 1, 2), tensor(Star(x), p, q),
                    tensor_type(TDual(A), A, A)),
                   (Spider(RED, 1, 1, PI), Tensor(Star(p), u),
                    TTensor(TDual(A), A)),
                   (Spider(RED, 1, 1, PI), Tensor(Star(q), v),
                    TTensor(TDual(A), A)))),
    ) + CONTROLLED_RULES


def protocol_rules() -> dict:
    return rules_by_name(extra=derived_rules())


@dataclass
class ProtocolCase:
    name: str
    script: Script
    rules: dict
    expected: Judgement
    flags: tuple = ()
    interpretation: Interpretation = field(default_factory=Interpretation)


def run_protocol(case: ProtocolCase) -> ScriptTrace:
    return run_script(case.script, case.rules, case.flags)


class _Recorder:
    """Applies steps while recording them, resolving pattern-rule sites to
    the concrete soup indices the match consumes."""

    def __init__(self, start: Judgement, rules: dict, flags=()):
        self.j = start
        self.rules = rules
        self.flags = flags
        self.steps = []

    def find(self, fragment: str) -> int:
        hits = [i for i, c in enumerate(self.j.soup) if fragment in str(c)]
        if len(hits) != 1:
            raise LookupError(f"{fragment!r} matches soup indices {hits}")
        return hits[0]

    def apply(self, name, site=None, direction="forward", where=None):
        rule = self.rules[name]
        if site is None and rule.transform is None:
            lhs = rule.lhs if direction == "forward" else rule.rhs
            site, _, _ = match_soup(lhs, self.j.soup, None, where)
            site = tuple(sorted(site))
        self.j = apply_rule(self.j, rule, site, direction, self.flags, where)
        step = (name, site, direction) + ((where,) if where else ())
        self.steps.append(step)

    def normalize(self):
        self.j, _ = normalize(self.j)
        self.steps.append(("normalize", None, "forward"))

    def script(self, name: str, start: Judgement) -> Script:
        return Script(name, start, self.steps)


# ---------------------------------------------------------------------------
# Teleportation
# ---------------------------------------------------------------------------


def teleportation_start(alpha: Phase = PI, beta: Phase = PI) -> Judgement:
    """One qubit teleported through a shared pair, with the two measurement
    outcomes fixed to the branch (alpha, beta) and the matching
    corrections applied at the end."""
    v = Var
    soup = [
        connect(Spider(GREEN, 1, 0, alpha), Star(v("x4")), TDual(A)),
        connect(Spider(GREEN, 1, 2),
                tensor(Star(v("a1")), v("x4"), v("a5")),
                tensor_type(TDual(A), A, A)),
        connect(Spider(GREEN, 1, 0, beta), Star(v("a8")), TDual(A)),
        connect(HADAMARD, Tensor(Star(v("a7")), v("a8")),
                TTensor(TDual(A), A)),
        connect(Spider(RED, 2, 1),
                tensor(Star(v("a5")), Star(v("a6")), v("a7")),
                tensor_type(TDual(A), TDual(A), A)),
        connect(Spider(GREEN, 2, 0), Tensor(v("a2"), v("a6")),
                tensor_type(A, A)),
        connect(Tensor(Star(v("x")), v("x")), Tensor(Star(v("a2")), v("a3")),
                TTensor(TDual(A), A)),
        connect(Spider(RED, 1, 1, beta), Tensor(Star(v("a3")), v("a9")),
                TTensor(TDual(A), A)),
        connect(Spider(GREEN, 1, 1, alpha), Tensor(Star(v("a9")), v("a10")),
                TTensor(TDual(A), A)),
    ]
    return judgement([ContextEntry(v("a1"), A)], soup,
                     ContextEntry(v("a10"), A))


def teleportation_expected() -> Judgement:
    return judgement([ContextEntry(Var("a1"), A)],
                     [connect(Var("a1"), Var("a10"), A)],
                     ContextEntry(Var("a10"), A))


def teleportation_case(alpha: Phase = PI, beta: Phase = PI) -> ProtocolCase:
    rules = rules_by_name()
    start = teleportation_start(alpha, beta)
    r = _Recorder(start, rules)
    r.apply("spider-fusion", site=(r.find(": x4*"), r.find("G{1,2} : a1*")))
    r.apply("color-change", site=(r.find("H : a7*"), r.find(": a8*")))
    r.apply("spider-fusion", site=(r.find("R{2,1}"), r.find(": a7*")))
    r.apply("cap-bend", site=(r.find("G{2,0}"),))
    r.normalize()
    r.apply("spider-rebalance", site=(r.find("R{2,0}"),))
    r.apply("spider-fusion",
            site=(r.find(": a5* (x) a2"), r.find(": a2* (x) a9")))
    r.apply("spider-identity-red", site=(r.find("R{1,1} : a5*"),))
    r.normalize()
    r.apply("spider-fusion",
            site=(r.find(": a1* (x) a5"), r.find(": a5* (x) a10")))
    r.apply("spider-identity", site=(r.find("G{1,1} : a1*"),))
    r.normalize()
    return ProtocolCase("teleportation", r.script("teleportation", start),
                        rules, teleportation_expected())


# ---------------------------------------------------------------------------
# Two-qubit Fourier transform
# ---------------------------------------------------------------------------


def qft2_start() -> Judgement:
    """The two-qubit Fourier circuit (Hadamard, controlled phase, Hadamard)
    applied to the basis pair encoded by R[pi] and R states."""
    v = Var
    soup = [
        connect(HADAMARD, Tensor(Star(v("a5")), v("a10")),
                TTensor(TDual(A), A)),
        connect(Spider(GREEN, 1, 1, Phase.of(1, 4)),
                Tensor(Star(v("a8")), v("a9")), TTensor(TDual(A), A)),
        connect(Spider(RED, 2, 1),
                tensor(Star(v("a6")), Star(v("a7")), v("a8")),
                tensor_type(TDual(A), TDual(A), A)),
        connect(Spider(GREEN, 2, 2),
                tensor(negate_term(_RPI), Star(v("a3")), v("a5"), v("a6")),
                tensor_type(TDual(A), TDual(A), A, A)),
        connect(Spider(GREEN, 1, 1, Phase.of(-1, 4)),
                Tensor(Star(v("a4")), v("a7")), TTensor(TDual(A), A)),
        connect(Spider(RED, 1, 2),
                tensor(Star(v("a2")), v("a3"), v("a4")),
                tensor_type(TDual(A), A, A)),
        connect(HADAMARD, Tensor(negate_term(_R0), v("a2")),
                TTensor(TDual(A), A)),
    ]
    return judgement([], soup, ContextEntry(Tensor(Var("a10"), Var("a9")),
                                            TTensor(A, A)))


def qft2_expected() -> Judgement:
    return judgement(
        [],
        [connect(Spider(GREEN, 0, 1, PI), Var("a10"), A),
         connect(Spider(GREEN, 0, 1, Phase.of(1, 2)), Var("a9"), A)],
        ContextEntry(Tensor(Var("a10"), Var("a9")), TTensor(A, A)))


QFT2_FLAGS = (ConstantFlags(_RPI, classical_for=frozenset({GREEN})),)


def qft2_case() -> ProtocolCase:
    rules = rules_by_name()
    start = qft2_start()
    r = _Recorder(start, rules, QFT2_FLAGS)
    r.apply("copy-through", site=(r.find("G{2,2}"),))
    r.apply("phase-lift", site=(r.find("R{1,2}"),), direction="backward")
    r.apply("phase-lift", site=(r.find("R{2,1}"),), direction="backward")
    r.apply("pi-commutation",
            site=(r.find(": a4* (x) a7"), r.find(": a7* (x) a8")))
    r.apply("spider-fusion",
            site=(r.find(": a7* (x) a8"), r.find(": a8* (x) a9")))
    r.apply("spider-fusion",
            site=(r.find(": a2* (x) a4"), r.find(": a4* (x) a7")))
    r.apply("spider-identity-red", site=(r.find("R{1,1} : a2*"),))
    r.normalize()
    r.apply("color-change", site=(r.find("H : R{1,0} (x) a2"),))
    r.apply("color-change", site=(r.find("H : R{1,0}[1pi]"),))
    r.apply("spider-fusion",
            site=(r.find("G{0,1} : a2"), r.find(": a2* (x) a9")))
    return ProtocolCase("qft2", r.script("qft2", start), rules,
                        qft2_expected(), flags=QFT2_FLAGS)


# ---------------------------------------------------------------------------
# Key distribution
# ---------------------------------------------------------------------------


def qkd_shared_judgement() -> Judgement:
    """Two rounds of encode-then-decode through the controlled unitary and
    its conjugate, before the basis choices are wired in: the basis inputs
    a1 and a4 stay in the context."""
    v = Var
    soup = [
        connect(Spider(GREEN, 2, 0), Tensor(v("b8"), v("b9")),
                tensor_type(B, B)),
        connect(Spider(GREEN, 2, 1),
                tensor(Star(v("b2")), Star(v("b4")), v("b5")),
                tensor_type(TDual(B), TDual(B), B)),
        connect(Spider(GREEN, 2, 1),
                tensor(v("b6"), v("b7"), Star(v("b8"))),
                tensor_type(B, B, TDual(B))),
        connect(MBAR, tensor(v("a6"), v("b3"), Star(v("b6"))),
                tensor_type(A, B, TDual(B))),
        connect(MBAR, tensor(v("a7"), v("b1"), Star(v("b7"))),
                tensor_type(A, B, TDual(B))),
        connect(M, tensor(Star(v("a2")), Star(v("b1")), v("b2")),
                tensor_type(TDual(A), TDual(B), B)),
        connect(M, tensor(Star(v("a3")), Star(v("b3")), v("b4")),
                tensor_type(TDual(A), TDual(B), B)),
        connect(Spider(GREEN, 1, 2), tensor(Star(v("a1")), v("a2"), v("a3")),
                tensor_type(TDual(A), A, A)),
        connect(Spider(GREEN, 1, 2),
                tensor(v("a5"), Star(v("a6")), Star(v("a7"))),
                tensor_type(A, TDual(A), TDual(A))),
        connect(Spider(GREEN, 2, 0), Tensor(Star(v("a4")), Star(v("a5"))),
                tensor_type(TDual(A), TDual(A))),
    ]
    return judgement([ContextEntry(v("a1"), A), ContextEntry(v("a4"), A)],
                     soup,
                     ContextEntry(Tensor(v("b5"), v("b9")), TTensor(B, B)),
                     _DECLS)


def qkd_lemma_start(mismatch: bool = False) -> Judgement:
    """One encode-decode round with the basis bit copied to both sides; the
    mismatched variant flips the decoder's control."""
    v = Var
    soup = [
        connect(M, tensor(Star(v("a2")), Star(v("b1")), v("b2")),
                tensor_type(TDual(A), TDual(B), B)),
        connect(MBAR, tensor(v("a4"), v("b1"), Star(v("b3"))),
                tensor_type(A, B, TDual(B))),
        connect(Spider(GREEN, 1, 2), tensor(Star(v("a0")), v("a2"), v("a3")),
                tensor_type(TDual(A), A, A)),
    ]
    if mismatch:
        soup.append(connect(Spider(RED, 1, 1, PI),
                            Tensor(Star(v("a3")), v("a5")),
                            TTensor(TDual(A), A)))
        soup.append(connect(Spider(GREEN, 2, 0),
                            Tensor(Star(v("a5")), Star(v("a4"))),
                            tensor_type(TDual(A), TDual(A))))
    else:
        soup.append(connect(Spider(GREEN, 2, 0),
                            Tensor(Star(v("a3")), Star(v("a4"))),
                            tensor_type(TDual(A), TDual(A))))
    return judgement([ContextEntry(v("a0"), A)], soup,
                     ContextEntry(Tensor(Star(v("b3")), v("b2")),
                                  TTensor(TDual(B), B)),
                     _DECLS)


def qkd_lemma_expected(mismatch: bool = False) -> Judgement:
    v = Var
    soup = [connect(Spider(GREEN, 1, 0), Star(v("a0")), TDual(A))]
    if mismatch:
        soup.append(connect(HADAMARD, Tensor(Star(v("b3")), v("b2")),
                            TTensor(TDual(B), B)))
    else:
        soup.append(connect(v("b3"), v("b2"), B))
    return judgement([ContextEntry(v("a0"), A)], soup,
                     ContextEntry(Tensor(Star(v("b3")), v("b2")),
                                  TTensor(TDual(B), B)),
                     _DECLS)


def qkd_lemma_case(mismatch: bool = False) -> ProtocolCase:
    rules = protocol_rules()
    start = qkd_lemma_start(mismatch)
    r = _Recorder(start, rules)
    r.apply("controlled-unitary-2" if mismatch else "controlled-unitary-1")
    name = "qkd-lemma-2" if mismatch else "qkd-lemma-1"
    return ProtocolCase(name, r.script(name, start), rules,
                        qkd_lemma_expected(mismatch),
                        interpretation=qkd_interpretation())


def qkd_start(mismatch: bool = False) -> Judgement:
    """The shared two-round judgement with one basis bit copied to both
    encoder and decoder; the mismatched variant flips the decoder copy."""
    v = Var
    soup = [connect(Spider(GREEN, 1, 2),
                    tensor(Star(v("a0")), v("a1"),
                           v("x") if mismatch else v("a4")),
                    tensor_type(TDual(A), A, A))]
    if mismatch:
        soup.append(connect(Spider(RED, 1, 1, PI),
                            Tensor(Star(v("x")), v("a4")),
                            TTensor(TDual(A), A)))
    hardwire = judgement(
        [ContextEntry(v("a0"), A)], soup,
        ContextEntry(Tensor(v("a1"), v("a4")), TTensor(A, A)))
    packed = rule_tensor_left(qkd_shared_judgement(), 0, "pack")
    return rule_cut(hardwire, packed)


def qkd_expected(mismatch: bool = False) -> Judgement:
    v = Var
    point = Spider(GREEN, 0, 1)
    concl = (Tensor(point, point) if mismatch
             else Tensor(v("b"), v("b")))
    return judgement(
        [ContextEntry(v("a0"), A)],
        [connect(Spider(GREEN, 1, 0), Star(v("a0")), TDual(A))],
        ContextEntry(concl, TTensor(B, B)), _DECLS)


def qkd_case(mismatch: bool = False) -> ProtocolCase:
    rules = protocol_rules()
    start = qkd_start(mismatch)
    r = _Recorder(start, rules)
    r.normalize()
    r.apply("dualiser-copy")
    if mismatch:
        r.apply("pi-copy")
    r.apply("spider-fusion",
            site=(r.find("G{1,2} : a0*"), r.find("G{1,2} : a1*")))
    r.apply("spider-fusion",
            site=(r.find("G{1,3}"),
                  r.find("G{1,2} : x*" if mismatch else "G{1,2} : a4*")))
    v = Var
    pins = ({"a": v("a2"), "b": v("q_1"), "c": v("a3"), "d": v("p_1")}
            if mismatch else
            {"a": v("a2"), "b": v("q"), "c": v("a3"), "d": v("p")})
    r.apply("copy-regroup", where=pins)
    lemma = "controlled-unitary-2" if mismatch else "controlled-unitary-1"
    r.apply(lemma)
    r.apply(lemma)
    r.apply("spider-fusion",
            site=(r.find("G{1,2} : a0*"), r.find("G{1,0} : m*")))
    r.apply("spider-fusion",
            site=(r.find("G{1,1} : a0*"), r.find("G{1,0} : n*")))
    r.normalize()
    r.apply("unbiased-fusion" if mismatch else "fusion-cup")
    r.normalize()
    name = "qkd-mismatched" if mismatch else "qkd-matched"
    return ProtocolCase(name, r.script(name, start), rules,
                        qkd_expected(mismatch),
                        interpretation=qkd_interpretation())


# ---------------------------------------------------------------------------
# Dualiser scripts
# ---------------------------------------------------------------------------


def dualiser_script() -> Script:
    """The dualiser cut against its dagger flip, reduced to a bare wire."""
    from .classical import _dualiser_start

    steps = [
        ("dualiser-definition", None, "forward"),
        ("dualiser-definition", None, "forward"),
        ("frobenius-right", None, "forward",
         {"a": Var("x1"), "c": Var("x2")}),
        ("comonoid-identity-left", None, "forward"),
        ("comonoid-identity-left", None, "forward"),
        ("normalize", None, "forward"),
    ]
    return Script("dualiser-unitarity", _dualiser_start(), steps)


def dualiser_expected() -> Judgement:
    return judgement([ContextEntry(Var("x1"), A)],
                     [connect(Var("x1"), Var("x3"), A)],
                     ContextEntry(Var("x3"), A))


def cup_script() -> Script:
    """Cut the copied cap against the dualiser to derive the cup."""
    v = Var
    start = judgement(
        [],
        [connect(Spider(GREEN, 1, 2),
                 tensor(Spider(GREEN, 1, 0), v("x2"), v("x3")),
                 tensor_type(TDual(A), A, A)),
         connect(Spider(GREEN, 2, 1),
                 Tensor(negate_term(Tensor(v("x1"), v("x2"))),
                        Spider(GREEN, 0, 1)),
                 TTensor(negate_type(tensor_type(A, A)), A))],
        ContextEntry(Tensor(Star(v("x1")), v("x3")), TTensor(TDual(A), A)))
    steps = [
        ("frobenius-right", None, "forward"),
        ("comonoid-identity-left", None, "forward"),
        ("comonoid-identity-left", None, "forward"),
        ("normalize", None, "forward"),
    ]
    return Script("cup", start, steps)


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------


_BUILDERS = {
    "teleportation": teleportation_case,
    "qft2": qft2_case,
    "qkd-matched": lambda: qkd_case(False),
    "qkd-mismatched": lambda: qkd_case(True),
}


def case_names() -> list:
    return sorted(_BUILDERS)


def protocol_case(name: str) -> ProtocolCase:
    if name not in _BUILDERS:
        raise KeyError(f"unknown protocol {name!r}; "
                       f"choose from {', '.join(case_names())}")
    return _BUILDERS[name]()
