"""A rewriting engine, proof checker, and matrix-semantics oracle for a
linear lambda calculus with explicit relational substitutions ("soups"),
spider-style classical structures, and complementary observables."""

from .terms import (
    GREEN, RED, HADAMARD, ONE, PI, UNIT, ZERO_PHASE,
    Declared, Dimension, Hadamard, Phase, ScalarOne, Spider, Star, TAtom,
    TDual, TTensor, TUnit, Tensor, Term, TypeExpr, Var,
    arrow_type, combinator, combinator_type, combinator_with_soup,
    is_constant_free, lambda_abs, negate_term, negate_type, tensor,
    tensor_type, var_occurrences,
)
from .sequent import (
    ContextEntry, Judgement, SoupConnection,
    alpha_equiv, apply_term, arrow, closed, compose, connect, dagger_flip,
    judgement, rule_curry, rule_cut, rule_exchange, rule_id, rule_negation,
    rule_tensor_left, rule_tensor_right, rule_uncurry, rule_unit,
    validate_linearity,
)
from .rewrite import (
    SoupStep, Trace, expand_scalar_product, normalize, normalize_random,
    soup_equiv, step, step_ceiling,
)
from .classical import (
    ConstantFlags, MetaVar, NamedRule, NoMatch, Script, ScriptTrace,
    apply_rule, declare_defined_constant, rule_instance, rule_library,
    rules_by_name, run_script,
)
from .oracle import (
    Interpretation, equal_up_to_scalar, interpret, scalar_ratio,
)
from .protocols import ProtocolCase, case_names, protocol_case, run_protocol
from .surface import (
    SurfaceError, parse, parse_file, parse_judgement, parse_script,
    print_judgement, print_script,
)
