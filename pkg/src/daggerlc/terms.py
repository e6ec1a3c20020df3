"""Core syntax: types with an involutive duality, terms with star and tensor,
and exact rational phases.

Duality is kept in a normal form at all times: on types the dual operator only
ever wraps an atomic type, and on terms the star only ever wraps a variable or
a declared constant.  All other cases are pushed inward eagerly by the smart
constructors `negate_type` and `negate_term`, so structural equality of the
dataclasses coincides with equality up to the De Morgan laws.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction


# ---------------------------------------------------------------------------
# Types
# ---------------------------------------------------------------------------


class TypeExpr:
    """Base class for type expressions."""

    __slots__ = ()


@dataclass(frozen=True)
class TAtom(TypeExpr):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TUnit(TypeExpr):
    """The monoidal unit type, written I.  Self-dual."""

    def __str__(self) -> str:
        return "I"


UNIT = TUnit()


@dataclass(frozen=True)
class TDual(TypeExpr):
    """Dual of an atomic type.  Invariant: `inner` is always a TAtom."""

    inner: TypeExpr

    def __str__(self) -> str:
        return f"{self.inner}*"


@dataclass(frozen=True)
class TTensor(TypeExpr):
    left: TypeExpr
    right: TypeExpr

    def __str__(self) -> str:
        # tensor is left-associative in the concrete syntax
        right = str(self.right)
        if isinstance(self.right, TTensor):
            right = f"({right})"
        return f"{self.left} (x) {right}"


def negate_type(t: TypeExpr) -> TypeExpr:
    """Canonical negation-normal dual of a type: involutive, fixes I, and
    distributes over tensor with a swap."""
    if isinstance(t, TAtom):
        return TDual(t)
    if isinstance(t, TUnit):
        return t
    if isinstance(t, TDual):
        return t.inner
    if isinstance(t, TTensor):
        return TTensor(negate_type(t.right), negate_type(t.left))
    raise TypeError(f"not a type: {t!r}")


def tensor_type(*parts: TypeExpr) -> TypeExpr:
    """Left-associated tensor of one or more types."""
    out = parts[0]
    for p in parts[1:]:
        out = TTensor(out, p)
    return out


def type_dimension(t: TypeExpr, atom_dim: int = 2) -> int:
    if isinstance(t, (TAtom, TDual)):
        return atom_dim
    if isinstance(t, TUnit):
        return 1
    if isinstance(t, TTensor):
        return type_dimension(t.left, atom_dim) * type_dimension(t.right, atom_dim)
    raise TypeError(f"not a type: {t!r}")


# ---------------------------------------------------------------------------
# Phases
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Phase:
    """An exact rational multiple of pi, reduced modulo 2*pi into [0, 2)."""

    frac: Fraction

    @staticmethod
    def of(numerator: int, denominator: int = 1) -> "Phase":
        return Phase(Fraction(numerator, denominator) % 2)

    def __post_init__(self) -> None:
        object.__setattr__(self, "frac", Fraction(self.frac) % 2)

    def __add__(self, other: "Phase") -> "Phase":
        return Phase(self.frac + other.frac)

    def __neg__(self) -> "Phase":
        return Phase(-self.frac)

    def is_zero(self) -> bool:
        return self.frac == 0

    def radians(self) -> float:
        import math

        return float(self.frac) * math.pi

    def __str__(self) -> str:
        if self.frac == 0:
            return "0"
        if self.frac.denominator == 1:
            return f"{self.frac.numerator}pi"
        return f"{self.frac.numerator}/{self.frac.denominator}pi"


ZERO_PHASE = Phase(Fraction(0))
PI = Phase(Fraction(1))

GREEN = "G"
RED = "R"


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------


class Term:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Term):
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Star(Term):
    """Linear negation marker.  Invariant: `inner` is a Var or a Declared
    constant — every other case is normalized away by `negate_term`."""

    inner: Term

    def __str__(self) -> str:
        return f"{self.inner}*"


@dataclass(frozen=True)
class Tensor(Term):
    left: Term
    right: Term

    def __str__(self) -> str:
        right = str(self.right)
        if isinstance(self.right, Tensor):
            right = f"({right})"
        return f"{self.left} (x) {right}"


@dataclass(frozen=True)
class ScalarOne(Term):
    """The scalar constant 1 : I, its own dual."""

    def __str__(self) -> str:
        return "1"


ONE = ScalarOne()


@dataclass(frozen=True)
class Dimension(Term):
    """The dimension scalar of a type (D_A : I).  With sqrt=True this is the
    distinguished square-root scalar satisfying rD * rD = D."""

    of_type: TypeExpr
    sqrt: bool = False

    def __str__(self) -> str:
        head = "rD" if self.sqrt else "D"
        return f"{head}{{{self.of_type}}}"


@dataclass(frozen=True)
class Spider(Term):
    """An n-input, m-output classical-structure generator, optionally phased.

    color "G" is the computational-basis structure, "R" its complement.
    Spider(c, 1, 1, 0) is the identity map; Spider(c, 1, 2, 0) copies;
    Spider(c, 1, 0, 0) deletes.  Negation transposes and conjugates:
    Spider(c, n, m, p)* == Spider(c, m, n, -p).
    """

    color: str
    n_in: int
    n_out: int
    phase: Phase = ZERO_PHASE

    def __str__(self) -> str:
        base = f"{self.color}{{{self.n_in},{self.n_out}}}"
        if not self.phase.is_zero():
            base += f"[{self.phase}]"
        return base


@dataclass(frozen=True)
class Hadamard(Term):
    """The color-changing constant H, self-dual and involutive under Cut."""

    def __str__(self) -> str:
        return "H"


HADAMARD = Hadamard()


@dataclass(frozen=True)
class Declared(Term):
    """A constant introduced by declaration, e.g. the controlled unitary of
    the key-distribution scripts.  Written #name."""

    name: str
    type: TypeExpr

    def __str__(self) -> str:
        return f"#{self.name}"


def negate_term(t: Term) -> Term:
    """Canonical star-normal form of Star(t): involutive, swaps tensor
    factors, fixes the self-dual constants, transposes spiders."""
    if isinstance(t, (Var, Declared)):
        return Star(t)
    if isinstance(t, Star):
        return t.inner
    if isinstance(t, Tensor):
        return Tensor(negate_term(t.right), negate_term(t.left))
    if isinstance(t, (ScalarOne, Dimension, Hadamard)):
        return t
    if isinstance(t, Spider):
        return Spider(t.color, t.n_out, t.n_in, -t.phase)
    raise TypeError(f"not a term: {t!r}")


def tensor(*parts: Term) -> Term:
    out = parts[0]
    for p in parts[1:]:
        out = Tensor(out, p)
    return out


def var_occurrences(t: Term) -> Counter:
    """Multiset of variable names occurring in t (constants contribute none)."""
    acc: Counter = Counter()

    def walk(u: Term) -> None:
        if isinstance(u, Var):
            acc[u.name] += 1
        elif isinstance(u, Star):
            walk(u.inner)
        elif isinstance(u, Tensor):
            walk(u.left)
            walk(u.right)

    walk(t)
    return acc


def is_constant_free(t: Term) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, Star):
        return is_constant_free(t.inner)
    if isinstance(t, Tensor):
        return is_constant_free(t.left) and is_constant_free(t.right)
    return False


def substitute(t: Term, name: str, replacement: Term) -> Term:
    """Replace every occurrence of the variable `name` (plain or starred)
    by `replacement` (negated where the occurrence is starred)."""
    if isinstance(t, Var):
        return replacement if t.name == name else t
    if isinstance(t, Star):
        inner = substitute(t.inner, name, replacement)
        if inner is t.inner:
            return t
        return negate_term(inner)
    if isinstance(t, Tensor):
        left = substitute(t.left, name, replacement)
        right = substitute(t.right, name, replacement)
        if left is t.left and right is t.right:
            return t
        return Tensor(left, right)
    return t


def rename_vars(t: Term, mapping: dict) -> Term:
    """Simultaneously rename variables (name -> name)."""
    if isinstance(t, Var):
        new = mapping.get(t.name)
        return Var(new) if new is not None else t
    if isinstance(t, Star):
        return Star(rename_vars(t.inner, mapping))
    if isinstance(t, Tensor):
        return Tensor(rename_vars(t.left, mapping), rename_vars(t.right, mapping))
    return t


def tensor_factors(t: Term) -> list:
    """Flatten nested tensors into a factor list (associativity-blind view,
    used by strict-monoidal pattern matching)."""
    if isinstance(t, Tensor):
        return tensor_factors(t.left) + tensor_factors(t.right)
    return [t]


# ---------------------------------------------------------------------------
# Lambda shorthand and combinators
# ---------------------------------------------------------------------------


def lambda_abs(pattern: Term, body: Term) -> Term:
    """The abbreviation lam p. b  :=  p* (x) b."""
    return Tensor(negate_term(pattern), body)


def arrow_type(dom: TypeExpr, cod: TypeExpr) -> TypeExpr:
    """A -o B  :=  A* (x) B."""
    return TTensor(negate_type(dom), cod)


_COMBINATOR_ARITY = {
    "id": 1, "bbar": 3, "sbar": 2, "tbar": 4,
    "alpha": 3, "alpha_inv": 3, "lambda": 1, "lambda_inv": 1,
    "rho": 1, "rho_inv": 1, "sigma": 2, "sigma_inv": 2,
    "eta": 1, "epsilon": 1,
}


def combinator_with_soup(name: str, types: list, prefix: str = "") -> tuple:
    """Build a combinator closed term.

    Returns (term, type, soup) where soup is a list of (left, right, type)
    triples: empty for the pure lambda combinators, and carrying the
    application connections for bbar/tbar.  Variable names are prefixed so
    callers can keep separately built terms disjoint.
    """
    if name not in _COMBINATOR_ARITY:
        raise ValueError(f"unknown combinator {name!r}")
    if len(types) != _COMBINATOR_ARITY[name]:
        raise ValueError(
            f"combinator {name!r} expects {_COMBINATOR_ARITY[name]} type(s), "
            f"got {len(types)}")

    def v(n: str) -> Var:
        return Var(prefix + n)

    a, b, c, d = (v(n) for n in "abcd")
    x = v("x")

    if name == "id":
        (A,) = types
        return lambda_abs(a, a), arrow_type(A, A), []
    if name in ("sigma", "sbar"):
        A, B = types
        return (lambda_abs(Tensor(a, b), Tensor(b, a)),
                arrow_type(TTensor(A, B), TTensor(B, A)), [])
    if name == "sigma_inv":
        B, A = types
        return (lambda_abs(Tensor(b, a), Tensor(a, b)),
                arrow_type(TTensor(B, A), TTensor(A, B)), [])
    if name == "alpha":
        A, B, C = types
        return (lambda_abs(Tensor(a, Tensor(b, c)), Tensor(Tensor(a, b), c)),
                arrow_type(TTensor(A, TTensor(B, C)), TTensor(TTensor(A, B), C)),
                [])
    if name == "alpha_inv":
        A, B, C = types
        return (lambda_abs(Tensor(Tensor(a, b), c), Tensor(a, Tensor(b, c))),
                arrow_type(TTensor(TTensor(A, B), C), TTensor(A, TTensor(B, C))),
                [])
    if name == "lambda":
        (A,) = types
        return (lambda_abs(Tensor(ONE, a), a),
                arrow_type(TTensor(UNIT, A), A), [])
    if name == "lambda_inv":
        (A,) = types
        return (lambda_abs(a, Tensor(ONE, a)),
                arrow_type(A, TTensor(UNIT, A)), [])
    if name == "rho":
        (A,) = types
        return (lambda_abs(Tensor(a, ONE), a),
                arrow_type(TTensor(A, UNIT), A), [])
    if name == "rho_inv":
        (A,) = types
        return (lambda_abs(a, Tensor(a, ONE)),
                arrow_type(A, TTensor(A, UNIT)), [])
    if name == "eta":
        (A,) = types
        return (lambda_abs(ONE, Tensor(Star(x), x)),
                arrow_type(UNIT, TTensor(negate_type(A), A)), [])
    if name == "epsilon":
        (A,) = types
        return (lambda_abs(Tensor(x, Star(x)), ONE),
                arrow_type(TTensor(A, negate_type(A)), UNIT), [])
    if name == "bbar":
        # lam g. lam f. lam a. g (f a)
        A, B, C = types
        f, g = v("f"), v("g")
        x1, x2 = v("x1"), v("x2")
        term = lambda_abs(g, lambda_abs(f, lambda_abs(a, x2)))
        soup = [(f, Tensor(Star(a), x1), arrow_type(A, B)),
                (g, Tensor(Star(x1), x2), arrow_type(B, C))]
        ty = arrow_type(arrow_type(B, C),
                        arrow_type(arrow_type(A, B), arrow_type(A, C)))
        return term, ty, soup
    if name == "tbar":
        # lam f. lam g. lam (x1 (x) x2). (f x1 (x) g x2)
        A, B, C, D = types
        f, g = v("f"), v("g")
        x1, x2, y1, y2 = v("x1"), v("x2"), v("y1"), v("y2")
        term = lambda_abs(
            f, lambda_abs(g, lambda_abs(Tensor(x1, x2), Tensor(y1, y2))))
        soup = [(f, Tensor(Star(x1), y1), arrow_type(A, B)),
                (g, Tensor(Star(x2), y2), arrow_type(C, D))]
        ty = arrow_type(arrow_type(A, B),
                        arrow_type(arrow_type(C, D),
                                   arrow_type(TTensor(A, C), TTensor(B, D))))
        return term, ty, soup
    raise AssertionError(name)


def combinator(name: str, types: list, prefix: str = "") -> Term:
    """The closed term for a combinator (see combinator_with_soup for the
    application connections of bbar/tbar)."""
    return combinator_with_soup(name, types, prefix)[0]


def combinator_type(name: str, types: list) -> TypeExpr:
    return combinator_with_soup(name, types)[1]
