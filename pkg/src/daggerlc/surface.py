"""Textual syntax for types, terms, soups, judgements, and scripts.

The grammar (ASCII, tensor written "(x)", postfix "*" binds tightest):

    type      := ATOM | "I" | type "*" | type "(x)" type
    term      := IDENT | "1" | term "*" | term "(x)" term | const
    const     := ("G"|"R") "{" NAT "," NAT "}" [ "[" phase "]" ]
               | "H" | ("D"|"rD") "{" type "}" | "#" IDENT
    phase     := ["-"] NAT "/" NAT "pi" | ["-"] NAT "pi" | "0"
    conn      := term ":" term [ ":" type ]
    judgement := [ctxitem ("," ctxitem)*] "|-" ["{" conns "}"] term ":" type

Judgement files (.dsq) hold optional `declare #name : TYPE` lines followed by
one judgement.  Script files (.dscript) hold declare lines, one
`start JUDGEMENT` line, then `apply RULE at SITE [backward] [with k=v, ...]`
lines, where SITE is `*` (first match) or a comma list of soup indices.
Connection types may be omitted on input when inferable; printing always
emits them."""

from __future__ import annotations

import json
import re
from fractions import Fraction

from .terms import (
    Declared, Dimension, GREEN, HADAMARD, Hadamard, ONE, Phase, RED,
    ScalarOne, Spider, Star, TAtom, TDual, TTensor, TUnit, Tensor, Term,
    TypeExpr, UNIT, Var, negate_term, negate_type,
)
from .sequent import (
    ContextEntry, Judgement, SoupConnection, connect, judgement,
    validate_linearity,
)
from .classical import Script


class SurfaceError(Exception):
    """Syntax, typing, or linearity error in surface text."""

    def __init__(self, message: str, line: int = None, col: int = None):
        place = f" at line {line}, column {col}" if line is not None else ""
        super().__init__(f"{message}{place}")
        self.line = line
        self.col = col


# ---------------------------------------------------------------------------
# Tokenizer
# ---------------------------------------------------------------------------

_SYMBOLS = ("(x)", "|-", "*", ":", ",", "{", "}", "[", "]", "(", ")", "#",
            "-", "/", "=")


class _Token:
    __slots__ = ("kind", "value", "line", "col")

    def __init__(self, kind, value, line, col):
        self.kind = kind
        self.value = value
        self.line = line
        self.col = col

    def __repr__(self):
        return f"{self.kind}({self.value!r})"


def _tokenize(text: str, line0: int = 1):
    out = []
    line, col = line0, 1
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        sym = next((s for s in _SYMBOLS if text.startswith(s, i)), None)
        if sym is not None:
            out.append(_Token("sym", sym, line, col))
            i += len(sym)
            col += len(sym)
            continue
        if c.isdigit():
            m = re.match(r"\d+", text[i:])
            out.append(_Token("nat", m.group(), line, col))
            i += m.end()
            col += m.end()
            continue
        if c.isalpha() or c == "_":
            m = re.match(r"[A-Za-z_][A-Za-z0-9_]*", text[i:])
            out.append(_Token("ident", m.group(), line, col))
            i += m.end()
            col += m.end()
            continue
        raise SurfaceError(f"unexpected character {c!r}", line, col)
    out.append(_Token("eof", "", line, col))
    return out


class _Parser:
    def __init__(self, tokens, declarations=None):
        self.toks = tokens
        self.pos = 0
        self.decls = dict(declarations or {})

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        t = self.toks[self.pos]
        if t.kind != "eof":
            self.pos += 1
        return t

    def at(self, kind, value=None, ahead: int = 0) -> bool:
        t = self.peek(ahead)
        return t.kind == kind and (value is None or t.value == value)

    def expect(self, kind, value=None) -> _Token:
        t = self.next()
        if t.kind != kind or (value is not None and t.value != value):
            want = value if value is not None else kind
            raise SurfaceError(f"expected {want!r}, found {t.value!r}",
                               t.line, t.col)
        return t

    def fail(self, message: str):
        t = self.peek()
        raise SurfaceError(message, t.line, t.col)

    # -- types ------------------------------------------------------------

    def type_primary(self) -> TypeExpr:
        if self.at("sym", "("):
            self.next()
            t = self.type_expr()
            self.expect("sym", ")")
        elif self.at("ident"):
            name = self.next().value
            t = UNIT if name == "I" else TAtom(name)
        else:
            self.fail("expected a type")
        while self.at("sym", "*"):
            self.next()
            t = negate_type(t)
        return t

    def type_expr(self) -> TypeExpr:
        t = self.type_primary()
        while self.at("sym", "(x)"):
            self.next()
            t = TTensor(t, self.type_primary())
        return t

    # -- terms ------------------------------------------------------------

    def _phase(self) -> Phase:
        sign = 1
        if self.at("sym", "-"):
            self.next()
            sign = -1
        num = int(self.expect("nat").value)
        den = 1
        if self.at("sym", "/"):
            self.next()
            den = int(self.expect("nat").value)
        if num == 0 and not self.at("ident", "pi"):
            return Phase.of(0)
        self.expect("ident", "pi")
        return Phase(Fraction(sign * num, den))

    def _spider(self, color: str) -> Spider:
        self.expect("sym", "{")
        n_in = int(self.expect("nat").value)
        self.expect("sym", ",")
        n_out = int(self.expect("nat").value)
        self.expect("sym", "}")
        phase = Phase.of(0)
        if self.at("sym", "["):
            self.next()
            phase = self._phase()
            self.expect("sym", "]")
        return Spider(color, n_in, n_out, phase)

    def term_primary(self) -> Term:
        if self.at("sym", "("):
            self.next()
            t = self.term_expr()
            self.expect("sym", ")")
        elif self.at("sym", "#"):
            self.next()
            tok = self.expect("ident")
            if tok.value not in self.decls:
                raise SurfaceError(f"undeclared constant #{tok.value}",
                                   tok.line, tok.col)
            t = Declared(tok.value, self.decls[tok.value])
        elif self.at("nat"):
            tok = self.next()
            if tok.value != "1":
                raise SurfaceError(f"unexpected number {tok.value!r}",
                                   tok.line, tok.col)
            t = ONE
        elif self.at("ident"):
            name = self.peek().value
            if name in (GREEN, RED) and self.at("sym", "{", 1):
                self.next()
                t = self._spider(name)
            elif name in ("D", "rD") and self.at("sym", "{", 1):
                self.next()
                self.expect("sym", "{")
                ty = self.type_expr()
                self.expect("sym", "}")
                t = Dimension(ty, sqrt=(name == "rD"))
            elif name == "H":
                self.next()
                t = HADAMARD
            else:
                t = Var(self.next().value)
        else:
            self.fail("expected a term")
        while self.at("sym", "*"):
            self.next()
            t = negate_term(t)
        return t

    def term_expr(self) -> Term:
        t = self.term_primary()
        while self.at("sym", "(x)"):
            self.next()
            t = Tensor(t, self.term_primary())
        return t

    # -- judgements -------------------------------------------------------

    def _typed_item(self):
        term = self.term_expr()
        self.expect("sym", ":")
        return ContextEntry(term, self.type_expr())

    def _conn(self):
        left = self.term_expr()
        self.expect("sym", ":")
        right = self.term_expr()
        ty = None
        if self.at("sym", ":"):
            self.next()
            ty = self.type_expr()
        return left, right, ty

    def judgement_expr(self) -> Judgement:
        context = []
        if not self.at("sym", "|-"):
            context.append(self._typed_item())
            while self.at("sym", ","):
                self.next()
                context.append(self._typed_item())
        self.expect("sym", "|-")
        raw_conns = []
        if self.at("sym", "{"):
            self.next()
            if not self.at("sym", "}"):
                raw_conns.append(self._conn())
                while self.at("sym", ","):
                    self.next()
                    raw_conns.append(self._conn())
            self.expect("sym", "}")
        conclusion = self._typed_item()
        decls = tuple(sorted(self.decls.items()))
        return _assemble(context, raw_conns, conclusion, decls)


# ---------------------------------------------------------------------------
# Connection-type inference
# ---------------------------------------------------------------------------


def _dual_depth_base(t: TypeExpr):
    if isinstance(t, TDual):
        return t.inner, 1
    return t, 0


def _bind_types(term: Term, ty: TypeExpr, env: dict, strict: bool):
    """Record variable types by walking a term and its type in lockstep.
    With strict=False, a variable already bound at the dual type is left
    alone (rewriting can leave connection types stale up to duality)."""
    if isinstance(term, Var):
        prior = env.get(term.name)
        if prior is None:
            env[term.name] = ty
        elif prior != ty:
            if strict or _dual_depth_base(prior)[0] != _dual_depth_base(ty)[0]:
                raise SurfaceError(
                    f"variable {term.name} used at types "
                    f"{prior} and {ty}")
        return
    if isinstance(term, Star):
        _bind_types(term.inner, negate_type(ty), env, strict)
        return
    if isinstance(term, Tensor):
        if not isinstance(ty, TTensor):
            raise SurfaceError(f"tensor term {term} at non-tensor type {ty}")
        _bind_types(term.left, ty.left, env, strict)
        _bind_types(term.right, ty.right, env, strict)


def _infer_type(term: Term, env: dict):
    if isinstance(term, Var):
        return env.get(term.name)
    if isinstance(term, Star):
        inner = _infer_type(term.inner, env)
        return None if inner is None else negate_type(inner)
    if isinstance(term, Tensor):
        left = _infer_type(term.left, env)
        right = _infer_type(term.right, env)
        if left is None or right is None:
            return None
        return TTensor(left, right)
    if isinstance(term, (ScalarOne, Dimension)):
        return UNIT
    if isinstance(term, Declared):
        return term.type
    return None


def _assemble(context, raw_conns, conclusion, decls) -> Judgement:
    env = {}
    for e in list(context) + [conclusion]:
        _bind_types(e.term, e.type, env, strict=True)
    pending = list(raw_conns)
    conns = []
    for left, right, ty in pending:
        if ty is not None:
            _bind_types(left, ty, env, strict=False)
            _bind_types(right, ty, env, strict=False)
    progress = True
    while pending and progress:
        progress = False
        remaining = []
        for left, right, ty in pending:
            if ty is None:
                ty = _infer_type(right, env)
            if ty is None:
                lt = _infer_type(left, env)
                ty = lt
            if ty is None:
                remaining.append((left, right, None))
                continue
            _bind_types(left, ty, env, strict=False)
            _bind_types(right, ty, env, strict=False)
            conns.append(connect(left, right, ty))
            progress = True
        pending = remaining
    if pending:
        left, right, _ = pending[0]
        raise SurfaceError(
            f"cannot infer the type of connection {left} : {right}; "
            "annotate it")
    j = judgement(context, conns, conclusion, decls)
    problems = validate_linearity(j)
    if problems:
        detail = ", ".join(f"{name} occurs {count} time(s)"
                           for name, count in problems)
        raise SurfaceError(f"linearity violation: {detail}")
    return j


# ---------------------------------------------------------------------------
# Parsing entry points
# ---------------------------------------------------------------------------


def _split_lines(text: str):
    """Yield (line number, stripped line) skipping blanks and -- comments."""
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("--", 1)[0].strip()
        if line:
            yield n, line


def _parse_declare(line: str, n: int) -> tuple:
    m = re.match(r"declare\s+#([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.+)$", line)
    if not m:
        raise SurfaceError("malformed declare line", n, 1)
    p = _Parser(_tokenize(m.group(2), n))
    ty = p.type_expr()
    p.expect("eof")
    return m.group(1), ty


def parse_judgement(text: str) -> Judgement:
    decls = {}
    body = []
    for n, line in _split_lines(text):
        if line.startswith("declare"):
            if body:
                raise SurfaceError("declare must precede the judgement", n, 1)
            name, ty = _parse_declare(line, n)
            decls[name] = ty
        else:
            body.append((n, line))
    if not body:
        raise SurfaceError("no judgement found")
    p = _Parser(_tokenize("\n".join(l for _, l in body), body[0][0]), decls)
    j = p.judgement_expr()
    p.expect("eof")
    return j


_APPLY = re.compile(
    r"apply\s+(\S+)\s+at\s+(\*|\d+(?:\s*,\s*\d+)*)"
    r"(\s+backward)?(?:\s+with\s+(.+))?$")


def _parse_where(text: str, n: int) -> dict:
    out = {}
    for piece in text.split(","):
        m = re.match(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*="
                     r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*$", piece)
        if not m:
            raise SurfaceError(f"malformed binding {piece.strip()!r}", n, 1)
        out[m.group(1)] = Var(m.group(2))
    return out


def parse_script(text: str, name: str = "script") -> Script:
    decls = {}
    start = None
    steps = []
    for n, line in _split_lines(text):
        if line.startswith("declare"):
            dname, ty = _parse_declare(line, n)
            decls[dname] = ty
        elif line.startswith("start"):
            if start is not None:
                raise SurfaceError("duplicate start line", n, 1)
            p = _Parser(_tokenize(line[len("start"):], n), decls)
            start = p.judgement_expr()
            p.expect("eof")
        elif line.startswith("apply"):
            if start is None:
                raise SurfaceError("apply before start", n, 1)
            m = _APPLY.match(line)
            if not m:
                raise SurfaceError("malformed apply line", n, 1)
            rule, site_text, backward, where_text = m.groups()
            site = (None if site_text == "*" else
                    tuple(int(s) for s in site_text.split(",")))
            direction = "backward" if backward else "forward"
            step = (rule, site, direction)
            if where_text:
                step = step + (_parse_where(where_text, n),)
            steps.append(step)
        else:
            raise SurfaceError(f"unrecognized line {line!r}", n, 1)
    if start is None:
        raise SurfaceError("script has no start line")
    return Script(name, start, steps)


def parse(text: str, name: str = "source"):
    """Parse a judgement or a script, detected by the presence of a
    `start` line."""
    if re.search(r"(?m)^\s*start\b", text):
        return parse_script(text, name)
    return parse_judgement(text)


def parse_file(path):
    with open(path) as fh:
        text = fh.read()
    name = re.sub(r"\.(dsq|dscript)$", "", str(path).rsplit("/", 1)[-1])
    if str(path).endswith(".dscript"):
        return parse_script(text, name)
    if str(path).endswith(".dsq"):
        return parse_judgement(text)
    return parse(text, name)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def print_type(t: TypeExpr) -> str:
    return str(t)


def print_term(t: Term) -> str:
    return str(t)


def _print_conn(c: SoupConnection) -> str:
    return f"{c.left} : {c.right} : {c.type}"


def _print_declares(declarations) -> list:
    return [f"declare #{name} : {ty}" for name, ty in declarations]


def print_judgement(j: Judgement) -> str:
    """Canonical rendering: declare lines first, connection types always
    written, soup in its stored (sorted) order."""
    ctx = ", ".join(str(e) for e in j.context)
    soup = ""
    if j.soup:
        soup = "{ " + ", ".join(_print_conn(c) for c in j.soup) + " } "
    lhs = f"{ctx} " if ctx else ""
    body = f"{lhs}|- {soup}{j.conclusion}"
    return "\n".join(_print_declares(j.declarations) + [body])


def _print_site(site) -> str:
    if site is None:
        return "*"
    return ",".join(str(i) for i in site)


def print_script(script: Script) -> str:
    lines = _print_declares(script.start.declarations)
    start_text = print_judgement(script.start).splitlines()[-1]
    lines.append(f"start {start_text}")
    for item in script.steps:
        rule, site, direction = item[:3]
        where = item[3] if len(item) > 3 else None
        line = f"apply {rule} at {_print_site(site)}"
        if direction == "backward":
            line += " backward"
        if where:
            pins = ", ".join(f"{k}={v}" for k, v in sorted(where.items()))
            line += f" with {pins}"
        lines.append(line)
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------


def type_json(t: TypeExpr) -> dict:
    if isinstance(t, TAtom):
        return {"k": "tatom", "name": t.name}
    if isinstance(t, TUnit):
        return {"k": "tunit"}
    if isinstance(t, TDual):
        return {"k": "tdual", "inner": type_json(t.inner)}
    if isinstance(t, TTensor):
        return {"k": "ttensor", "left": type_json(t.left),
                "right": type_json(t.right)}
    raise TypeError(f"unknown type node {t!r}")


def term_json(t: Term) -> dict:
    if isinstance(t, Var):
        return {"k": "var", "name": t.name}
    if isinstance(t, Star):
        return {"k": "star", "inner": term_json(t.inner)}
    if isinstance(t, Tensor):
        return {"k": "tensor", "left": term_json(t.left),
                "right": term_json(t.right)}
    if isinstance(t, ScalarOne):
        return {"k": "one"}
    if isinstance(t, Dimension):
        return {"k": "dimension", "type": type_json(t.of_type),
                "sqrt": t.sqrt}
    if isinstance(t, Spider):
        return {"k": "spider", "color": t.color, "in": t.n_in,
                "out": t.n_out, "phase": str(t.phase)}
    if isinstance(t, Hadamard):
        return {"k": "hadamard"}
    if isinstance(t, Declared):
        return {"k": "declared", "name": t.name, "type": type_json(t.type)}
    raise TypeError(f"unknown term node {t!r}")


def conn_json(c: SoupConnection) -> dict:
    return {"k": "conn", "left": term_json(c.left),
            "right": term_json(c.right), "type": type_json(c.type)}


def judgement_json(j: Judgement) -> dict:
    return {
        "k": "judgement",
        "context": [{"term": term_json(e.term), "type": type_json(e.type)}
                    for e in j.context],
        "soup": [conn_json(c) for c in j.soup],
        "conclusion": {"term": term_json(j.conclusion.term),
                       "type": type_json(j.conclusion.type)},
        "declarations": [{"name": n, "type": type_json(t)}
                         for n, t in j.declarations],
    }


def trace_json(trace) -> dict:
    steps = []
    before = trace.initial
    for label, after in trace.steps:
        steps.append({"ruleOrStep": label,
                      "before": judgement_json(before),
                      "after": judgement_json(after)})
        before = after
    return {"k": "trace", "steps": steps}


def to_json_text(value) -> str:
    return json.dumps(value, indent=2, sort_keys=False)
