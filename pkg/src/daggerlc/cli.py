"""Command-line front end.

Subcommands: parse, check, normalize, equiv, oracle, run.  Exit codes:
0 success, 1 a check failed, 2 usage or parse error.  Traces and results go
to standard output; reports and errors to standard error."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import protocols, surface
from .classical import Script, run_script
from .oracle import Interpretation, equal_up_to_scalar, interpret
from .rewrite import normalize, soup_equiv
from .sequent import Judgement, alpha_equiv


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(2)


def _build_parser() -> _Parser:
    top = _Parser(prog="daggerlc", description=__doc__)
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", help="parse a file and print it canonically")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("check", help="parse and verify well-formedness")
    p.add_argument("file")

    p = sub.add_parser("normalize", help="reduce a judgement's soup")
    p.add_argument("file")
    p.add_argument("--trace", action="store_true")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("equiv", help="test two judgements for equivalence")
    p.add_argument("file1")
    p.add_argument("file2")
    p.add_argument("--depth", type=int, default=0,
                   help="search depth over the named rule catalog")

    p = sub.add_parser("oracle", help="print a judgement's matrix value")
    p.add_argument("file")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--dim", type=int, default=2)

    p = sub.add_parser("run", help="replay a protocol case or script file")
    p.add_argument("target", help="case name or .dscript path")
    return top


def _load(path: str):
    try:
        return surface.parse_file(path)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        raise SystemExit(2)
    except surface.SurfaceError as e:
        print(f"error: {path}: {e}", file=sys.stderr)
        raise SystemExit(2)


def _need_judgement(value, path: str) -> Judgement:
    if not isinstance(value, Judgement):
        print(f"error: {path} is a script, expected a judgement",
              file=sys.stderr)
        raise SystemExit(2)
    return value


def _cmd_parse(args) -> int:
    value = _load(args.file)
    if isinstance(value, Judgement):
        if args.json:
            print(surface.to_json_text(surface.judgement_json(value)))
        else:
            print(surface.print_judgement(value))
    else:
        print(surface.print_script(value))
    return 0


def _cmd_check(args) -> int:
    value = _load(args.file)  # parsing already validates
    kind = "script" if isinstance(value, Script) else "judgement"
    print(f"ok: {kind}", file=sys.stderr)
    return 0


def _cmd_normalize(args) -> int:
    j = _need_judgement(_load(args.file), args.file)
    nf, trace = normalize(j)
    if args.json:
        print(surface.to_json_text(surface.trace_json(trace)))
        return 0
    if args.trace:
        for n, (s, jj) in enumerate(trace.steps, start=1):
            print(f"step {n}: {s.kind}")
            print(f"  {surface.print_judgement(jj).splitlines()[-1]}")
    print(surface.print_judgement(nf))
    return 0


def _cmd_equiv(args) -> int:
    from .classical import equiv_modulo_rules

    j1 = _need_judgement(_load(args.file1), args.file1)
    j2 = _need_judgement(_load(args.file2), args.file2)
    if args.depth > 0:
        ok = equiv_modulo_rules(j1, j2, depth=args.depth,
                                flags=protocols.QFT2_FLAGS)
    else:
        ok = soup_equiv(j1, j2)
    print("equivalent" if ok else "not equivalent")
    return 0 if ok else 1


def _cmd_oracle(args) -> int:
    j = _need_judgement(_load(args.file), args.file)
    interp = Interpretation(atom_dim=args.dim)
    missing = [name for name, _ in j.declarations
               if name not in interp.constants]
    if missing:
        print(f"error: no matrix for declared constant(s) "
              f"{', '.join(missing)}", file=sys.stderr)
        return 1
    m = interpret(j, interp)
    np.set_printoptions(precision=6, suppress=True)
    print(m)
    nf, _ = normalize(j)
    if equal_up_to_scalar(interpret(nf, interp), m, args.tol):
        print("normal form agrees up to scalar", file=sys.stderr)
        return 0
    print("normal form DISAGREES with start", file=sys.stderr)
    return 1


def _run_case(name: str) -> int:
    case = protocols.protocol_case(name)
    script = surface.parse_file(surface_corpus_path(f"{name}.dscript"))
    trace = run_script(script, case.rules, case.flags)
    interp = case.interpretation
    m0 = interpret(trace.initial, interp)
    oracle_ok = all(
        equal_up_to_scalar(interpret(jj, interp), m0, 1e-9)
        for _, jj in trace.steps)
    final_ok = alpha_equiv(trace.final, case.expected)
    for n, (label, jj) in enumerate(trace.steps, start=1):
        print(f"step {n}: {label}")
        print(f"  {surface.print_judgement(jj).splitlines()[-1]}")
    print(f"{name}: final {'matches' if final_ok else 'DIFFERS FROM'} "
          f"the expected judgement; oracle "
          f"{'agrees' if oracle_ok else 'DISAGREES'} at every step",
          file=sys.stderr)
    return 0 if (final_ok and oracle_ok) else 1


def surface_corpus_path(filename: str):
    from importlib import resources

    return resources.files("daggerlc") / "corpus" / filename


def _cmd_run(args) -> int:
    if args.target in protocols.case_names():
        return _run_case(args.target)
    script = _load(args.target)
    if isinstance(script, Judgement):
        print("error: expected a script or protocol name", file=sys.stderr)
        return 2
    rules = protocols.protocol_rules()
    trace = run_script(script, rules, protocols.QFT2_FLAGS)
    for n, (label, jj) in enumerate(trace.steps, start=1):
        print(f"step {n}: {label}")
    print(surface.print_judgement(trace.final))
    return 0


_COMMANDS = {
    "parse": _cmd_parse,
    "check": _cmd_check,
    "normalize": _cmd_normalize,
    "equiv": _cmd_equiv,
    "oracle": _cmd_oracle,
    "run": _cmd_run,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    except surface.SurfaceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
