"""Command-line interface: ``portolog expand|lint|features|translate``.

Exit status is 0 on success, 1 when lint reports findings and 2 for any
operational error (unreadable input, bad catalog, broken conditionals,
invalid rules, usage errors).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .dialects import ENV_CATALOG, DialectStore, load_profiles
from .errors import PortologError
from .lint import RuleSet, exit_status, lint_program, report
from .preprocessor import expand_program
from .rewrite import load_rules, validate_rules

log = logging.getLogger("portolog")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FINDINGS, EXIT_ERROR = 0, 1, 2
POLICY_NAMES = {"error": "error", "assume-false": "assume_false_warn"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser, targets: bool = True):
    p.add_argument("--catalog-dir", type=Path,
                   help=f"dialect profile directory (default: ${ENV_CATALOG} or the shipped one)")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    if targets:
        p.add_argument("-d", "--dialect", action="append", default=[], dest="dialects",
                       metavar="DIALECT", help="target dialect (repeatable)")
        p.add_argument("--library-root", type=Path, help="root of the library search path")
        p.add_argument("--rules", action="append", default=[], type=Path,
                       help="extra rewrite rule file (repeatable)")
        p.add_argument("--enable-rule", action="append", default=[], metavar="ID",
                       help="enable a rewrite rule that ships disabled (e.g. clp_assert)")
        p.add_argument("--unknown-policy", choices=tuple(POLICY_NAMES), default="assume-false",
                       help="what to do with undecidable :- if conditions")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="portolog",
                     description="Prolog portability toolkit: conditional compilation, "
                                 "cross-dialect rewriting and linting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("expand", help="write one expanded file per target dialect")
    _common(p)
    p.add_argument("files", nargs="+", help="Prolog source files ('-' for stdin)")
    p.add_argument("--output-dir", type=Path, help="directory for <file>.<dialect>.pl outputs")
    p.add_argument("--provenance", action="store_true",
                   help="precede rewritten clauses with a provenance comment")

    p = sub.add_parser("lint", help="report portability hazards")
    _common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--strict", action="store_true", help="treat missing predicates as errors")
    p.add_argument("--lint-config", type=Path, help="RULE_ID = on|off|error|warning|info lines")
    p.add_argument("--figure", type=Path, help="also write a bar chart of findings (PNG)")

    p = sub.add_parser("features", help="show the feature matrix or a dialect diff")
    _common(p, targets=False)
    p.add_argument("--diff", nargs=2, metavar=("A", "B"), help="only keys where A and B differ")
    p.add_argument("-d", "--dialect", action="append", default=[], dest="dialects",
                   help="restrict the matrix to these dialects")
    p.add_argument("--figure", type=Path, help="also write a heatmap of the matrix (PNG)")

    p = sub.add_parser("translate", help="expand and rewrite for a single target")
    _common(p)
    p.add_argument("files", nargs="+")
    p.add_argument("--from", dest="source_dialect", metavar="DIALECT",
                   help="dialect the sources are written for (like :- expects_dialect)")
    p.add_argument("--output-dir", type=Path, help="write <file>.<dialect>.pl here (default stdout)")
    p.add_argument("--provenance", action="store_true")
    return parser


# -- helpers ----------------------------------------------------------------

def _store(args) -> DialectStore:
    return load_profiles(args.catalog_dir)


def _rules(args):
    rules = []
    for path in args.rules:
        rules.extend(load_rules(path))
    return rules


def _read(name: str) -> str:
    if name == "-":
        return sys.stdin.read()
    return Path(name).read_text(encoding="utf-8")


def _display(name: str) -> str:
    return "<stdin>" if name == "-" else name


def _targets(args, store: DialectStore, default_all: bool = False) -> list[str]:
    targets = list(dict.fromkeys(args.dialects))
    if not targets and default_all:
        return store.names
    if not targets:
        raise _Usage("at least one --dialect is required")
    for d in targets:
        store.profile(d)
    return targets


class _Usage(Exception):
    pass


def _err(msg: str):
    print(f"portolog: {msg}", file=sys.stderr)


def _output_path(name: str, dialect: str, outdir: Path | None) -> Path:
    src = Path(name)
    stem = src.name[:-3] if src.name.endswith(".pl") else src.name
    base = outdir if outdir is not None else src.parent
    return base / f"{stem}.{dialect}.pl"


def _diag_dicts(prog):
    return [{"severity": d.severity, "code": d.code, "message": d.message,
             "file": d.pos.file if d.pos else prog.file,
             "line": d.pos.line if d.pos else None,
             "column": d.pos.column if d.pos else None} for d in prog.diagnostics]


# -- commands ---------------------------------------------------------------

def _run_expansions(args, store, targets, declared=None, to_stdout=False):
    rules = _rules(args)
    policy = POLICY_NAMES[args.unknown_policy]
    results, status = [], EXIT_OK
    for name in args.files:
        try:
            source = _read(name)
        except (OSError, UnicodeDecodeError) as e:
            _err(f"cannot read {name}: {e}")
            status = EXIT_ERROR
            continue
        for d in targets:
            try:
                prog = expand_program(_display(name), d, store, rules, args.library_root,
                                      policy, source=source, enable=args.enable_rule,
                                      declared=declared)
            except PortologError as e:
                _err(str(e))
                status = EXIT_ERROR
                continue
            for diag in prog.diagnostics:
                print(f"{diag} ({d})", file=sys.stderr)
                if diag.severity == "error":
                    status = EXIT_ERROR
            text = prog.render(args.provenance)
            entry = {"file": _display(name), "dialect": d, "output": None,
                     "stats": prog.stats, "diagnostics": _diag_dicts(prog),
                     "dependencies": [{"kind": dep.kind, "spec": str(dep.spec),
                                       "path": str(dep.path) if dep.path else None}
                                      for dep in prog.dependencies]}
            if to_stdout or name == "-":
                if args.format == "machine":
                    entry["text"] = text
                else:
                    if len(targets) > 1 or len(args.files) > 1:
                        sys.stdout.write(f"% {_display(name)} ({d})\n")
                    sys.stdout.write(text)
            else:
                out = _output_path(name, d, args.output_dir)
                out.parent.mkdir(parents=True, exist_ok=True)
                out.write_text(text, encoding="utf-8")
                entry["output"] = str(out)
                log.info("wrote %s", out)
            results.append(entry)
    return results, status


def _dump(command: str, payload: dict):
    doc = {"schema_version": SCHEMA_VERSION, "command": command}
    doc.update(payload)
    sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def cmd_expand(args) -> int:
    store = _store(args)
    targets = _targets(args, store)
    results, status = _run_expansions(args, store, targets)
    if args.format == "machine":
        _dump("expand", {"results": results})
    return status


def cmd_translate(args) -> int:
    store = _store(args)
    targets = _targets(args, store)
    if len(targets) != 1:
        raise _Usage("translate takes exactly one --dialect")
    if args.source_dialect is not None:
        store.profile(args.source_dialect)
    problems = validate_rules(_rules(args))
    if problems:
        for p in problems:
            _err(f"rule {p}")
        return EXIT_ERROR
    results, status = _run_expansions(args, store, targets, declared=args.source_dialect,
                                      to_stdout=args.output_dir is None)
    if args.format == "machine":
        _dump("translate", {"results": results})
    return status


def cmd_lint(args) -> int:
    store = _store(args)
    targets = _targets(args, store, default_all=True)
    cfg = (RuleSet.load(args.lint_config, args.strict) if args.lint_config
           else RuleSet(strict=args.strict))
    rules = _rules(args)
    policy = POLICY_NAMES[args.unknown_policy]
    findings, failed = [], False
    for name in args.files:
        try:
            source = _read(name)
        except (OSError, UnicodeDecodeError) as e:
            _err(f"cannot read {name}: {e}")
            failed = True
            continue
        findings.extend(lint_program(_display(name), targets, store, cfg, source=source,
                                     rules=rules, library_root=args.library_root,
                                     unknown_policy=policy))
    sys.stdout.write(report(findings, args.format))
    if args.figure:
        from .plotting import findings_chart
        findings_chart(findings, args.figure)
    if failed:
        return EXIT_ERROR
    return exit_status(findings)


def _matrix_text(store: DialectStore, dialects: list[str]) -> str:
    keys = store.keys
    labels = [store.decls[k].label for k in keys]
    marks: dict = {}
    rows = []
    for k, label in zip(keys, labels):
        row = [label]
        for d in dialects:
            v = store.feature(d, k)
            cell = str(v)
            if v.note:
                mark = marks.setdefault(v.note, len(marks) + 1)
                cell += f" [{mark}]"
            row.append(cell)
        rows.append(row)
    header = ["Feature"] + dialects
    widths = [max(len(r[i]) for r in rows + [header]) for i in range(len(header))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*header).rstrip(), fmt.format(*("-" * w for w in widths))]
    lines += [fmt.format(*r).rstrip() for r in rows]
    if marks:
        lines.append("")
        lines += [f"[{n}] {note}" for note, n in marks.items()]
    return "\n".join(lines) + "\n"


def cmd_features(args) -> int:
    store = _store(args)
    if args.diff:
        a, b = args.diff
        diff = store.diff_dialects(a, b)
        if args.format == "machine":
            _dump("features", {"diff": {"a": a, "b": b, "keys": [
                {"key": k, "a": str(va), "b": str(vb)} for k, va, vb in diff]}})
        else:
            for k, va, vb in diff:
                print(f"{k}: {a}={va} {b}={vb}")
        return EXIT_OK
    dialects = list(dict.fromkeys(args.dialects)) or store.names
    for d in dialects:
        store.profile(d)
    if args.format == "machine":
        matrix = store.matrix()
        matrix["dialects"] = dialects
        for row in matrix["features"]:
            row["values"] = {d: row["values"][d] for d in dialects}
        _dump("features", {"matrix": matrix})
    else:
        sys.stdout.write(_matrix_text(store, dialects))
    if args.figure:
        from .plotting import feature_heatmap
        feature_heatmap(store, args.figure, dialects)
    return EXIT_OK


COMMANDS = {"expand": cmd_expand, "lint": cmd_lint, "features": cmd_features,
            "translate": cmd_translate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _Usage as e:
        parser.print_usage(sys.stderr)
        _err(str(e))
        return EXIT_ERROR
    except PortologError as e:
        _err(str(e))
        return EXIT_ERROR
    except OSError as e:
        _err(str(e))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
