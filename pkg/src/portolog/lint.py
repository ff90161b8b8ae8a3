"""Portability linter.

Each target dialect gets its own expansion of the file (so code in an
unselected ``:- if`` branch is never reported for that dialect). Findings
from all targets are then merged: identical findings at the same position
are reported once, listing every dialect they apply to.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import rewrite
from .dialects import DialectStore
from .errors import ConfigError, NonGroundCondition, PolicyError, ReadError, \
    UnbalancedConditional, UnknownDialectInExpects
from .preprocessor import BLOCK_RULE_ID, ExpandedProgram, directive_body, expand_program
from .terms import Atom, Compound, SourcePos, Str, Term, Var, format_indicator, \
    indicator_of, list_items, strip_module
from .writer import write_term

SCHEMA_VERSION = 1
SEVERITIES = ("error", "warning", "info")
_SEVERITY_RANK = {s: i for i, s in enumerate(SEVERITIES)}
ISO_OPTIONS_FILE = Path(__file__).parent / "data" / "lint" / "iso_options.def"

# rule id -> (default severity, enabled by default, description)
RULES = {
    "PARSE_ERROR": ("error", True, "source cannot be read"),
    "UNBALANCED_COND": ("error", True, "if/else/endif nesting is broken"),
    "MISSING_PRED": ("warning", True, "called predicate absent from the target catalog"),
    "SEMANTIC_DIVERGENCE": ("warning", True, "predicate behaves differently across dialects"),
    "UNKNOWN_FLAG": ("warning", True, "Prolog flag absent from the target flag table"),
    "UNKNOWN_OPTION": ("warning", True, "option outside the ISO option list"),
    "OP_EXPORT": ("warning", True, "operator declared in a module leaks into the global table"),
    "REDEFINE_BUILTIN": ("error", True, "clause for a built-in predicate"),
    "STREAM_PAIR": ("warning", True, "one socket stream used for both input and output"),
    "BLOCK_NAME_COLLISION": ("error", True, "predicate clashes with a generated block wrapper"),
    "UNKNOWN_CONDITION": ("warning", True, "conditional compilation goal cannot be decided"),
    "DIRECTIVE_ERROR": ("error", True, "malformed op/3 or block directive"),
    "SKIPPED_SYNTAX": ("info", True, "unreadable clause inside a skipped region"),
    "MISSING_LIBRARY": ("warning", False, "library not found on the library path"),
}

# predicates a program may legitimately define although they are built-in hooks
_HOOKS = {("term_expansion", 2), ("goal_expansion", 2), ("term_expansion", 4),
          ("goal_expansion", 4), ("portray", 1), ("message_hook", 3),
          ("prolog_load_file", 2), ("exception", 3)}
_DECLARATIONS = {"dynamic", "discontiguous", "multifile", "public", "table", "thread_local"}

_SOCKET_OPEN = {("socket_client_open", 3), ("socket_server_accept", 4),
                ("tcp_open_socket", 3), ("tcp_connect", 2), ("tcp_connect", 3),
                ("connect_to_socket", 3), ("socket_accept", 2)}
_INPUT_PREDS = {("read", 2), ("read_term", 3), ("get_char", 2), ("get_code", 2),
                ("get_byte", 2), ("peek_char", 2), ("peek_code", 2), ("peek_byte", 2),
                ("read_line_to_codes", 2), ("read_line_to_string", 2)}
_OUTPUT_PREDS = {("write", 2), ("writeq", 2), ("print", 2), ("write_canonical", 2),
                 ("write_term", 3), ("format", 3), ("nl", 1), ("put_char", 2),
                 ("put_code", 2), ("put_byte", 2), ("flush_output", 1)}


@dataclass(frozen=True)
class LintFinding:
    rule_id: str
    severity: str
    pos: SourcePos
    subject: str
    message: str
    dialects_affected: frozenset

    def __post_init__(self):
        if self.severity not in SEVERITIES:
            raise ValueError(f"bad severity {self.severity!r}")
        if not self.dialects_affected:
            raise ValueError("dialects_affected must be non-empty")
        if not isinstance(self.dialects_affected, frozenset):
            object.__setattr__(self, "dialects_affected", frozenset(self.dialects_affected))

    def sort_key(self):
        p = self.pos
        return (p.file, p.line, p.column, self.rule_id, _SEVERITY_RANK[self.severity],
                self.subject, self.message, tuple(sorted(self.dialects_affected)))

    def as_dict(self) -> dict:
        return {
            "file": self.pos.file, "line": self.pos.line, "column": self.pos.column,
            "rule_id": self.rule_id, "severity": self.severity, "subject": self.subject,
            "message": self.message, "dialects_affected": sorted(self.dialects_affected),
        }


@dataclass(frozen=True)
class RuleSet:
    """Enabled lint rules and per-rule severity overrides."""
    enabled: frozenset = field(default_factory=lambda: frozenset(
        r for r, (_, on, _) in RULES.items() if on))
    overrides: tuple = ()  # (rule_id, severity) pairs
    strict: bool = False

    def __post_init__(self):
        unknown = set(self.enabled) - set(RULES)
        unknown |= {r for r, _ in self.overrides if r not in RULES}
        if unknown:
            raise ConfigError(f"unknown lint rule(s): {', '.join(sorted(unknown))}")
        for r, sev in self.overrides:
            if sev not in SEVERITIES:
                raise ConfigError(f"bad severity {sev!r} for {r}")

    def severity(self, rule_id: str, default: str) -> str:
        for r, sev in self.overrides:
            if r == rule_id:
                return sev
        if self.strict and rule_id == "MISSING_PRED":
            return "error"
        return default

    def is_enabled(self, rule_id: str) -> bool:
        return rule_id in self.enabled

    @classmethod
    def parse(cls, text: str, strict: bool = False) -> "RuleSet":
        """Read ``RULE_ID = on|off|error|warning|info`` lines ('#' comments)."""
        enabled = {r for r, (_, on, _) in RULES.items() if on}
        overrides = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            rule, sep, value = (s.strip() for s in line.partition("="))
            if not sep:
                raise ConfigError(f"line {lineno}: expected RULE_ID = value")
            if rule not in RULES:
                raise ConfigError(f"line {lineno}: unknown lint rule {rule!r}")
            if value == "off":
                enabled.discard(rule)
            elif value == "on":
                enabled.add(rule)
            elif value in SEVERITIES:
                enabled.add(rule)
                overrides.append((rule, value))
            else:
                raise ConfigError(f"line {lineno}: bad value {value!r} for {rule}")
        return cls(frozenset(enabled), tuple(overrides), strict)

    @classmethod
    def load(cls, path, strict: bool = False) -> "RuleSet":
        return cls.parse(Path(path).read_text(encoding="utf-8"), strict)


def load_iso_options(path=ISO_OPTIONS_FILE) -> dict:
    """Map (name, arity) -> (argument index, frozenset of option names)."""
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, _, names = line.partition(":")
        pi, idx = head.split()
        name, arity = pi.rsplit("/", 1)
        out[(name, int(arity))] = (int(idx), frozenset(names.split()))
    return out


ISO_OPTIONS = load_iso_options()


# -- walking programs -------------------------------------------------------

def body_goals(goal: Term):
    """Yield every goal reachable through control constructs and meta-calls."""
    stack = [goal]
    while stack:
        g = stack.pop()
        if isinstance(g, Var):
            continue
        yield g
        _, inner = strip_module(g)
        if not isinstance(inner, Compound):
            continue
        key = (inner.functor, len(inner.args))
        positions = rewrite.META_ARGS.get(key)
        if positions is None and inner.functor in ("bagof", "setof") and len(inner.args) == 3:
            g2 = inner.args[1]
            while isinstance(g2, Compound) and g2.functor == "^" and len(g2.args) == 2:
                g2 = g2.args[1]
            stack.append(g2)
            continue
        if positions is None:
            continue
        for i in reversed(positions):
            arg = inner.args[i]
            if inner.functor == "call" and i == 0 and len(inner.args) > 1:
                continue  # closure with extra arguments: arity unknown statically
            stack.append(arg)


def _dcg_goals(body: Term):
    """Goals called by a grammar rule body, with the two hidden arguments added."""
    stack = [body]
    while stack:
        b = stack.pop()
        if isinstance(b, Var) or isinstance(b, Str):
            continue
        if isinstance(b, Atom):
            if b.name in ("[]", "!"):
                if b.name == "!":
                    yield b
                continue
            yield Compound(b.name, (Var("S0"), Var("S")), b.pos)
            continue
        if not isinstance(b, Compound):
            continue
        if b.functor == "." and len(b.args) == 2:
            continue
        if b.functor in (",", ";", "->", "|") and len(b.args) == 2:
            stack.extend(reversed(b.args))
        elif b.functor == "\\+" and len(b.args) == 1:
            stack.append(b.args[0])
        elif b.functor == "{}" and len(b.args) == 1:
            yield from body_goals(b.args[0])
        elif b.functor == "call":
            yield b
        else:
            yield Compound(b.functor, b.args + (Var("S0"), Var("S")), b.pos)


def clause_parts(t: Term):
    """(head, called goals) for a clause, grammar rule or directive."""
    body = directive_body(t)
    if body is not None:
        return None, list(body_goals(body))
    if isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 2:
        return t.args[0], list(body_goals(t.args[1]))
    if isinstance(t, Compound) and t.functor == "-->" and len(t.args) == 2:
        head = t.args[0]
        if isinstance(head, Compound) and head.functor == "," and len(head.args) == 2:
            head = head.args[0]
        if isinstance(head, Atom):
            head = Compound(head.name, (Var("S0"), Var("S")), head.pos)
        elif isinstance(head, Compound):
            head = Compound(head.functor, head.args + (Var("S0"), Var("S")), head.pos)
        return head, list(_dcg_goals(t.args[1]))
    return t, []


def _declared(goal: Term) -> list[tuple[str, int]]:
    """Indicators named by a dynamic/discontiguous/... declaration."""
    out = []
    if not (isinstance(goal, Compound) and goal.functor in _DECLARATIONS and len(goal.args) == 1):
        return out
    stack = [goal.args[0]]
    while stack:
        s = stack.pop()
        _, s = strip_module(s)
        if isinstance(s, Compound) and s.functor in (",", "/") and len(s.args) == 2:
            if s.functor == "/" and isinstance(s.args[0], Atom) and hasattr(s.args[1], "value"):
                out.append((s.args[0].name, s.args[1].value))
            elif s.functor == ",":
                stack.extend(s.args)
        elif isinstance(s, Compound) and s.functor == "." and len(s.args) == 2:
            items, _ = list_items(s)
            stack.extend(items)
    return out


# -- per-target rules -------------------------------------------------------

class _TargetLinter:
    def __init__(self, prog: ExpandedProgram, target: str, profiles: DialectStore,
                 cfg: RuleSet, user_defined: set):
        self.prog = prog
        self.d = target
        self.profiles = profiles
        self.profile = profiles.profile(target)
        self.cfg = cfg
        self.defined = user_defined
        self.out: list[LintFinding] = []

    def add(self, rule_id, pos, subject, message, severity=None):
        if not self.cfg.is_enabled(rule_id):
            return
        sev = self.cfg.severity(rule_id, severity or RULES[rule_id][0])
        if pos is None:
            pos = SourcePos(self.prog.file, 1, 1)
        self.out.append(LintFinding(rule_id, sev, pos, subject, message, frozenset([self.d])))

    def run(self) -> list[LintFinding]:
        for diag in self.prog.diagnostics:
            rule = {"UNKNOWN_CONDITION": "UNKNOWN_CONDITION", "BAD_OP": "DIRECTIVE_ERROR",
                    "BAD_BLOCK": "DIRECTIVE_ERROR",
                    "SKIPPED_SYNTAX": "SKIPPED_SYNTAX"}.get(diag.code)
            if rule:
                self.add(rule, diag.pos, "", diag.message)
        for dep in self.prog.dependencies:
            if dep.path is None and dep.kind != "expects_dialect":
                self.add("MISSING_LIBRARY", dep.pos, write_term(dep.spec),
                         f"cannot find {write_term(dep.spec)} on the library path")
        in_module = False
        wrappers = {}
        for item in self.prog.items:
            t = item.term
            body = directive_body(t)
            if body is not None and isinstance(body, Compound) and body.functor == "module":
                in_module = True
            if body is not None and in_module and isinstance(body, Compound) \
                    and body.functor == "op" and len(body.args) == 3:
                self.op_export(body, item.pos)
            head, goals = clause_parts(t)
            if head is not None:
                self.head(head, item)
                if item.provenance.rule_id == BLOCK_RULE_ID and item.provenance.kind == "synthesized":
                    wrappers[indicator_of(head)] = item.pos
            for g in goals:
                self.goal(g, item.pos)
            if goals:
                self.stream_pair(goals, item.pos)
        for (name, arity), pos in wrappers.items():
            internal = (name + rewrite.BLOCK_SUFFIX, arity)
            if internal in self.user_heads:
                self.add("BLOCK_NAME_COLLISION", pos, format_indicator(internal),
                         f"{format_indicator(internal)} is defined by the program and also "
                         f"generated for the block declaration of {name}/{arity}")
        return self.out

    @property
    def user_heads(self):
        return self.defined

    def head(self, head: Term, item):
        _, h = strip_module(head)
        pi = indicator_of(h)
        if pi is None or item.provenance.rule_id == BLOCK_RULE_ID:
            return
        if str(self.profile.features["redefine_builtin"]) != "no" or pi in _HOOKS:
            return
        if any(e.origin == "builtin" for e in self.profile.entries(pi)):
            self.add("REDEFINE_BUILTIN", item.pos, format_indicator(pi),
                     f"clause for built-in {format_indicator(pi)}; dialects without "
                     f"redefinable built-ins reject it")

    def goal(self, g: Term, pos):
        _, inner = strip_module(g)
        pi = indicator_of(inner)
        if pi is None:
            return
        gpos = g.pos or pos
        entries = self.profile.entries(pi)
        if not entries and pi not in self.defined:
            self.add("MISSING_PRED", gpos, format_indicator(pi),
                     f"{format_indicator(pi)} is not in the catalog")
        if any(e.note for e in entries):
            self.add("SEMANTIC_DIVERGENCE", gpos, format_indicator(pi),
                     f"{format_indicator(pi)} exists under the same name with different "
                     f"semantics across dialects")
        if pi in (("current_prolog_flag", 2), ("set_prolog_flag", 2), ("prolog_flag", 2),
                  ("prolog_flag", 3)):
            self.flag(inner, pi, gpos)
        if pi in ISO_OPTIONS:
            self.options(inner, pi, gpos)

    def flag(self, g: Compound, pi, pos):
        flag = g.args[0]
        if not isinstance(flag, Atom) or flag.name in self.profile.flags:
            return
        setting = pi[0] == "set_prolog_flag" or pi == ("prolog_flag", 3)
        key = "set_unknown_flag" if setting else "get_unknown_flag"
        behaviour = str(self.profile.features[key])
        sev = {"error": "error", "fail": "warning", "yes": "info"}[behaviour]
        verb = "setting" if setting else "reading"
        what = {"error": "raises an error", "fail": "fails silently",
                "yes": "is accepted"}[behaviour]
        self.add("UNKNOWN_FLAG", pos, flag.name,
                 f"{verb} unknown flag {flag.name} {what}", sev)

    def options(self, g: Compound, pi, pos):
        idx, known = ISO_OPTIONS[pi]
        items, _ = list_items(g.args[idx - 1])
        policy = str(self.profile.features["provide_unknown_option"])
        sev = {"error": "error", "ignore": "info"}.get(policy, "warning")
        for opt in items:
            name = opt.functor if isinstance(opt, Compound) else getattr(opt, "name", None)
            if name is None or name in known:
                continue
            how = "raises a domain error" if policy == "error" else "is ignored"
            self.add("UNKNOWN_OPTION", opt.pos or pos, name,
                     f"option {name} to {format_indicator(pi)} is not ISO; it {how}", sev)

    def op_export(self, body: Compound, pos):
        if str(self.profile.features["operators_and_modules"]) != "global":
            return
        self.add("OP_EXPORT", pos, write_term(body),
                 "operator declared inside a module becomes global")

    def stream_pair(self, goals, pos):
        if not self.profile.has_predicate(("stream_pair", 3)):
            return
        pis = [(indicator_of(strip_module(g)[1]), strip_module(g)[1]) for g in goals]
        socket_vars = set()
        for pi, g in pis:
            if pi in _SOCKET_OPEN:
                socket_vars.update(a.name for a in g.args if isinstance(a, Var))
        if not socket_vars:
            return
        reads = {g.args[0].name for pi, g in pis
                 if pi in _INPUT_PREDS and isinstance(g.args[0], Var)}
        writes = {g.args[0].name for pi, g in pis
                  if pi in _OUTPUT_PREDS and isinstance(g.args[0], Var)}
        for v in sorted(socket_vars & reads & writes):
            self.add("STREAM_PAIR", pos, v,
                     f"socket stream {v} is both read and written; streams here are "
                     f"one-directional, use stream_pair/3")


def _program_defines(prog: ExpandedProgram) -> set:
    defined = set()
    for item in prog.items:
        t = item.term
        body = directive_body(t)
        if body is not None:
            defined.update(_declared(body))
            continue
        head, _ = clause_parts(t)
        _, head = strip_module(head)
        pi = indicator_of(head)
        if pi is not None:
            defined.add(pi)
    return defined


def _merge(findings) -> list[LintFinding]:
    merged: dict = {}
    for f in findings:
        key = (f.pos.file, f.pos.line, f.pos.column, f.rule_id, f.severity, f.subject, f.message)
        if key in merged:
            old = merged[key]
            merged[key] = LintFinding(old.rule_id, old.severity, old.pos, old.subject,
                                      old.message, old.dialects_affected | f.dialects_affected)
        else:
            merged[key] = f
    return sorted(merged.values(), key=LintFinding.sort_key)


def lint_program(file, targets, profiles: DialectStore, cfg: RuleSet | None = None,
                 source: str | None = None, rules=(), library_root=None,
                 unknown_policy: str = "assume_false_warn") -> list[LintFinding]:
    """Lint one file for every dialect in ``targets``; findings are merged and sorted."""
    cfg = cfg or RuleSet()
    name = str(file)
    if source is None:
        source = Path(file).read_text(encoding="utf-8")
    found = []
    for d in sorted(set(targets)):
        profiles.profile(d)
        try:
            prog = expand_program(name, d, profiles, rules, library_root, unknown_policy,
                                  source=source)
        except ReadError as e:
            pos = e.pos or SourcePos(name, 1, 1)
            if cfg.is_enabled("PARSE_ERROR"):
                found.append(LintFinding("PARSE_ERROR", cfg.severity("PARSE_ERROR", "error"),
                                         pos, "", e.message, frozenset([d])))
            continue
        except UnbalancedConditional as e:
            pos = e.pos or SourcePos(name, 1, 1)
            if cfg.is_enabled("UNBALANCED_COND"):
                found.append(LintFinding("UNBALANCED_COND",
                                         cfg.severity("UNBALANCED_COND", "error"),
                                         pos, "", e.message, frozenset([d])))
            continue
        except (PolicyError, NonGroundCondition, UnknownDialectInExpects) as e:
            pos = e.pos or SourcePos(name, 1, 1)
            found.append(LintFinding("UNKNOWN_CONDITION", "error", pos, "", e.message,
                                     frozenset([d])))
            continue
        found.extend(_TargetLinter(prog, d, profiles, cfg, _program_defines(prog)).run())
    return _merge(found)


def report(findings, fmt: str = "text") -> str:
    """Render findings; ``machine`` output is JSON with a schema version."""
    ordered = sorted(findings, key=LintFinding.sort_key)
    if fmt == "machine":
        doc = {"schema_version": SCHEMA_VERSION, "findings": [f.as_dict() for f in ordered]}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = []
    for f in ordered:
        p = f.pos
        lines.append(f"{p.file}:{p.line}:{p.column}: {f.severity} [{f.rule_id}] {f.message} "
                     f"({', '.join(sorted(f.dialects_affected))})")
    return "".join(line + "\n" for line in lines)


def exit_status(findings) -> int:
    """1 when any finding is a warning or an error, else 0.

    Strict mode raises MISSING_PRED to an error (see RuleSet.severity); info
    findings never fail a run.
    """
    return 1 if any(f.severity in ("error", "warning") for f in findings) else 0
