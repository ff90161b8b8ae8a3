"""Per-dialect expansion of a Prolog source file.

The preprocessor walks the clause stream once, keeping a load context:

* ``:- if/elif/else/endif`` select regions using :mod:`portolog.condeval`;
  the directives themselves are consumed.
* ``:- op/3`` updates the operator table used to read the rest of the file
  and is emitted (possibly rewritten).
* ``:- expects_dialect(D)`` switches the load-context dialect, puts
  ``<library root>/dialect/D`` in front of the library path, adds D's
  operators and activates D's shipped rewrite rules.
* ``:- block`` declarations are compiled to when/2 wrappers when the target
  has no block/1.

Everything else goes through the rewrite engine.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from . import rewrite
from .condeval import EvalContext, TriBool, explain
from .dialects import DialectStore
from .errors import (OpDirectiveError, ReadError, RuleError, SyntaxErrorBase,
                     UnbalancedConditional, UnknownDialectInExpects)
from .lexer import split_clauses, tokenize
from .ops import OperatorTable, apply_op_directive, default_table
from .reader import ReadOptions, read_term
from .terms import Atom, Compound, SourcePos, Term, indicator_of, list_items
from .writer import format_clause, write_term

SHIPPED_LIBRARY = Path(__file__).parent / "data" / "library"
COND_DIRECTIVES = ("if", "elif", "else", "endif")
BLOCK_RULE_ID = "block_when"

SELECTING = "selecting"
SELECTED = "selected"
SKIPPED_AFTER_SELECTED = "skipped_after_selected"


@dataclass
class DirectiveFrame:
    state: str
    origin: SourcePos | None
    saw_else: bool = False


@dataclass(frozen=True)
class Provenance:
    kind: str  # kept | rewritten | synthesized
    rule_id: str | None = None

    def __str__(self):
        return self.kind if self.rule_id is None else f"{self.kind}({self.rule_id})"


KEPT = Provenance("kept")


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    pos: SourcePos | None = None

    def __str__(self):
        where = f"{self.pos}: " if self.pos is not None else ""
        return f"{where}{self.severity}: [{self.code}] {self.message}"


@dataclass(frozen=True)
class Dependency:
    kind: str  # use_module | ensure_loaded | include | expects_dialect | ...
    spec: Term
    path: Path | None
    pos: SourcePos | None = None


@dataclass(frozen=True)
class ExpandedItem:
    term: Term
    pos: SourcePos | None
    provenance: Provenance
    table: OperatorTable = field(repr=False, compare=False, default=None)


@dataclass
class ExpandedProgram:
    file: str
    target: str
    items: list[ExpandedItem] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    dependencies: list[Dependency] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def terms(self) -> list[Term]:
        return [it.term for it in self.items]

    def render(self, provenance: bool = False) -> str:
        """The expanded program as source text, one clause per line."""
        lines = []
        for it in self.items:
            if provenance and it.provenance != KEPT:
                lines.append(f"% {it.provenance}")
            lines.append(format_clause(it.term, it.table))
        return "".join(line + "\n" for line in lines)


@dataclass
class LoadContext:
    dialect: str
    profiles: DialectStore
    table: OperatorTable
    library_path: list[Path]
    eval_ctx: EvalContext
    library_root: Path = SHIPPED_LIBRARY
    declared_dialect: str | None = None
    cond_stack: list[DirectiveFrame] = field(default_factory=list)
    rules: list = field(default_factory=list)
    user_rules: list = field(default_factory=list)
    enabled: frozenset = frozenset()
    file: str = "<string>"
    read_options: ReadOptions = field(default_factory=ReadOptions)
    diagnostics: list[Diagnostic] = field(default_factory=list)
    dependencies: list[Dependency] = field(default_factory=list)
    blocks: dict = field(default_factory=dict)  # indicator -> BlockSpec

    @property
    def active(self) -> bool:
        return not self.cond_stack or self.cond_stack[-1].state == SELECTED

    def warn(self, code, message, pos):
        self.diagnostics.append(Diagnostic("warning", code, message, pos))

    def error(self, code, message, pos):
        self.diagnostics.append(Diagnostic("error", code, message, pos))


def _with_enabled(rules, enabled):
    out = []
    for r in rules:
        if not r.enabled and r.id in enabled:
            r = rewrite.RewriteRule(r.id, r.kind, r.pattern, r.template, r.guards,
                                    r.dialect_guard, True, r.origin)
        out.append(r)
    return out


def new_context(target: str, profiles: DialectStore, rules=(), library_root=None,
                unknown_policy: str = "assume_false_warn", file: str = "<string>",
                enable=(), table: OperatorTable | None = None) -> LoadContext:
    root = Path(library_root) if library_root is not None else SHIPPED_LIBRARY
    base = table if table is not None else default_table()
    enabled = frozenset(enable)
    user_rules = _with_enabled(list(rules), enabled)
    return LoadContext(
        dialect=target,
        profiles=profiles,
        table=profiles.profile(target).operator_table(base),
        library_path=[root],
        eval_ctx=EvalContext(target, profiles, {"source": Atom(file)}, unknown_policy),
        library_root=root,
        rules=list(user_rules),
        user_rules=user_rules,
        enabled=enabled,
        file=file,
    )


# -- directives -------------------------------------------------------------

def directive_body(t: Term) -> Term | None:
    if isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 1:
        return t.args[0]
    return None


def conditional_kind(t: Term) -> str | None:
    """'if', 'elif', 'else' or 'endif' when ``t`` is a conditional directive."""
    body = directive_body(t)
    if isinstance(body, Atom) and body.name in ("else", "endif"):
        return body.name
    if isinstance(body, Compound) and body.functor in ("if", "elif") and len(body.args) == 1:
        return body.functor
    return None


def _condition(ctx: LoadContext, goal: Term) -> bool:
    trace = explain(goal, ctx.eval_ctx)
    if any(leaf.warning for leaf in trace.leaves()):
        ctx.warn("UNKNOWN_CONDITION",
                 f"cannot decide {write_term(goal)} statically; taking the else branch",
                 goal.pos)
    return trace.result is TriBool.TRUE


def _conditional(kind: str, body: Term, ctx: LoadContext, pos) -> None:
    stack = ctx.cond_stack
    if kind == "if":
        if not ctx.active:
            stack.append(DirectiveFrame(SKIPPED_AFTER_SELECTED, pos))
        elif _condition(ctx, body.args[0]):
            stack.append(DirectiveFrame(SELECTED, pos))
        else:
            stack.append(DirectiveFrame(SELECTING, pos))
        return
    if not stack:
        raise UnbalancedConditional(f":- {kind} without matching :- if", pos)
    top = stack[-1]
    if kind == "endif":
        stack.pop()
        return
    if top.saw_else:
        raise UnbalancedConditional(f":- {kind} after :- else (if at {top.origin})", pos)
    if kind == "else":
        top.saw_else = True
        top.state = SELECTED if top.state == SELECTING else SKIPPED_AFTER_SELECTED
        return
    # elif
    if top.state == SELECTING:
        if _condition(ctx, body.args[0]):
            top.state = SELECTED
    elif top.state == SELECTED:
        top.state = SKIPPED_AFTER_SELECTED


def _library_name(spec: Term) -> str | None:
    if isinstance(spec, Atom):
        return spec.name
    if isinstance(spec, Compound) and spec.functor == "/" and len(spec.args) == 2:
        left, right = _library_name(spec.args[0]), _library_name(spec.args[1])
        if left is not None and right is not None:
            return f"{left}/{right}"
    return None


def resolve_library(spec: Term, ctx: LoadContext) -> Path | None:
    """Find the file a ``library(Name)`` or plain file spec refers to, or None."""
    if isinstance(spec, Compound) and spec.functor == "library" and len(spec.args) == 1:
        name = _library_name(spec.args[0])
        if name is None:
            return None
        dirs = list(ctx.library_path)
    else:
        name = _library_name(spec)
        if name is None:
            return None
        here = Path(ctx.file).parent if ctx.file and not ctx.file.startswith("<") else Path(".")
        dirs = [here]
    for d in dirs:
        for cand in (d / name, d / f"{name}.pl"):
            if cand.is_file():
                return cand
    return None


def _expects_dialect(d: str, ctx: LoadContext, pos) -> None:
    if d not in ctx.profiles:
        raise UnknownDialectInExpects(f"expects_dialect({d}): no profile for dialect {d!r}", pos)
    ctx.declared_dialect = d
    ctx.eval_ctx = ctx.eval_ctx.with_load_context(dialect=Atom(d))
    dialect_dir = ctx.library_root / "dialect" / d
    ctx.library_path = [dialect_dir] + [p for p in ctx.library_path if p != dialect_dir]
    ctx.table = ctx.profiles.profile(d).operator_table(ctx.table)
    if d != ctx.dialect:
        shipped = _with_enabled(rewrite.shipped_rules(d), ctx.enabled)
        ctx.rules = shipped + list(ctx.user_rules)
    lib = Compound("library", (Compound("/", (Atom("dialect"), Atom(d))),))
    ctx.dependencies.append(Dependency("expects_dialect", lib, resolve_library(lib, ctx), pos))


_LOAD_DIRECTIVES = {("use_module", 1), ("use_module", 2), ("ensure_loaded", 1),
                    ("consult", 1), ("include", 1), ("load_files", 2)}


def _record_loads(kind: str, arg: Term, ctx: LoadContext, pos) -> None:
    specs, _ = list_items(arg)
    if not specs and arg != Atom("[]"):
        specs = [arg]
    for spec in specs:
        ctx.dependencies.append(Dependency(kind, spec, resolve_library(spec, ctx), pos))


def handle_directive(d: Term, ctx: LoadContext) -> tuple[LoadContext, str]:
    """Process one directive; returns the context and 'emit', 'consume' or 'skip'.

    In a skipped region only the conditional directives have any effect.
    """
    body = directive_body(d)
    if body is None:
        raise ValueError("handle_directive expects ':- Body'")
    pos = d.pos
    kind = conditional_kind(d)
    if kind is not None:
        _conditional(kind, body, ctx, pos)
        return ctx, "consume"
    if not ctx.active:
        return ctx, "skip"
    if isinstance(body, Compound):
        name, arity = body.functor, len(body.args)
        if name == "op" and arity == 3:
            try:
                ctx.table = apply_op_directive(ctx.table, body)
            except OpDirectiveError as e:
                ctx.error("BAD_OP", e.message, pos)
        elif name == "module" and arity == 2:
            items, _ = list_items(body.args[1])
            for item in items:
                if isinstance(item, Compound) and item.functor == "op" and len(item.args) == 3:
                    try:
                        ctx.table = apply_op_directive(ctx.table, item)
                    except OpDirectiveError as e:
                        ctx.error("BAD_OP", e.message, pos)
        elif name == "expects_dialect" and arity == 1:
            arg = body.args[0]
            if not isinstance(arg, Atom):
                raise UnknownDialectInExpects("expects_dialect/1 needs an atom", pos)
            _expects_dialect(arg.name, ctx, pos)
        elif (name, arity) in _LOAD_DIRECTIVES:
            _record_loads(name, body.args[0], ctx, pos)
    return ctx, "emit"


# -- expansion --------------------------------------------------------------

def _block_applies(ctx: LoadContext) -> bool:
    return not ctx.profiles.has_predicate(ctx.dialect, ("block", 1))


def _emit(prog: ExpandedProgram, ctx: LoadContext, term: Term) -> None:
    fired: list[str] = []
    out = [term]
    if ctx.blocks and directive_body(term) is None:
        spec = ctx.blocks.get(indicator_of(rewrite.clause_head(term)))
        if spec is not None:
            out = [rewrite.rename_blocked_clause(term, spec)]
            fired.append(BLOCK_RULE_ID)
    if ctx.rules:
        out, more = rewrite.apply_rules_traced(out[0], ctx, ctx.rules)
        fired.extend(more)
    if not fired:
        prog.items.append(ExpandedItem(out[0], term.pos, KEPT, ctx.table))
        return
    rule_id = ",".join(dict.fromkeys(fired))
    for k, t in enumerate(out):
        kind = "rewritten" if k == 0 else "synthesized"
        prog.items.append(ExpandedItem(t, term.pos, Provenance(kind, rule_id), ctx.table))


def _block_directive(prog: ExpandedProgram, ctx: LoadContext, term: Term) -> None:
    try:
        specs = rewrite.block_specs(term)
    except RuleError as e:
        ctx.error("BAD_BLOCK", e.message, e.pos or term.pos)
        return
    for spec in specs:
        ctx.blocks[spec.predicate] = spec
        wrapper = rewrite.block_wrapper(spec, term.pos)
        prog.items.append(ExpandedItem(wrapper, term.pos,
                                       Provenance("synthesized", BLOCK_RULE_ID), ctx.table))


def expand_source(source: str, target: str, profiles: DialectStore, rules=(),
                  library_root=None, unknown_policy: str = "assume_false_warn",
                  file: str = "<string>", enable=(),
                  table: OperatorTable | None = None,
                  declared: str | None = None) -> ExpandedProgram:
    """Expand source text; ``declared`` acts like a leading ``:- expects_dialect``."""
    ctx = new_context(target, profiles, rules, library_root, unknown_policy, file, enable, table)
    if declared is not None:
        _expects_dialect(declared, ctx, SourcePos(file, 1, 1))
    prog = ExpandedProgram(file, target)
    stats = {"parsed": 0, "emitted": 0, "skipped": 0, "conditional": 0, "unparsed_skipped": 0}
    try:
        tokens = tokenize(source, SourcePos(file, 1, 1))
    except SyntaxErrorBase as e:
        raise ReadError(e.message, e.pos) from None
    for run in split_clauses(tokens):
        try:
            term = read_term(run, ctx.table, ctx.read_options)
        except SyntaxErrorBase as e:
            if ctx.active:
                raise ReadError(e.message, e.pos or run[0].pos) from None
            ctx.warn("SKIPPED_SYNTAX", f"unreadable clause in skipped region: {e.message}",
                     e.pos or run[0].pos)
            stats["unparsed_skipped"] += 1
            continue
        stats["parsed"] += 1
        if directive_body(term) is not None:
            _, decision = handle_directive(term, ctx)
            if decision == "consume":
                stats["conditional"] += 1
                continue
            if decision == "skip":
                stats["skipped"] += 1
                continue
            if rewrite.is_block_directive(term) and _block_applies(ctx):
                _block_directive(prog, ctx, term)
                continue
        elif not ctx.active:
            stats["skipped"] += 1
            continue
        _emit(prog, ctx, term)
    if ctx.cond_stack:
        frame = ctx.cond_stack[-1]
        raise UnbalancedConditional(":- if without matching :- endif", frame.origin)
    stats["emitted"] = len(prog.items)
    prog.stats = stats
    prog.diagnostics = ctx.diagnostics
    prog.dependencies = ctx.dependencies
    return prog


def expand_program(file, target: str, profiles: DialectStore, rules=(), library_root=None,
                   unknown_policy: str = "assume_false_warn", source: str | None = None,
                   enable=(), declared: str | None = None) -> ExpandedProgram:
    """Expand one file for ``target``. ``source`` overrides reading ``file`` from disk."""
    name = str(file)
    if source is None:
        try:
            source = Path(file).read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            raise ReadError(f"cannot read {name}: {e}") from None
    return expand_source(source, target, profiles, rules, library_root, unknown_policy,
                         name, enable, declared=declared)


__all__ = [
    "DirectiveFrame", "Provenance", "Diagnostic", "Dependency", "ExpandedItem",
    "ExpandedProgram", "LoadContext", "new_context", "handle_directive", "resolve_library",
    "expand_source", "expand_program", "conditional_kind",
]
