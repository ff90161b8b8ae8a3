"""Dialect-conditional term and goal rewriting.

Rules are declarative: a pattern, structural guards and one or more output
templates. ``term`` rules fire once on a whole clause; ``goal`` rules are
applied to every goal reachable through control constructs in clause and
directive bodies, repeatedly until no rule matches.

Rule files hold one stanza per rule, separated by blank lines::

    rule op_qualify goal dialect=sicstus
    match: op(P, A, N)
    where: nonvar(N), \\+ qualified(N)
    emit: op(P, A, user:N)

Several output terms are separated by ``;`` at the top level of ``emit:``;
a disjunction in a template must therefore be parenthesised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import (ArityMismatch, NoMinus, RuleError, RuleFileError, RuleLoop,
                     SyntaxErrorBase)
from .lexer import Token, tokenize
from .reader import read_term
from .terms import (Atom, Compound, Float, Int, SourcePos, Str, Term, Var, conjuncts,
                    indicator_of, variables)
from .writer import write_term

FUEL = 64
SHIPPED_RULES = Path(__file__).parent / "data" / "rules"


@dataclass(frozen=True)
class RewriteRule:
    id: str
    kind: str
    pattern: Term
    template: tuple
    guards: tuple = ()
    dialect_guard: str | None = None
    enabled: bool = True
    origin: str | None = None

    def __post_init__(self):
        if self.kind not in ("term", "goal"):
            raise RuleError(f"rule {self.id}: kind must be 'term' or 'goal'")
        if not isinstance(self.template, tuple):
            object.__setattr__(self, "template", tuple(self.template))
        if not isinstance(self.guards, tuple):
            object.__setattr__(self, "guards", tuple(self.guards))

    def active(self, declared_dialect: str | None) -> bool:
        if not self.enabled:
            return False
        return self.dialect_guard is None or self.dialect_guard == declared_dialect


@dataclass
class RuleContext:
    """The slice of a load context the rewrite engine looks at."""
    declared_dialect: str | None = None


# -- matching ---------------------------------------------------------------

def match(pattern: Term, term: Term, bindings: dict | None = None) -> dict | None:
    """One-way match: pattern variables bind to subterms of ``term``."""
    b = {} if bindings is None else dict(bindings)
    stack = [(pattern, term)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, Var):
            if p.name == "_":
                continue
            bound = b.get(p.name)
            if bound is None:
                b[p.name] = t
            elif bound != t:
                return None
        elif isinstance(p, Compound):
            if (not isinstance(t, Compound) or t.functor != p.functor
                    or len(t.args) != len(p.args)):
                return None
            stack.extend(zip(p.args, t.args))
        elif p != t:
            return None
    return b


def substitute(template: Term, bindings: dict, pos: SourcePos | None = None) -> Term:
    if isinstance(template, Var):
        return bindings.get(template.name, template)
    if isinstance(template, Compound):
        return Compound(template.functor,
                        tuple(substitute(a, bindings) for a in template.args),
                        pos if pos is not None else template.pos)
    return template


def _unify(a: Term, b: Term, s: dict) -> dict | None:
    def walk(t):
        while isinstance(t, Var) and t.name in s:
            t = s[t.name]
        return t

    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x, y = walk(x), walk(y)
        if isinstance(x, Var) and isinstance(y, Var) and x.name == y.name:
            continue
        if isinstance(x, Var):
            s[x.name] = y
        elif isinstance(y, Var):
            s[y.name] = x
        elif isinstance(x, Compound) and isinstance(y, Compound):
            if x.functor != y.functor or len(x.args) != len(y.args):
                return None
            stack.extend(zip(x.args, y.args))
        elif x != y:
            return None
    return s


# -- guards -----------------------------------------------------------------

def _is_qualified(t: Term) -> bool:
    return isinstance(t, Compound) and t.functor == ":" and len(t.args) == 2


_TYPE_TESTS = {
    "var": lambda t: isinstance(t, Var),
    "nonvar": lambda t: not isinstance(t, Var),
    "atom": lambda t: isinstance(t, Atom),
    "atomic": lambda t: isinstance(t, (Atom, Int, Float, Str)),
    "number": lambda t: isinstance(t, (Int, Float)),
    "integer": lambda t: isinstance(t, Int),
    "compound": lambda t: isinstance(t, Compound),
    "callable": lambda t: isinstance(t, (Atom, Compound)),
    "is_callable": lambda t: isinstance(t, (Atom, Compound)),
    "qualified": _is_qualified,
}


def check_guard(guard: Term, bindings: dict) -> bool:
    g = guard
    if isinstance(g, Atom) and g.name in ("true", "fail", "false"):
        return g.name == "true"
    if not isinstance(g, Compound):
        raise RuleError(f"unsupported guard {write_term(guard)}")
    if g.functor == "\\+" and len(g.args) == 1:
        return not check_guard(g.args[0], bindings)
    if g.functor in ("==", "\\==") and len(g.args) == 2:
        same = substitute(g.args[0], bindings) == substitute(g.args[1], bindings)
        return same if g.functor == "==" else not same
    if g.functor == "," and len(g.args) == 2:
        return check_guard(g.args[0], bindings) and check_guard(g.args[1], bindings)
    if g.functor == ";" and len(g.args) == 2:
        return check_guard(g.args[0], bindings) or check_guard(g.args[1], bindings)
    test = _TYPE_TESTS.get(g.functor)
    if test is None or len(g.args) != 1:
        raise RuleError(f"unsupported guard {write_term(guard)}")
    return test(substitute(g.args[0], bindings))


def _try_rule(rule: RewriteRule, t: Term) -> list[Term] | None:
    b = match(rule.pattern, t)
    if b is None:
        return None
    if not all(check_guard(g, b) for g in rule.guards):
        return None
    return [substitute(tp, b, t.pos) for tp in rule.template]


# -- application ------------------------------------------------------------

# control constructs whose listed argument positions are goals
META_ARGS = {
    (",", 2): (0, 1), (";", 2): (0, 1), ("->", 2): (0, 1), ("*->", 2): (0, 1),
    ("\\+", 1): (0,), ("call", 1): (0,), ("once", 1): (0,), ("ignore", 1): (0,),
    ("findall", 3): (1,), ("findall", 4): (1,), ("forall", 2): (0, 1),
    ("catch", 3): (0, 2),
}


class _Engine:
    def __init__(self, rules, declared_dialect):
        active = [r for r in rules if r.active(declared_dialect)]
        self.term_rules = [r for r in active if r.kind == "term"]
        self.goal_rules = [r for r in active if r.kind == "goal"]
        self.fired: list[str] = []

    def goal(self, g: Term) -> Term:
        fuel = FUEL
        while True:
            for rule in self.goal_rules:
                out = _try_rule(rule, g)
                if out is not None:
                    if len(out) != 1:
                        raise RuleError(f"goal rule {rule.id} must emit exactly one goal")
                    self.fired.append(rule.id)
                    g = out[0]
                    break
            else:
                break
            fuel -= 1
            if fuel <= 0:
                raise RuleLoop(f"goal rewriting did not terminate within {FUEL} steps "
                               f"(last rule {self.fired[-1]})", g.pos)
        return self.inside(g)

    def inside(self, g: Term) -> Term:
        if not isinstance(g, Compound):
            return g
        key = (g.functor, len(g.args))
        positions = META_ARGS.get(key)
        if positions is None and g.functor == "call":
            positions = (0,)
        if positions is None:
            return g
        args = list(g.args)
        changed = False
        for i in positions:
            new = self.goal(args[i])
            if new is not args[i]:
                args[i] = new
                changed = True
        return Compound(g.functor, tuple(args), g.pos) if changed else g

    def clause(self, t: Term) -> Term:
        if not self.goal_rules or not isinstance(t, Compound):
            return t
        if t.functor == ":-" and len(t.args) == 2:
            body = self.goal(t.args[1])
            if body is not t.args[1]:
                return Compound(":-", (t.args[0], body), t.pos)
        elif t.functor in (":-", "?-") and len(t.args) == 1:
            body = self.goal(t.args[0])
            if body is not t.args[0]:
                return Compound(t.functor, (body,), t.pos)
        return t

    def run(self, t: Term) -> list[Term]:
        terms = [t]
        for rule in self.term_rules:
            out = _try_rule(rule, t)
            if out is not None:
                self.fired.append(rule.id)
                terms = out
                break
        return [self.clause(x) for x in terms]


def apply_rules_traced(t: Term, ctx, rules) -> tuple[list[Term], list[str]]:
    """Like :func:`apply_rules` but also report the ids of rules that fired."""
    engine = _Engine(rules, getattr(ctx, "declared_dialect", None))
    out = engine.run(t)
    return out, engine.fired


def apply_rules(t: Term, ctx, rules) -> list[Term]:
    """Rewrite one clause; returns ``[t]`` when no rule applies."""
    return apply_rules_traced(t, ctx, rules)[0]


# -- validation -------------------------------------------------------------

@dataclass(frozen=True)
class RuleFinding:
    rule_id: str
    message: str

    def __str__(self):
        return f"{self.rule_id}: {self.message}"


def validate_rules(rules) -> list[RuleFinding]:
    """Report unbound template variables, duplicate ids and self-looping rules."""
    findings = []
    seen = set()
    for rule in rules:
        if rule.id in seen:
            findings.append(RuleFinding(rule.id, "duplicate id"))
        seen.add(rule.id)
        pattern_vars = {v.name for v in variables(rule.pattern)}
        for tp in rule.template:
            for v in variables(tp):
                if v.name != "_" and v.name not in pattern_vars:
                    findings.append(RuleFinding(rule.id, f"unbound template variable {v.name}"))
        for g in rule.guards:
            try:
                check_guard(g, {})
            except RuleError as e:
                findings.append(RuleFinding(rule.id, e.message))
        if rule.kind == "goal" and len(rule.template) == 1:
            b = match(rule.pattern, rule.template[0])
            if b is not None:
                try:
                    fires = all(check_guard(g, b) for g in rule.guards)
                except RuleError:
                    fires = False
                if fires:
                    findings.append(RuleFinding(rule.id, "self-loop: output matches the rule again"))
    return findings


# -- rule files -------------------------------------------------------------

def _split_top_level(tokens: list[Token], sep: str) -> list[list[Token]]:
    runs, cur, depth = [], [], 0
    for tok in tokens:
        if tok.kind == "punct" and tok.value in "([{":
            depth += 1
        elif tok.kind == "punct" and tok.value in ")]}":
            depth -= 1
        if depth == 0 and tok.kind == "name" and tok.value == sep:
            runs.append(cur)
            cur = []
            continue
        cur.append(tok)
    runs.append(cur)
    return runs


def _parse_terms(text: str, pos: SourcePos, split_on: str | None) -> list[Term]:
    toks = tokenize(text, pos)
    if toks and toks[-1].kind == "end":
        toks = toks[:-1]
    runs = _split_top_level(toks, split_on) if split_on else [toks]
    out = []
    for run in runs:
        if not run:
            raise RuleFileError("empty term", pos)
        end = Token("end", ".", run[-1].end, run[-1].end, run[-1].pos, True)
        out.append(read_term(run + [end]))
    return out


def parse_rules(text: str, file: str = "<rules>") -> list[RewriteRule]:
    rules: list[RewriteRule] = []
    stanza: list[tuple[int, str]] = []

    def flush():
        if stanza:
            rules.append(_parse_stanza(stanza, file))
            stanza.clear()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if line.lstrip().startswith("%"):
            continue
        if not line.strip():
            flush()
            continue
        if line[0].isspace() and stanza:
            n, prev = stanza[-1]
            stanza[-1] = (n, prev + " " + line.strip())
        else:
            stanza.append((lineno, line.strip()))
    flush()
    return rules


def _parse_stanza(lines: list[tuple[int, str]], file: str) -> RewriteRule:
    lineno, header = lines[0]
    parts = header.split()
    if not parts or parts[0] != "rule" or len(parts) < 2:
        raise RuleFileError(f"{file}:{lineno}: stanza must start with 'rule <id>'")
    rule_id = parts[1]
    kind, dialect, enabled = "goal", None, True
    for word in parts[2:]:
        if word in ("term", "goal"):
            kind = word
        elif word.startswith("dialect="):
            dialect = word.split("=", 1)[1]
        elif word == "disabled":
            enabled = False
        else:
            raise RuleFileError(f"{file}:{lineno}: unexpected {word!r} in rule header")
    fields: dict[str, tuple[int, str]] = {}
    for n, line in lines[1:]:
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep or key not in ("match", "where", "emit"):
            raise RuleFileError(f"{file}:{n}: expected 'match:', 'where:' or 'emit:'")
        if key in fields:
            raise RuleFileError(f"{file}:{n}: duplicate '{key}:' line")
        fields[key] = (n, value.strip())
    if "match" not in fields or "emit" not in fields:
        raise RuleFileError(f"{file}:{lineno}: rule {rule_id} needs 'match:' and 'emit:'")
    try:
        n, text = fields["match"]
        pattern = _parse_terms(text, SourcePos(file, n, 1), None)[0]
        n, text = fields["emit"]
        template = _parse_terms(text, SourcePos(file, n, 1), ";")
        guards: list[Term] = []
        if "where" in fields:
            n, text = fields["where"]
            if text:
                guards = conjuncts(_parse_terms(text, SourcePos(file, n, 1), None)[0])
    except SyntaxErrorBase as e:
        raise RuleFileError(f"{file}: rule {rule_id}: {e}") from None
    return RewriteRule(rule_id, kind, pattern, tuple(template), tuple(guards), dialect,
                       enabled, f"{file}:{lineno}")


def load_rules(path) -> list[RewriteRule]:
    path = Path(path)
    return parse_rules(path.read_text(encoding="utf-8"), str(path))


def shipped_rules(dialect: str) -> list[RewriteRule]:
    """Rules shipped for emulating ``dialect`` on another host (may be empty)."""
    path = SHIPPED_RULES / f"{dialect}.rules"
    return load_rules(path) if path.is_file() else []


def all_shipped_rules() -> list[RewriteRule]:
    out = []
    for path in sorted(SHIPPED_RULES.glob("*.rules")):
        out.extend(load_rules(path))
    return out


# -- block directives -------------------------------------------------------

BLOCK_SUFFIX = "__blocked__"


@dataclass(frozen=True)
class BlockSpec:
    predicate: tuple[str, int]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        for row in self.rows:
            if len(row) != self.predicate[1]:
                raise ArityMismatch(f"block row arity differs for {self.predicate[0]}")
            if "minus" not in row:
                raise NoMinus(f"block row for {self.predicate[0]}/{self.predicate[1]} "
                              f"has no '-' position")

    @property
    def internal_name(self) -> str:
        return self.predicate[0] + BLOCK_SUFFIX


def is_block_directive(t: Term) -> bool:
    return (isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 1
            and isinstance(t.args[0], Compound) and t.args[0].functor == "block"
            and len(t.args[0].args) == 1)


def block_specs(d: Term) -> list[BlockSpec]:
    """Group the rows of a ``:- block`` directive by predicate, in order of appearance."""
    if is_block_directive(d):
        d = d.args[0]
    if not (isinstance(d, Compound) and d.functor == "block" and len(d.args) == 1):
        raise RuleError("expected ':- block Spec'", getattr(d, "pos", None))
    rows: dict[tuple[str, int], list[tuple[str, ...]]] = {}
    for spec in conjuncts(d.args[0]):
        if isinstance(spec, Atom):
            raise NoMinus(f"block spec {spec.name} has no arguments", spec.pos)
        if not isinstance(spec, Compound):
            raise RuleError("block spec must be a callable term", spec.pos)
        row = []
        for a in spec.args:
            if a == Atom("-"):
                row.append("minus")
            elif a == Atom("?"):
                row.append("question")
            else:
                raise RuleError(f"block spec argument must be '-' or '?', "
                                f"not {write_term(a)}", spec.pos)
        if "minus" not in row:
            raise NoMinus(f"block spec {write_term(spec)} has no '-' position", spec.pos)
        rows.setdefault(spec.indicator, []).append(tuple(row))
    return [BlockSpec(pi, tuple(r)) for pi, r in rows.items()]


def _arg_names(n: int) -> list[str]:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if n <= len(letters):
        return list(letters[:n])
    return [f"A{i}" for i in range(1, n + 1)]


def _right_nest(op: str, items: list[Term]) -> Term:
    out = items[-1]
    for item in reversed(items[:-1]):
        out = Compound(op, (item, out))
    return out


def block_condition(spec: BlockSpec, args: list[Term]) -> Term:
    """Conjunction over rows of the disjunction of nonvar/1 on that row's '-' positions."""
    row_conds = []
    for row in spec.rows:
        tests = [Compound("nonvar", (args[i],)) for i, m in enumerate(row) if m == "minus"]
        row_conds.append(_right_nest(";", tests))
    return _right_nest(",", row_conds)


def block_wrapper(spec: BlockSpec, pos: SourcePos | None = None) -> Term:
    name, arity = spec.predicate
    args = [Var(n) for n in _arg_names(arity)]
    head = Compound(name, tuple(args), pos)
    inner = Compound(spec.internal_name, tuple(args))
    body = Compound("when", (block_condition(spec, args), inner))
    return Compound(":-", (head, body), pos)


def rename_blocked_clause(clause: Term, spec: BlockSpec) -> Term:
    head, body = clause, None
    if isinstance(clause, Compound) and clause.functor == ":-" and len(clause.args) == 2:
        head, body = clause.args
    new_head = Compound(spec.internal_name, head.args, head.pos)
    if body is None:
        return Compound(new_head.functor, new_head.args, clause.pos)
    return Compound(":-", (new_head, body), clause.pos)


def clause_head(t: Term) -> Term:
    if isinstance(t, Compound) and t.functor == ":-" and len(t.args) == 2:
        return t.args[0]
    return t


def compile_block_directive(d: Term, clauses) -> list[Term]:
    """Translate a block declaration plus its clauses into a when/2 wrapper and renamed clauses."""
    specs = {s.predicate: s for s in block_specs(d)}
    names = {pi[0]: pi for pi in specs}
    out = [block_wrapper(s, getattr(d, "pos", None)) for s in specs.values()]
    for c in clauses:
        pi = indicator_of(clause_head(c))
        if pi is None:
            raise RuleError("clause head is not callable", getattr(c, "pos", None))
        if pi not in specs:
            if pi[0] in names:
                raise ArityMismatch(f"clause for {pi[0]}/{pi[1]} does not match block "
                                    f"declaration {pi[0]}/{names[pi[0]][1]}", c.pos)
            raise RuleError(f"clause for {pi[0]}/{pi[1]} is not covered by the block "
                            f"declaration", c.pos)
        out.append(rename_blocked_clause(c, specs[pi]))
    return out
