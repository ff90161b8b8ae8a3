"""Static evaluation of ``:- if(Goal)`` conditions against a dialect profile.

Only a closed set of goals is understood: ``true``, ``fail``/``false``,
conjunction, disjunction, negation, ``current_prolog_flag/2``,
``current_predicate/1,2``, ``prolog_load_context/2`` and ``catch/3`` feature
probes. Anything else evaluates to ``unknown``.

A static tool cannot run ``catch(member(a, [a]), _, fail)``; the probe is
taken to succeed exactly when the guarded goal's predicate is in the
dialect's catalog.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .dialects import DialectStore
from .errors import NonGroundCondition, PolicyError, UnknownDialect
from .terms import Atom, Compound, Int, Term, Var, indicator_of, is_ground, strip_module
from .writer import write_term

POLICIES = ("error", "assume_false_warn")


class TriBool(enum.Enum):
    FALSE = 0
    UNKNOWN = 1
    TRUE = 2

    def __and__(self, other: "TriBool") -> "TriBool":
        return TriBool(min(self.value, other.value))

    def __or__(self, other: "TriBool") -> "TriBool":
        return TriBool(max(self.value, other.value))

    def __invert__(self) -> "TriBool":
        return TriBool(2 - self.value)

    def __str__(self):
        return self.name.lower()

    @classmethod
    def of(cls, b: bool) -> "TriBool":
        return cls.TRUE if b else cls.FALSE


@dataclass(frozen=True)
class EvalContext:
    dialect: str
    profiles: DialectStore
    load_context: dict = field(default_factory=dict)
    unknown_policy: str = "assume_false_warn"

    def __post_init__(self):
        if self.dialect not in self.profiles:
            raise UnknownDialect(f"unknown dialect {self.dialect!r}")
        if self.unknown_policy not in POLICIES:
            raise ValueError(f"unknown_policy must be one of {POLICIES}")
        if "dialect" not in self.load_context:
            lc = dict(self.load_context)
            lc["dialect"] = Atom(self.dialect)
            object.__setattr__(self, "load_context", lc)

    def with_load_context(self, **updates) -> "EvalContext":
        lc = dict(self.load_context)
        lc.update(updates)
        return EvalContext(self.dialect, self.profiles, lc, self.unknown_policy)


@dataclass
class Trace:
    goal: Term
    result: TriBool
    note: str = ""
    children: list["Trace"] = field(default_factory=list)
    warning: str | None = None

    def leaves(self) -> list["Trace"]:
        if not self.children:
            return [self]
        out = []
        for c in self.children:
            out.extend(c.leaves())
        return out

    def render(self, indent: int = 0) -> str:
        line = "  " * indent + f"{write_term(self.goal)} => {self.result}"
        if self.note:
            line += f"  [{self.note}]"
        if self.warning:
            line += f"  WARNING: {self.warning}"
        return "\n".join([line] + [c.render(indent + 1) for c in self.children])


def _pi_term(t: Term) -> tuple[str, int] | None:
    _, t = strip_module(t)
    if isinstance(t, Compound) and t.functor == "/" and len(t.args) == 2:
        # M:N/A reads as (M:N)/A since ':' binds tighter than '/'
        _, name = strip_module(t.args[0])
        arity = t.args[1]
        if isinstance(name, Atom) and isinstance(arity, Int) and arity.value >= 0:
            return (name.name, arity.value)
    return None


def _require_ground(t: Term, g: Term):
    if not is_ground(t):
        raise NonGroundCondition(f"condition is not ground: {write_term(g)}", g.pos)


def _explain(g: Term, ctx: EvalContext) -> Trace:
    store = ctx.profiles
    d = ctx.dialect
    if isinstance(g, Var):
        raise NonGroundCondition("condition is an unbound variable", g.pos)
    if isinstance(g, Atom):
        if g.name == "true":
            return Trace(g, TriBool.TRUE)
        if g.name in ("fail", "false"):
            return Trace(g, TriBool.FALSE)
        return Trace(g, TriBool.UNKNOWN, "outside the evaluable subset")
    if not isinstance(g, Compound):
        return Trace(g, TriBool.UNKNOWN, "not a callable goal")
    name, args = g.functor, g.args
    arity = len(args)
    if name == "," and arity == 2:
        left, right = _explain(args[0], ctx), _explain(args[1], ctx)
        return Trace(g, left.result & right.result, "", [left, right])
    if name == ";" and arity == 2:
        left, right = _explain(args[0], ctx), _explain(args[1], ctx)
        return Trace(g, left.result | right.result, "", [left, right])
    if name == "\\+" and arity == 1:
        inner = _explain(args[0], ctx)
        return Trace(g, ~inner.result, "", [inner])
    if name == "current_prolog_flag" and arity == 2:
        flag, value = args
        if not isinstance(flag, Atom):
            raise NonGroundCondition("current_prolog_flag/2 needs an atom flag name", g.pos)
        actual = store.flag(d, flag.name)
        if actual is None:
            return Trace(g, TriBool.UNKNOWN, f"flag {flag.name} not in the {d} flag table")
        if isinstance(value, Var):
            return Trace(g, TriBool.TRUE, f"flag {flag.name} is defined")
        _require_ground(value, g)
        return Trace(g, TriBool.of(actual == value), f"{d} flag {flag.name} = {write_term(actual)}")
    if name == "current_predicate" and arity in (1, 2):
        if arity == 1:
            _require_ground(args[0], g)
            pi = _pi_term(args[0])
            if pi is None:
                return Trace(g, TriBool.UNKNOWN, "argument is not a predicate indicator")
        else:
            _, head = strip_module(args[1])
            pi = indicator_of(head)
            if pi is None or not isinstance(args[0], Atom) or pi[0] != args[0].name:
                raise NonGroundCondition("current_predicate/2 needs Name and a callable head", g.pos)
        found = store.has_predicate(d, pi)
        return Trace(g, TriBool.of(found), f"catalog lookup {pi[0]}/{pi[1]}")
    if name == "prolog_load_context" and arity == 2:
        key, value = args
        if not isinstance(key, Atom):
            raise NonGroundCondition("prolog_load_context/2 needs an atom key", g.pos)
        if key.name not in ctx.load_context:
            return Trace(g, TriBool.UNKNOWN, f"load context has no key {key.name}")
        actual = ctx.load_context[key.name]
        if isinstance(value, Var):
            return Trace(g, TriBool.TRUE, f"load context defines {key.name}")
        _require_ground(value, g)
        return Trace(g, TriBool.of(actual == value), f"load context {key.name} = {write_term(actual)}")
    if name == "catch" and arity == 3:
        guarded, _, recovery = args
        _, goal = strip_module(guarded)
        pi = indicator_of(goal)
        if pi is None:
            raise NonGroundCondition("catch/3 probe goal must be callable", g.pos)
        if store.has_predicate(d, pi):
            return Trace(g, TriBool.TRUE,
                         f"probe approximated by catalog membership {pi[0]}/{pi[1]}")
        rec = _explain(recovery, ctx)
        return Trace(g, rec.result, f"{pi[0]}/{pi[1]} absent from catalog; recovery goal used",
                     [rec])
    _require_ground(g, g)
    return Trace(g, TriBool.UNKNOWN, "outside the evaluable subset")


def evaluate(g: Term, ctx: EvalContext) -> TriBool:
    """Three-valued result of a condition.

    Under the ``error`` policy an unknown result raises PolicyError; under
    ``assume_false_warn`` it is returned as ``UNKNOWN`` for the caller to
    treat as false.
    """
    result = _explain(g, ctx).result
    if result is TriBool.UNKNOWN and ctx.unknown_policy == "error":
        raise PolicyError(f"cannot decide condition {write_term(g)} for {ctx.dialect}", g.pos)
    return result


def explain(g: Term, ctx: EvalContext) -> Trace:
    """Evaluation tree mirroring :func:`evaluate`, with the unknown policy applied at the root."""
    trace = _explain(g, ctx)
    if trace.result is not TriBool.UNKNOWN:
        return trace
    if ctx.unknown_policy == "error":
        raise PolicyError(f"cannot decide condition {write_term(g)} for {ctx.dialect}", g.pos)
    for leaf in trace.leaves():
        if leaf.result is TriBool.UNKNOWN:
            leaf.warning = "undecidable statically; treated as absent"
    return Trace(g, TriBool.FALSE, "unknown treated as false (assume_false_warn)", [trace])
