"""Prolog term values.

Terms are immutable and compare structurally; source positions ride along
but never take part in equality or hashing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union


@dataclass(frozen=True, order=True)
class SourcePos:
    file: str
    line: int
    column: int

    def __post_init__(self):
        if self.line < 1 or self.column < 1:
            raise ValueError(f"invalid source position {self.line}:{self.column}")

    def __str__(self):
        return f"{self.file}:{self.line}:{self.column}"


@dataclass(frozen=True, slots=True)
class Atom:
    name: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        first = self.name[:1]
        if not first or not (first == "_" or first.isupper()):
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True, slots=True)
class Int:
    value: int
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Float:
    value: float
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Str:
    value: str
    pos: SourcePos | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True, slots=True)
class Compound:
    functor: str
    args: tuple
    pos: SourcePos | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))
        if not self.args:
            raise ValueError("compound terms need at least one argument")

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def indicator(self) -> tuple[str, int]:
        return (self.functor, len(self.args))


Term = Union[Atom, Var, Int, Float, Str, Compound]

NIL = Atom("[]")
TRUE = Atom("true")


def mk(functor: str, *args) -> Term:
    """Build a term, coercing Python str/int/float arguments.

    Strings starting with an uppercase letter or ``_`` become variables,
    other strings atoms.
    """
    if not args:
        return Atom(functor)
    return Compound(functor, tuple(_coerce(a) for a in args))


def _coerce(x) -> Term:
    if isinstance(x, (Atom, Var, Int, Float, Str, Compound)):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not terms")
    if isinstance(x, int):
        return Int(x)
    if isinstance(x, float):
        return Float(x)
    if isinstance(x, str):
        if x[:1] == "_" or x[:1].isupper():
            return Var(x)
        return Atom(x)
    if isinstance(x, (list, tuple)):
        return make_list([_coerce(e) for e in x])
    raise TypeError(f"cannot convert {x!r} to a term")


def make_list(items, tail: Term = NIL) -> Term:
    result = tail
    for item in reversed(list(items)):
        result = Compound(".", (item, result))
    return result


def list_items(t: Term) -> tuple[list[Term], Term]:
    """Split a (possibly partial) list into its elements and tail."""
    items = []
    while isinstance(t, Compound) and t.functor == "." and len(t.args) == 2:
        items.append(t.args[0])
        t = t.args[1]
    return items, t


def is_list(t: Term) -> bool:
    return list_items(t)[1] == NIL


def is_callable(t: Term) -> bool:
    return isinstance(t, (Atom, Compound))


def indicator_of(t: Term) -> tuple[str, int] | None:
    if isinstance(t, Atom):
        return (t.name, 0)
    if isinstance(t, Compound):
        return (t.functor, len(t.args))
    return None


def strip_module(t: Term) -> tuple[Term | None, Term]:
    """Peel ``M:G`` qualifications, returning the innermost module and goal."""
    module = None
    while isinstance(t, Compound) and t.functor == ":" and len(t.args) == 2:
        module, t = t.args
    return module, t


def conjuncts(t: Term) -> list[Term]:
    out = []
    while isinstance(t, Compound) and t.functor == "," and len(t.args) == 2:
        out.append(t.args[0])
        t = t.args[1]
    out.append(t)
    return out


def variables(t: Term) -> Iterator[Var]:
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            yield t
        elif isinstance(t, Compound):
            stack.extend(reversed(t.args))


def is_ground(t: Term) -> bool:
    return next(variables(t), None) is None


def with_pos(t: Term, pos: SourcePos | None) -> Term:
    if isinstance(t, Compound):
        return Compound(t.functor, t.args, pos)
    return type(t)(t.value if not isinstance(t, (Atom, Var)) else t.name, pos)


def format_indicator(pi: tuple[str, int]) -> str:
    from .writer import format_atom

    return f"{format_atom(pi[0])}/{pi[1]}"


def parse_indicator(text: str) -> tuple[str, int]:
    name, sep, arity = text.strip().rpartition("/")
    if not sep or not name or not arity.isdigit():
        raise ValueError(f"malformed predicate indicator {text!r}")
    if len(name) >= 2 and name[0] == "'" and name[-1] == "'":
        name = name[1:-1].replace("''", "'").replace("\\\\", "\\")
    return name, int(arity)
