"""Operator definitions and immutable operator tables."""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

from .errors import BadName, BadPriority, BadType
from .terms import Atom, Compound, Int, Term, list_items, strip_module

PREFIX_TYPES = ("fy", "fx")
INFIX_TYPES = ("xfx", "xfy", "yfx")
POSTFIX_TYPES = ("xf", "yf")
OP_TYPES = PREFIX_TYPES + INFIX_TYPES + POSTFIX_TYPES


def fixity_class(op_type: str) -> str:
    if op_type in PREFIX_TYPES:
        return "prefix"
    if op_type in INFIX_TYPES:
        return "infix"
    if op_type in POSTFIX_TYPES:
        return "postfix"
    raise BadType(f"not an operator type: {op_type}")


@dataclass(frozen=True)
class OperatorDef:
    priority: int
    type: str
    name: str

    def __post_init__(self):
        if not 1 <= self.priority <= 1200:
            raise BadPriority(f"operator priority {self.priority} outside 1..1200")
        if self.type not in OP_TYPES:
            raise BadType(f"not an operator type: {self.type}")

    @property
    def fixity(self) -> str:
        return fixity_class(self.type)

    def arg_priorities(self) -> tuple[int, ...]:
        """Maximum priorities for the operand(s), left to right."""
        p = self.priority
        t = self.type
        if t == "fy":
            return (p,)
        if t == "fx":
            return (p - 1,)
        if t == "xf":
            return (p - 1,)
        if t == "yf":
            return (p,)
        left = p if t == "yfx" else p - 1
        right = p if t == "xfy" else p - 1
        return (left, right)


class OperatorTable:
    """Mapping (name, fixity class) -> OperatorDef.

    Updates return new tables; an instance never changes after construction.
    """

    __slots__ = ("_ops", "_prefix", "_infix", "_postfix")

    def __init__(self, defs=()):
        ops = {}
        for d in defs:
            ops[(d.name, d.fixity)] = d
        self._ops = MappingProxyType(ops)
        self._prefix = {n: d for (n, c), d in ops.items() if c == "prefix"}
        self._infix = {n: d for (n, c), d in ops.items() if c == "infix"}
        self._postfix = {n: d for (n, c), d in ops.items() if c == "postfix"}

    def prefix(self, name: str) -> OperatorDef | None:
        return self._prefix.get(name)

    def infix(self, name: str) -> OperatorDef | None:
        return self._infix.get(name)

    def postfix(self, name: str) -> OperatorDef | None:
        return self._postfix.get(name)

    def is_op(self, name: str) -> bool:
        return name in self._prefix or name in self._infix or name in self._postfix

    def lookup(self, name: str, fixity: str) -> OperatorDef | None:
        return self._ops.get((name, fixity))

    def add(self, priority: int, op_type: str, name: str) -> "OperatorTable":
        """Return a table with the definition added; priority 0 removes it."""
        cls = fixity_class(op_type)
        ops = dict(self._ops)
        if priority == 0:
            ops.pop((name, cls), None)
        else:
            ops[(name, cls)] = OperatorDef(priority, op_type, name)
        return OperatorTable(ops.values())

    def merge(self, other: "OperatorTable") -> "OperatorTable":
        ops = dict(self._ops)
        ops.update(other._ops)
        return OperatorTable(ops.values())

    def __iter__(self):
        return iter(sorted(self._ops.values(), key=lambda d: (-d.priority, d.name, d.type)))

    def __len__(self):
        return len(self._ops)

    def __eq__(self, other):
        return isinstance(other, OperatorTable) and dict(self._ops) == dict(other._ops)

    def __hash__(self):
        return hash(frozenset(self._ops.items()))

    def __repr__(self):
        return f"OperatorTable({len(self._ops)} ops)"


_ISO_OPS = [
    (1200, "xfx", [":-", "-->"]),
    (1200, "fx", [":-", "?-"]),
    (1100, "xfy", [";"]),
    (1050, "xfy", ["->"]),
    (1000, "xfy", [","]),
    (900, "fy", ["\\+"]),
    (700, "xfx", ["=", "\\=", "==", "\\==", "@<", "@>", "@=<", "@>=",
                  "=..", "is", "=:=", "=\\=", "<", ">", "=<", ">="]),
    (500, "yfx", ["+", "-", "/\\", "\\/"]),
    (400, "yfx", ["*", "/", "//", "rem", "mod", "div", "<<", ">>"]),
    (200, "xfx", ["**"]),
    (200, "xfy", ["^"]),
    (200, "fy", ["-", "+", "\\"]),
]

# Declaration prefix operators present in all four Edinburgh-family targets;
# without them ordinary directives such as ':- dynamic foo/1' do not read.
_DECLARATION_OPS = [
    (1150, "fx", ["dynamic", "discontiguous", "initialization", "meta_predicate",
                  "module_transparent", "multifile", "public", "thread_local"]),
    (200, "xfy", [":"]),
    (200, "xfx", ["@"]),
]


def _build(groups) -> OperatorTable:
    return OperatorTable(OperatorDef(p, t, n) for p, t, names in groups for n in names)


DEFAULT_TABLE = _build(_ISO_OPS + _DECLARATION_OPS)
ISO_TABLE = _build(_ISO_OPS)


def default_table() -> OperatorTable:
    return DEFAULT_TABLE


def _op_names(name_arg: Term) -> list[str]:
    if isinstance(name_arg, Atom) and name_arg.name != "[]":
        names = [name_arg]
    else:
        items, tail = list_items(name_arg)
        if tail != Atom("[]") or (not items and name_arg != Atom("[]")):
            raise BadName(f"operator name must be an atom or list of atoms")
        names = items
    out = []
    for n in names:
        _, n = strip_module(n)
        if not isinstance(n, Atom):
            raise BadName("operator name must be an atom")
        if n.name in (",",):
            raise BadName("cannot modify the ',' operator")
        if n.name == "|":
            raise BadName("'|' cannot be declared as an operator")
        out.append(n.name)
    return out


def apply_op_directive(table: OperatorTable, d: Term) -> OperatorTable:
    """Apply ``op(P, T, N)`` (or ``:- op(...)``) to a table, returning the new table.

    Module qualifications on names (``user:(===)``) are ignored for the
    purposes of parsing: the table models a single operator namespace.
    """
    if isinstance(d, Compound) and d.functor == ":-" and len(d.args) == 1:
        d = d.args[0]
    _, d = strip_module(d)
    if not (isinstance(d, Compound) and d.functor == "op" and len(d.args) == 3):
        raise BadType("expected op(Priority, Type, Name)", getattr(d, "pos", None))
    pri, typ, name = d.args
    if not isinstance(pri, Int) or not 0 <= pri.value <= 1200:
        raise BadPriority(f"bad operator priority in op/3", d.pos)
    if not isinstance(typ, Atom) or typ.name not in OP_TYPES:
        raise BadType(f"bad operator type in op/3", d.pos)
    try:
        names = _op_names(name)
    except BadName as e:
        raise BadName(e.message, d.pos) from None
    for n in names:
        table = table.add(pri.value, typ.name, n)
    return table
