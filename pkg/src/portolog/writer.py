"""Canonical term writer.

Output re-reads to the same term under the same operator table. Spaces are
emitted only where two tokens would otherwise merge, so argument commas are
never followed by a space (``term(a,b)``).
"""
from __future__ import annotations

import math
import re

from .lexer import SYMBOL_CHARS
from .ops import OperatorTable, default_table
from .terms import Atom, Compound, Float, Int, Str, Term, Var, list_items

_LETTER_ATOM = re.compile(r"[^\W\d_]\w*")
_SOLO = frozenset(["[]", "{}", "!", ";"])


def atom_needs_quotes(name: str) -> bool:
    if name in _SOLO:
        return False
    if not name:
        return True
    c = name[0]
    if _LETTER_ATOM.fullmatch(name):
        return c.isupper()
    if all(ch in SYMBOL_CHARS for ch in name):
        return name == "." or "/*" in name
    return True


def _quote(text: str, q: str) -> str:
    out = [q]
    for ch in text:
        if ch == q or ch == "\\":
            out.append("\\" + ch)
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\x{ord(ch):x}\\")
        else:
            out.append(ch)
    out.append(q)
    return "".join(out)


def format_atom(name: str, quoted: bool = True) -> str:
    if quoted and atom_needs_quotes(name):
        return _quote(name, "'")
    return name


def format_float(x: float) -> str:
    if math.isnan(x):
        return "1.5NaN"
    if math.isinf(x):
        return "1.0Inf" if x > 0 else "-1.0Inf"
    text = repr(x)
    if "e" in text and "." not in text.split("e")[0]:
        mant, exp = text.split("e")
        text = f"{mant}.0e{exp}"
    return text


def _alnum(c: str) -> bool:
    return c.isalnum() or c == "_"


def _glue(a: str, b: str) -> bool:
    """True when ``a`` immediately followed by ``b`` would lex differently."""
    x, y = a[-1], b[0]
    if _alnum(x) and _alnum(y):
        return True
    if x in SYMBOL_CHARS and y in SYMBOL_CHARS:
        return True
    if x == y and x in "'\"`":
        return True
    if x.isdigit() and y in "'\"`":
        return True
    return False


def _cat(*parts: str) -> str:
    out = parts[0]
    for p in parts[1:]:
        if out and p and _glue(out, p):
            out = out + " " + p
        else:
            out = out + p
    return out


class _Writer:
    def __init__(self, table: OperatorTable, quoted: bool):
        self.table = table
        self.quoted = quoted

    def atom(self, name: str) -> str:
        return format_atom(name, self.quoted)

    def operand_atom(self, name: str) -> str:
        text = self.atom(name)
        if self.table.is_op(name):
            return "(" + text + ")"
        return text

    def write(self, t: Term, max_prec: int = 1200) -> str:
        if isinstance(t, Atom):
            return self.atom(t.name)
        if isinstance(t, Var):
            return t.name
        if isinstance(t, Int):
            return str(t.value)
        if isinstance(t, Float):
            return format_float(t.value)
        if isinstance(t, Str):
            return _quote(t.value, '"') if self.quoted else t.value
        return self.compound(t, max_prec)

    def operand(self, t: Term, max_prec: int) -> str:
        if isinstance(t, Atom) and self.table.is_op(t.name):
            return self.operand_atom(t.name)
        return self.write(t, max_prec)

    def canonical(self, t: Compound) -> str:
        args = ",".join(self.write(a, 999) for a in t.args)
        name = t.functor
        functor = _quote(name, "'") if name in ("[]", "{}") else self.atom(name)
        return functor + "(" + args + ")"

    def compound(self, t: Compound, max_prec: int) -> str:
        name = t.functor
        arity = len(t.args)
        if name == "." and arity == 2:
            items, tail = list_items(t)
            body = ",".join(self.write(a, 999) for a in items)
            if tail != Atom("[]"):
                body += "|" + self.write(tail, 999)
            return "[" + body + "]"
        if name == "{}" and arity == 1:
            return "{" + self.write(t.args[0], 1200) + "}"
        table = self.table
        if arity == 2:
            op = table.infix(name)
            if op is not None:
                lmax, rmax = op.arg_priorities()
                left = self.operand(t.args[0], lmax)
                right = self.operand(t.args[1], rmax)
                opname = "," if name == "," else self.atom(name)
                text = _cat(left, opname, right)
                if op.priority > max_prec:
                    return "(" + text + ")"
                return text
        elif arity == 1:
            op = table.prefix(name)
            if op is not None:
                arg = t.args[0]
                if isinstance(arg, Atom) and table.is_op(arg.name):
                    return self.canonical(t)
                if name in ("-", "+") and isinstance(arg, (Int, Float)):
                    return self.canonical(t)
                (amax,) = op.arg_priorities()
                inner = self.write(arg, amax)
                opname = self.atom(name)
                if inner[0] == "(" or (name in ("-", "+") and inner[0].isdigit()):
                    text = opname + " " + inner
                else:
                    text = _cat(opname, inner)
                if op.priority > max_prec:
                    return "(" + text + ")"
                return text
            op = table.postfix(name)
            if op is not None:
                (amax,) = op.arg_priorities()
                text = _cat(self.operand(t.args[0], amax), self.atom(name))
                if op.priority > max_prec:
                    return "(" + text + ")"
                return text
        return self.canonical(t)


def write_term(t: Term, table: OperatorTable | None = None, quoted: bool = True) -> str:
    """Render ``t`` using operator notation where the table allows it."""
    return _Writer(table or default_table(), quoted).write(t, 1200)


def format_clause(t: Term, table: OperatorTable | None = None) -> str:
    """Render a clause followed by its terminating full stop."""
    text = write_term(t, table, quoted=True)
    if text[-1] in SYMBOL_CHARS:
        return text + " ."
    return text + "."
