"""Operator-precedence reader for ISO-core Prolog clauses."""
from __future__ import annotations

import sys
from dataclasses import dataclass
from typing import Iterator

from .errors import OperatorClash, PriorityOverflow, SyntaxErrorBase
from .lexer import Token, split_clauses, tokenize
from .ops import OperatorTable, default_table
from .terms import Atom, Compound, Float, Int, SourcePos, Str, Term, Var, make_list

DOUBLE_QUOTES = ("codes", "chars", "atom", "str")

_TERM_END = frozenset(")]}|,")

if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)


@dataclass(frozen=True)
class ReadOptions:
    double_quotes: str = "codes"
    var_policy: str = "named"

    def __post_init__(self):
        if self.double_quotes not in DOUBLE_QUOTES:
            raise ValueError(f"double_quotes must be one of {DOUBLE_QUOTES}")
        if self.var_policy not in ("named", "fresh"):
            raise ValueError("var_policy must be 'named' or 'fresh'")


DEFAULT_OPTIONS = ReadOptions()


class _Parser:
    def __init__(self, tokens, table: OperatorTable, opts: ReadOptions):
        self.toks = tokens
        self.n = len(tokens)
        self.i = 0
        self.table = table
        self.opts = opts
        self.fresh: dict[str, str] = {}
        self.counter = 0

    def peek(self) -> Token | None:
        return self.toks[self.i] if self.i < self.n else None

    def _error(self, cls, msg, tok=None):
        if tok is None:
            tok = self.peek() or (self.toks[-1] if self.toks else None)
        return cls(msg, tok.pos if tok is not None else None)

    def expect(self, value: str) -> Token:
        tok = self.peek()
        if tok is None or tok.kind != "punct" or tok.value != value:
            got = "end of clause" if tok is None else repr(tok.value)
            raise self._error(OperatorClash, f"expected {value!r}, found {got}")
        self.i += 1
        return tok

    def parse(self, max_prec: int) -> tuple[Term, int]:
        left, lp = self.primary(max_prec)
        return self.infix(left, lp, max_prec)

    def arg(self) -> Term:
        return self.parse(999)[0]

    def _var(self, tok: Token) -> Var:
        name = tok.value
        if self.opts.var_policy == "fresh":
            if name == "_" or name not in self.fresh:
                self.counter += 1
                fresh = f"_G{self.counter}"
                if name != "_":
                    self.fresh[name] = fresh
                name = fresh
            else:
                name = self.fresh[name]
        return Var(name, tok.pos)

    def _string(self, tok: Token) -> Term:
        text = tok.value
        mode = "codes" if tok.kind == "bq" else self.opts.double_quotes
        if mode == "codes":
            return make_list([Int(ord(c), tok.pos) for c in text])
        if mode == "chars":
            return make_list([Atom(c, tok.pos) for c in text])
        if mode == "atom":
            return Atom(text, tok.pos)
        return Str(text, tok.pos)

    def primary(self, max_prec: int) -> tuple[Term, int]:
        tok = self.peek()
        if tok is None:
            raise self._error(OperatorClash, "unexpected end of clause")
        self.i += 1
        kind = tok.kind
        if kind == "name":
            return self._name(tok, max_prec)
        if kind == "var":
            return self._var(tok), 0
        if kind == "int":
            return Int(tok.value, tok.pos), 0
        if kind == "float":
            return Float(tok.value, tok.pos), 0
        if kind == "str" or kind == "bq":
            return self._string(tok), 0
        if kind == "punct":
            v = tok.value
            if v == "(":
                t, _ = self.parse(1200)
                self.expect(")")
                return t, 0
            if v == "[":
                nxt = self.peek()
                if nxt is not None and nxt.kind == "punct" and nxt.value == "]":
                    self.i += 1
                    return self._atom_or_call("[]", tok)
                items = [self.arg()]
                while self._punct(","):
                    items.append(self.arg())
                tail = Atom("[]")
                if self._punct("|"):
                    tail = self.arg()
                self.expect("]")
                lst = make_list(items, tail)
                return Compound(".", lst.args, tok.pos), 0
            if v == "{":
                nxt = self.peek()
                if nxt is not None and nxt.kind == "punct" and nxt.value == "}":
                    self.i += 1
                    return self._atom_or_call("{}", tok)
                t, _ = self.parse(1200)
                self.expect("}")
                return Compound("{}", (t,), tok.pos), 0
            raise self._error(OperatorClash, f"unexpected {v!r}", tok)
        if kind == "end":
            raise self._error(OperatorClash, "unexpected end of clause", tok)
        raise self._error(OperatorClash, f"unexpected token {tok.value!r}", tok)

    def _punct(self, value: str) -> bool:
        tok = self.peek()
        if tok is not None and tok.kind == "punct" and tok.value == value:
            self.i += 1
            return True
        return False

    def _atom_or_call(self, name: str, tok: Token) -> tuple[Term, int]:
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.value == "(" and not nxt.layout:
            self.i += 1
            return self._call(name, tok), 0
        return Atom(name, tok.pos), 0

    def _call(self, name: str, tok: Token) -> Compound:
        args = [self.arg()]
        while self._punct(","):
            args.append(self.arg())
        self.expect(")")
        return Compound(name, tuple(args), tok.pos)

    def _starts_term_after_op(self, nxt: Token) -> bool:
        """Decide whether the token after a prefix operator begins its operand."""
        kind = nxt.kind
        if kind == "end":
            return False
        if kind == "punct":
            return nxt.value not in _TERM_END
        if kind == "name":
            table = self.table
            name = nxt.value
            if (table.infix(name) or table.postfix(name)) and not table.prefix(name):
                after = self.toks[self.i + 1] if self.i + 1 < self.n else None
                # `- =(a,b)`: functional notation still starts a term
                return (after is not None and after.kind == "punct"
                        and after.value == "(" and not after.layout)
        return True

    def _name(self, tok: Token, max_prec: int) -> tuple[Term, int]:
        name = tok.value
        nxt = self.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.value == "(" and not nxt.layout:
            self.i += 1
            return self._call(name, tok), 0
        if (name == "-" and not tok.quoted and nxt is not None
                and nxt.kind in ("int", "float") and not nxt.layout):
            self.i += 1
            if nxt.kind == "int":
                return Int(-nxt.value, tok.pos), 0
            return Float(-nxt.value, tok.pos), 0
        op = self.table.prefix(name)
        if op is None or nxt is None or not self._starts_term_after_op(nxt):
            return Atom(name, tok.pos), 0
        prio = op.priority
        arg_max = prio if op.type == "fy" else prio - 1
        if prio > max_prec:
            prio = max_prec
            arg_max = max_prec if op.type == "fy" else max_prec - 1
        save = self.i
        try:
            arg, _ = self.parse(arg_max)
        except SyntaxErrorBase:
            self.i = save
            return Atom(name, tok.pos), 0
        return Compound(name, (arg,), tok.pos), prio

    def infix(self, left: Term, lp: int, max_prec: int) -> tuple[Term, int]:
        table = self.table
        while self.i < self.n:
            tok = self.toks[self.i]
            kind = tok.kind
            if kind == "name":
                name = tok.value
                op = table.infix(name)
                if op is not None:
                    lmax, rmax = op.arg_priorities()
                    if op.priority <= max_prec and lp <= lmax:
                        post = table.postfix(name)
                        if post is not None and self._at_term_end(self.i + 1):
                            pass
                        else:
                            self.i += 1
                            right, _ = self.parse(rmax)
                            left = Compound(name, (left, right), left.pos)
                            lp = op.priority
                            continue
                post = table.postfix(name)
                if post is not None:
                    (amax,) = post.arg_priorities()
                    if post.priority <= max_prec and lp <= amax:
                        self.i += 1
                        left = Compound(name, (left,), left.pos)
                        lp = post.priority
                        continue
                break
            if kind == "punct":
                v = tok.value
                if v == "," and max_prec >= 1000 and lp <= 999:
                    self.i += 1
                    right, _ = self.parse(1000)
                    left = Compound(",", (left, right), left.pos)
                    lp = 1000
                    continue
                if v == "|" and max_prec >= 1100 and lp <= 1099:
                    self.i += 1
                    right, _ = self.parse(1100)
                    left = Compound(";", (left, right), left.pos)
                    lp = 1100
                    continue
            break
        return left, lp

    def _at_term_end(self, k: int) -> bool:
        if k >= self.n:
            return True
        tok = self.toks[k]
        return tok.kind == "end" or (tok.kind == "punct" and tok.value in _TERM_END)


def read_term(tokens, table: OperatorTable | None = None,
              opts: ReadOptions | None = None) -> Term:
    """Parse one clause (a token run ending in ``end``) into a term."""
    if table is None:
        table = default_table()
    if opts is None:
        opts = DEFAULT_OPTIONS
    tokens = list(tokens)
    if not tokens:
        raise OperatorClash("empty clause")
    if tokens[-1].kind != "end":
        raise OperatorClash("clause is not terminated by '.'", tokens[-1].pos)
    body = tokens[:-1]
    if not body:
        raise OperatorClash("empty clause", tokens[-1].pos)
    p = _Parser(body, table, opts)
    term, _ = p.parse(1200)
    if p.i < p.n:
        tok = p.toks[p.i]
        if tok.kind == "name" and (table.infix(tok.value) or table.postfix(tok.value)):
            raise PriorityOverflow(f"operator priority clash at {tok.value!r}", tok.pos)
        raise OperatorClash(f"unexpected {tok.value!r}", tok.pos)
    return term


def parse_term(text: str, table: OperatorTable | None = None,
               opts: ReadOptions | None = None, file: str = "<string>") -> Term:
    """Read a single term from text; the terminating '.' is optional."""
    toks = tokenize(text, SourcePos(file, 1, 1))
    if not toks or toks[-1].kind != "end":
        end = len(text)
        last = toks[-1].pos if toks else SourcePos(file, 1, 1)
        toks.append(Token("end", ".", end, end, last, True))
    if sum(1 for t in toks if t.kind == "end") > 1:
        raise OperatorClash("more than one clause in text")
    return read_term(toks, table, opts)


def read_clauses(source: str, table: OperatorTable | None = None,
                 opts: ReadOptions | None = None,
                 file: str = "<string>") -> Iterator[Term]:
    """Yield all clauses of a source text under a fixed operator table."""
    for run in split_clauses(tokenize(source, SourcePos(file, 1, 1))):
        yield read_term(run, table, opts)
