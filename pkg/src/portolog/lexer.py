"""Tokenizer for ISO-core Prolog text."""
from __future__ import annotations

import re

from .errors import InvalidCharCode, UnterminatedQuoted
from .terms import SourcePos

SYMBOL_CHARS = frozenset("#$&*+-./:<=>?@^~\\")
SOLO_CHARS = frozenset("!;")
PUNCT_CHARS = frozenset("()[]{},|")

_TOKEN_RE = re.compile(
    r"""
     (?P<ws>\s+)
    |(?P<comment>%[^\n]*)
    |(?P<block>/\*.*?\*/)
    |(?P<float>\d+\.\d+(?:[eE][+-]?\d+)?(?:Inf|NaN)?|\d+[eE][+-]?\d+)
    |(?P<charcode>0')
    |(?P<radix>0x[0-9a-fA-F]+|0o[0-7]+|0b[01]+)
    |(?P<int>\d+)
    |(?P<word>[^\W\d]\w*)
    |(?P<symbol>[#$&*+\-./:<=>?@^~\\]+)
    |(?P<solo>[!;])
    |(?P<punct>[()\[\]{},|])
    |(?P<quote>['"`])
    """,
    re.X | re.S,
)

_ESCAPES = {
    "a": "\a", "b": "\b", "f": "\f", "n": "\n", "r": "\r", "t": "\t",
    "v": "\v", "e": "\x1b", "s": " ", "z": "", "0": "\0",
    "\\": "\\", "'": "'", '"': '"', "`": "`",
}


class Token:
    """One lexeme: ``kind`` is name, var, int, float, str, bq, punct or end.

    ``layout`` records whether layout text (whitespace or comments) came
    immediately before the token; ``quoted`` marks quoted atoms.
    """

    __slots__ = ("kind", "value", "start", "end", "pos", "layout", "quoted")

    def __init__(self, kind, value, start, end, pos, layout, quoted=False):
        self.kind = kind
        self.value = value
        self.start = start
        self.end = end
        self.pos = pos
        self.layout = layout
        self.quoted = quoted

    def __repr__(self):
        return f"Token({self.kind}, {self.value!r}, {self.pos.line}:{self.pos.column})"

    def __eq__(self, other):
        return (isinstance(other, Token) and self.kind == other.kind
                and self.value == other.value and self.start == other.start
                and self.end == other.end and self.layout == other.layout
                and self.quoted == other.quoted)

    __hash__ = None

    @property
    def label(self) -> str:
        """Compact form used in tests and diagnostics, e.g. ``name(foo)``."""
        if self.kind in ("end",):
            return "end"
        if self.kind == "punct":
            return {"(": "open", ")": "close", "[": "open_list", "]": "close_list",
                    "{": "open_curly", "}": "close_curly", ",": "comma",
                    "|": "bar"}[self.value]
        return f"{self.kind}({self.value})"


def _read_escape(src: str, i: int, pos_of) -> tuple[str, int]:
    """Decode the escape sequence starting just after a backslash at ``i``."""
    if i >= len(src):
        raise UnterminatedQuoted("unterminated escape sequence", pos_of(i))
    c = src[i]
    if c == "\n":
        return "", i + 1
    if c == "x":
        j = i + 1
        while j < len(src) and src[j] in "0123456789abcdefABCDEF":
            j += 1
        if j == i + 1 or j >= len(src) or src[j] != "\\":
            raise InvalidCharCode("malformed hexadecimal escape", pos_of(i))
        return _char(int(src[i + 1:j], 16), pos_of(i)), j + 1
    if c in "01234567":
        j = i
        while j < len(src) and src[j] in "01234567":
            j += 1
        if j < len(src) and src[j] == "\\":
            return _char(int(src[i:j], 8), pos_of(i)), j + 1
        if c == "0" and j == i + 1:
            return "\0", i + 1
        raise InvalidCharCode("malformed octal escape", pos_of(i))
    if c in _ESCAPES:
        return _ESCAPES[c], i + 1
    raise InvalidCharCode(f"undefined escape sequence \\{c}", pos_of(i))


def _char(code: int, pos) -> str:
    if code > 0x10FFFF:
        raise InvalidCharCode(f"character code {code} out of range", pos)
    return chr(code)


def _read_quoted(src: str, i: int, q: str, pos_of) -> tuple[str, int]:
    """Read a quoted item whose opening quote is at ``i``; return text and end index."""
    out = []
    j = i + 1
    n = len(src)
    while True:
        k = j
        while k < n and src[k] != q and src[k] != "\\":
            k += 1
        out.append(src[j:k])
        if k >= n:
            raise UnterminatedQuoted(f"unterminated quoted item", pos_of(i))
        if src[k] == q:
            if k + 1 < n and src[k + 1] == q:
                out.append(q)
                j = k + 2
                continue
            return "".join(out), k + 1
        text, j = _read_escape(src, k + 1, pos_of)
        out.append(text)


class _Positions:
    def __init__(self, src: str, pos0: SourcePos):
        self.src = src
        self.pos0 = pos0
        self.line = pos0.line
        self.line_start = 0
        self.scanned = 0

    def __call__(self, i: int) -> SourcePos:
        # positions are requested in increasing order during the scan
        if i < self.scanned:
            return self._slow(i)
        nl = self.src.count("\n", self.scanned, i)
        if nl:
            self.line += nl
            self.line_start = self.src.rfind("\n", self.scanned, i) + 1
        self.scanned = i
        if self.line == self.pos0.line:
            col = self.pos0.column + i - self.line_start
        else:
            col = i - self.line_start + 1
        return SourcePos(self.pos0.file, self.line, col)

    def _slow(self, i: int) -> SourcePos:
        nl = self.src.count("\n", 0, i)
        line = self.pos0.line + nl
        if nl:
            col = i - self.src.rfind("\n", 0, i)
        else:
            col = self.pos0.column + i
        return SourcePos(self.pos0.file, line, col)


def tokenize(source: str, pos0: SourcePos | None = None) -> list[Token]:
    """Split ``source`` into tokens.

    Comments and whitespace are consumed as layout; the text between two
    consecutive tokens is always layout, so the source can be rebuilt from
    token spans.
    """
    if pos0 is None:
        pos0 = SourcePos("<string>", 1, 1)
    src = source
    n = len(src)
    pos_of = _Positions(src, pos0)
    tokens: list[Token] = []
    append = tokens.append
    match = _TOKEN_RE.match
    i = 0
    layout = True
    while i < n:
        m = match(src, i)
        if m is None:
            raise InvalidCharCode(f"unexpected character {src[i]!r}", pos_of(i))
        kind = m.lastgroup
        j = m.end()
        if kind == "ws" or kind == "comment" or kind == "block":
            layout = True
            i = j
            continue
        if kind == "word":
            text = m.group()
            c = text[0]
            if c == "_" or c.isupper():
                append(Token("var", text, i, j, pos_of(i), layout))
            else:
                append(Token("name", text, i, j, pos_of(i), layout))
        elif kind == "symbol":
            text = m.group()
            if text.startswith("/*"):
                raise UnterminatedQuoted("unterminated block comment", pos_of(i))
            if text == "." and (j >= n or src[j].isspace() or src[j] == "%"):
                append(Token("end", ".", i, j, pos_of(i), layout))
            else:
                append(Token("name", text, i, j, pos_of(i), layout))
        elif kind == "punct":
            append(Token("punct", m.group(), i, j, pos_of(i), layout))
        elif kind == "int":
            append(Token("int", int(m.group()), i, j, pos_of(i), layout))
        elif kind == "solo":
            append(Token("name", m.group(), i, j, pos_of(i), layout))
        elif kind == "float":
            append(Token("float", _float(m.group()), i, j, pos_of(i), layout))
        elif kind == "quote":
            q = m.group()
            text, j = _read_quoted(src, i, q, pos_of)
            if q == "'":
                append(Token("name", text, i, j, pos_of(i), layout, True))
            elif q == '"':
                append(Token("str", text, i, j, pos_of(i), layout))
            else:
                append(Token("bq", text, i, j, pos_of(i), layout))
        elif kind == "radix":
            text = m.group()
            base = {"x": 16, "o": 8, "b": 2}[text[1]]
            append(Token("int", int(text[2:], base), i, j, pos_of(i), layout))
        else:  # charcode
            code, j = _read_charcode(src, j, pos_of)
            append(Token("int", code, i, j, pos_of(i), layout))
        layout = False
        i = j
    return tokens


def _float(text: str) -> float:
    if text.endswith("Inf"):
        return float("inf")
    if text.endswith("NaN"):
        return float("nan")
    return float(text)


def _read_charcode(src: str, j: int, pos_of) -> tuple[int, int]:
    if j >= len(src):
        raise InvalidCharCode("missing character after 0'", pos_of(j))
    c = src[j]
    if c == "\\":
        text, k = _read_escape(src, j + 1, pos_of)
        if len(text) != 1:
            raise InvalidCharCode("escape does not denote a single character", pos_of(j))
        return ord(text), k
    if c == "'":
        if j + 1 < len(src) and src[j + 1] == "'":
            return 39, j + 2
        return 39, j + 1
    return ord(c), j + 1


def split_clauses(tokens: list[Token]):
    """Yield token runs, each terminated by an ``end`` token.

    A trailing run without an end token is yielded as-is so the parser can
    report it.
    """
    start = 0
    for k, tok in enumerate(tokens):
        if tok.kind == "end":
            yield tokens[start:k + 1]
            start = k + 1
    if start < len(tokens):
        yield tokens[start:]
