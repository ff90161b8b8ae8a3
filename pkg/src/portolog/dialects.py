"""Per-dialect knowledge: feature matrix, flag tables and predicate catalogs.

Catalogs live in a directory holding ``features.def`` (the declared feature
keys) and one ``<dialect>.profile`` file per dialect. Profile files are plain
text with ``[section]`` headers:

    [dialect]      name: swi
    [features]     key: value | optional qualifier
    [flags]        name: ground term
    [operators]    priority type name
    [predicates]   name/arity origin "optional divergence note"
                   @include other.preds
"""
from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import (DuplicateDialect, MissingFeature, ParseError, SyntaxErrorBase,
                     UnknownDialect, UnknownFeature)
from .ops import OperatorDef, OperatorTable
from .reader import parse_term
from .terms import Term, is_ground, parse_indicator

ENV_CATALOG = "PORTOLOG_CATALOG_DIR"
ORIGINS = ("builtin", "library", "dialect-emulation")

_PRED_LINE = re.compile(
    r"""^(?P<pi>'(?:[^'\\]|\\.|'')*'/\d+|\S+/\d+)
        \s+(?P<origin>builtin|library\([^)\s]+\)|dialect-emulation\([^)\s]+\))
        (?:\s+"(?P<note>[^"]*)")?\s*$""",
    re.X,
)
_DIALECT_NAME = re.compile(r"[a-z][a-z0-9_]*")


class FeatureValue(str):
    """A feature matrix cell; compares as its plain value, keeps its qualifier."""

    note: str | None

    def __new__(cls, value: str, note: str | None = None):
        obj = super().__new__(cls, value)
        obj.note = note
        return obj

    def __repr__(self):
        if self.note:
            return f"FeatureValue({str(self)!r}, note={self.note!r})"
        return f"FeatureValue({str(self)!r})"


@dataclass(frozen=True)
class FeatureDecl:
    key: str
    label: str
    values: tuple[str, ...] | None  # None: free text
    note: str | None = None


@dataclass(frozen=True)
class PredicateEntry:
    name: str
    arity: int
    origin: str
    note: str | None = None

    @property
    def indicator(self) -> tuple[str, int]:
        return (self.name, self.arity)

    @property
    def origin_kind(self) -> str:
        return self.origin.split("(", 1)[0]


@dataclass
class DialectProfile:
    name: str
    label: str
    features: dict[str, FeatureValue]
    flags: dict[str, Term]
    predicates: list[PredicateEntry]
    operators: list[OperatorDef] = field(default_factory=list)
    source: str | None = None

    def __post_init__(self):
        self._index: dict[tuple[str, int], list[PredicateEntry]] = {}
        for entry in self.predicates:
            self._index.setdefault(entry.indicator, []).append(entry)

    def entries(self, pi: tuple[str, int]) -> list[PredicateEntry]:
        return self._index.get(pi, [])

    def has_predicate(self, pi: tuple[str, int]) -> bool:
        return pi in self._index

    def divergences(self) -> dict[tuple[str, int], str]:
        return {e.indicator: e.note for e in self.predicates if e.note}

    def operator_table(self, base: OperatorTable) -> OperatorTable:
        table = base
        for op in self.operators:
            table = table.add(op.priority, op.type, op.name)
        return table

    def with_predicates(self, extra) -> "DialectProfile":
        """Copy of this profile with additional catalog entries."""
        return DialectProfile(self.name, self.label, dict(self.features), dict(self.flags),
                              list(self.predicates) + list(extra), list(self.operators),
                              self.source)


class DialectStore:
    """A validated, immutable-by-convention set of dialect profiles."""

    def __init__(self, decls: dict[str, FeatureDecl], profiles: dict[str, DialectProfile]):
        self.decls = decls
        self.profiles = profiles

    def __iter__(self):
        return iter(self.profiles[n] for n in self.names)

    def __len__(self):
        return len(self.profiles)

    def __contains__(self, name):
        return name in self.profiles

    @property
    def names(self) -> list[str]:
        return sorted(self.profiles)

    @property
    def keys(self) -> list[str]:
        return list(self.decls)

    def profile(self, d: str) -> DialectProfile:
        try:
            return self.profiles[d]
        except KeyError:
            raise UnknownDialect(f"unknown dialect {d!r}") from None

    def feature(self, d: str, key: str) -> FeatureValue:
        profile = self.profile(d)
        if key not in self.decls:
            raise UnknownFeature(f"unknown feature {key!r}")
        return profile.features[key]

    def has_predicate(self, d: str, pi: tuple[str, int]) -> bool:
        return self.profile(d).has_predicate(pi)

    def flag(self, d: str, name: str) -> Term | None:
        return self.profile(d).flags.get(name)

    def diff_dialects(self, a: str, b: str) -> list[tuple[str, FeatureValue, FeatureValue]]:
        pa, pb = self.profile(a), self.profile(b)
        out = []
        for key in sorted(self.decls):
            va, vb = pa.features[key], pb.features[key]
            if str(va) != str(vb):
                out.append((key, va, vb))
        return out

    def replace(self, profile: DialectProfile) -> "DialectStore":
        profiles = dict(self.profiles)
        profiles[profile.name] = profile
        return DialectStore(self.decls, profiles)

    def matrix(self) -> dict:
        """Plain-data export of the whole feature matrix."""
        return {
            "dialects": self.names,
            "features": [
                {
                    "key": key,
                    "label": decl.label,
                    "note": decl.note,
                    "values": {
                        d: {"value": str(self.profiles[d].features[key]),
                            "note": self.profiles[d].features[key].note}
                        for d in self.names
                    },
                }
                for key, decl in self.decls.items()
            ],
        }


def default_catalog_dir() -> Path:
    env = os.environ.get(ENV_CATALOG)
    if env:
        return Path(env)
    return Path(__file__).parent / "data" / "catalog"


def _strip(line: str) -> str:
    if line.lstrip().startswith("#"):
        return ""
    return line.strip()


def load_feature_decls(path: Path) -> dict[str, FeatureDecl]:
    decls: dict[str, FeatureDecl] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        parts = [p.strip() for p in line.split("|")]
        if len(parts) not in (3, 4) or not parts[0]:
            raise ParseError(f"{path}:{lineno}: expected 'key | label | values [| note]'")
        key, label, values = parts[:3]
        if key in decls:
            raise ParseError(f"{path}:{lineno}: duplicate feature key {key!r}")
        allowed = None if values == "*" else tuple(values.split())
        decls[key] = FeatureDecl(key, label, allowed, parts[3] if len(parts) == 4 else None)
    if not decls:
        raise ParseError(f"{path}: no feature keys declared")
    return decls


def _sections(path: Path):
    section = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            continue
        if section is None:
            raise ParseError(f"{path}:{lineno}: content outside any section")
        yield section, lineno, line


def _read_preds(path: Path, lineno_ctx: str, seen_includes=()) -> list[PredicateEntry]:
    out = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = _strip(raw)
        if line:
            out.extend(_pred_line(path, lineno, line, seen_includes))
    return out


def _pred_line(path: Path, lineno: int, line: str, seen_includes) -> list[PredicateEntry]:
    if line.startswith("@include"):
        target = path.parent / line.split(None, 1)[1].strip()
        if target in seen_includes:
            raise ParseError(f"{path}:{lineno}: recursive include of {target.name}")
        if not target.is_file():
            raise ParseError(f"{path}:{lineno}: included file {target.name} not found")
        return _read_preds(target, f"{path}:{lineno}", (*seen_includes, target))
    m = _PRED_LINE.match(line)
    if not m:
        raise ParseError(f"{path}:{lineno}: malformed predicate line {line!r}")
    try:
        name, arity = parse_indicator(m["pi"])
    except ValueError as e:
        raise ParseError(f"{path}:{lineno}: {e}") from None
    return [PredicateEntry(name, arity, m["origin"], m["note"])]


def load_profile(path: Path, decls: dict[str, FeatureDecl]) -> DialectProfile:
    meta: dict[str, str] = {}
    features: dict[str, FeatureValue] = {}
    flags: dict[str, Term] = {}
    operators: list[OperatorDef] = []
    preds: list[PredicateEntry] = []
    for section, lineno, line in _sections(path):
        where = f"{path}:{lineno}"
        if section == "predicates":
            preds.extend(_pred_line(path, lineno, line, ()))
            continue
        if section == "operators":
            parts = line.split()
            if len(parts) != 3 or not parts[0].isdigit():
                raise ParseError(f"{where}: expected 'priority type name'")
            try:
                operators.append(OperatorDef(int(parts[0]), parts[1], parts[2]))
            except Exception as e:
                raise ParseError(f"{where}: {e}") from None
            continue
        key, sep, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ParseError(f"{where}: expected 'name: value'")
        if section == "dialect":
            meta[key] = value
        elif section == "features":
            if key not in decls:
                raise ParseError(f"{where}: undeclared feature key {key!r}")
            if key in features:
                raise ParseError(f"{where}: feature {key!r} given twice")
            value, _, note = value.partition("|")
            value, note = value.strip(), note.strip() or None
            allowed = decls[key].values
            if allowed is not None and value not in allowed:
                raise ParseError(f"{where}: {value!r} is not a permitted value for {key}")
            features[key] = FeatureValue(value, note)
        elif section == "flags":
            try:
                term = parse_term(value, file=str(path))
            except SyntaxErrorBase as e:
                raise ParseError(f"{where}: bad flag value: {e.message}") from None
            if not is_ground(term):
                raise ParseError(f"{where}: flag value must be ground")
            flags[key] = term
        else:
            raise ParseError(f"{where}: unknown section [{section}]")
    name = meta.get("name")
    if not name or not _DIALECT_NAME.fullmatch(name):
        raise ParseError(f"{path}: missing or invalid dialect name")
    missing = [k for k in decls if k not in features]
    if missing:
        raise MissingFeature(f"{path}: dialect {name!r} lacks features: {', '.join(missing)}")
    if "dialect" not in flags:
        raise ParseError(f"{path}: flag table must define the 'dialect' flag")
    seen = set()
    for e in preds:
        if (e.indicator, e.origin) in seen:
            raise ParseError(f"{path}: duplicate catalog entry {e.name}/{e.arity} {e.origin}")
        seen.add((e.indicator, e.origin))
    return DialectProfile(name, meta.get("label", name), features, flags, preds, operators,
                          str(path))


def load_profiles(catalog_dir=None) -> DialectStore:
    """Load and validate every ``*.profile`` in a catalog directory."""
    root = Path(catalog_dir) if catalog_dir is not None else default_catalog_dir()
    if not root.is_dir():
        raise ParseError(f"catalog directory {root} does not exist")
    decl_path = root / "features.def"
    if not decl_path.is_file():
        raise ParseError(f"{root}: no features.def")
    decls = load_feature_decls(decl_path)
    profiles: dict[str, DialectProfile] = {}
    for path in sorted(root.glob("*.profile")):
        profile = load_profile(path, decls)
        if profile.name in profiles:
            raise DuplicateDialect(f"dialect {profile.name!r} defined by both "
                                   f"{profiles[profile.name].source} and {path}")
        profiles[profile.name] = profile
    if not profiles:
        raise MissingFeature(f"{root}: no dialect profiles found")
    return DialectStore(decls, profiles)
