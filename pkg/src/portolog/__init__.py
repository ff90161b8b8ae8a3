"""Prolog portability toolkit.

Reads ISO-core Prolog, evaluates ``:- if`` conditional compilation against
per-dialect feature catalogs, applies cross-dialect rewrite rules and lints
programs for constructs that are missing or behave differently in a target
dialect.
"""
__version__ = "0.1.0"

from .condeval import EvalContext, TriBool, evaluate, explain
from .dialects import DialectStore, load_profiles
from .errors import PortologError
from .lexer import tokenize
from .lint import LintFinding, RuleSet, lint_program, report
from .ops import OperatorDef, OperatorTable, apply_op_directive, default_table
from .preprocessor import ExpandedProgram, expand_program, expand_source, resolve_library
from .reader import ReadOptions, parse_term, read_clauses, read_term
from .rewrite import RewriteRule, apply_rules, compile_block_directive, load_rules, validate_rules
from .terms import Atom, Compound, Float, Int, SourcePos, Str, Var
from .writer import format_clause, write_term

__all__ = [
    "Atom", "Compound", "DialectStore", "EvalContext", "ExpandedProgram", "Float", "Int",
    "LintFinding", "OperatorDef", "OperatorTable", "PortologError", "ReadOptions",
    "RewriteRule", "RuleSet", "SourcePos", "Str", "TriBool", "Var", "apply_op_directive",
    "apply_rules", "compile_block_directive", "default_table", "evaluate", "expand_program",
    "expand_source", "explain", "format_clause", "lint_program", "load_profiles", "load_rules",
    "parse_term", "read_clauses", "read_term", "report", "resolve_library", "tokenize",
    "validate_rules", "write_term",
]
