"""Exception hierarchy shared by all portolog modules."""
from __future__ import annotations


class PortologError(Exception):
    """Base class; carries an optional source position."""

    def __init__(self, message: str, pos=None):
        super().__init__(message)
        self.message = message
        self.pos = pos

    def __str__(self):
        if self.pos is not None:
            return f"{self.pos}: {self.message}"
        return self.message


# reader
class SyntaxErrorBase(PortologError):
    pass


class UnterminatedQuoted(SyntaxErrorBase):
    pass


class InvalidCharCode(SyntaxErrorBase):
    pass


class OperatorClash(SyntaxErrorBase):
    pass


class PriorityOverflow(SyntaxErrorBase):
    pass


class OpDirectiveError(PortologError):
    pass


class BadPriority(OpDirectiveError):
    pass


class BadType(OpDirectiveError):
    pass


class BadName(OpDirectiveError):
    pass


# dialects
class CatalogError(PortologError):
    pass


class MissingFeature(CatalogError):
    pass


class ParseError(CatalogError):
    pass


class DuplicateDialect(CatalogError):
    pass


class UnknownDialect(CatalogError):
    pass


class UnknownFeature(CatalogError):
    pass


# condeval
class NonGroundCondition(PortologError):
    pass


class PolicyError(PortologError):
    pass


# preprocessor
class UnbalancedConditional(PortologError):
    pass


class ReadError(PortologError):
    pass


class UnknownDialectInExpects(PortologError):
    pass


# rewrite
class RuleError(PortologError):
    pass


class RuleLoop(RuleError):
    pass


class ArityMismatch(RuleError):
    pass


class NoMinus(RuleError):
    pass


class RuleFileError(RuleError):
    pass


# lint
class ConfigError(PortologError):
    pass
