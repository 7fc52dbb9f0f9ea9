"""Parser for the textual constraint grammar.

Terms are ``k``, ``v``, ``k*v``, ``t1 + t2`` and ``t1 - t2``; atoms compare
two terms with ``= <= < >= >``; connectives are ``not``, ``and``, ``or``,
``=>`` and ``<=>`` (in decreasing binding strength); quantifiers are
written ``exists v1 v2. F`` and ``forall v. F`` and extend as far right as
possible.  ``#`` starts a comment, whitespace is insignificant.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import formula as F

KEYWORDS = {"not", "and", "or", "exists", "forall", "true", "false"}

_SYMBOLS = ("<=>", "=>", "<=", ">=", "=", "<", ">", "+", "-", "*", "(", ")", ".")


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # "int" | "ident" | "sym" | "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            tokens.append(Token("int", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(Token("ident", text[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in _SYMBOLS:
            if text.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, message: str) -> ParseError:
        tok = self.peek()
        return ParseError(message, tok.line, tok.col)

    def expect_sym(self, sym: str) -> None:
        tok = self.next()
        if tok.kind != "sym" or tok.text != sym:
            raise ParseError(f"expected {sym!r}, found {tok.text!r}",
                             tok.line, tok.col)

    def at_sym(self, sym: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.text == sym

    def at_word(self, word: str) -> bool:
        tok = self.peek()
        return tok.kind == "ident" and tok.text == word

    # formula := iff
    def formula(self) -> F.Formula:
        return self.iff()

    def iff(self) -> F.Formula:
        left = self.implication()
        while self.at_sym("<=>"):
            self.next()
            right = self.implication()
            left = F.Iff(left, right)
        return left

    def implication(self) -> F.Formula:
        left = self.disjunction()
        if self.at_sym("=>"):
            self.next()
            return F.Implies(left, self.implication())
        return left

    def disjunction(self) -> F.Formula:
        parts = [self.conjunction()]
        while self.at_word("or"):
            self.next()
            parts.append(self.conjunction())
        return parts[0] if len(parts) == 1 else F.Or(tuple(parts))

    def conjunction(self) -> F.Formula:
        parts = [self.unary()]
        while self.at_word("and"):
            self.next()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else F.And(tuple(parts))

    def unary(self) -> F.Formula:
        if self.at_word("not"):
            self.next()
            return F.Not(self.unary())
        if self.at_word("exists") or self.at_word("forall"):
            return self.quantifier()
        return self.atom()

    def quantifier(self) -> F.Formula:
        kw = self.next().text
        names = []
        while self.peek().kind == "ident" and self.peek().text not in KEYWORDS:
            names.append(self.next().text)
        if not names:
            raise self.fail(f"{kw} needs at least one variable")
        self.expect_sym(".")
        body = self.formula()
        ctor = F.Exists if kw == "exists" else F.Forall
        return ctor(tuple(names), body)

    def atom(self) -> F.Formula:
        if self.at_sym("("):
            self.next()
            inner = self.formula()
            self.expect_sym(")")
            return inner
        if self.at_word("true"):
            self.next()
            return F.TRUE
        if self.at_word("false"):
            self.next()
            return F.FALSE
        lhs = self.term()
        tok = self.peek()
        if tok.kind == "sym" and tok.text in F.CMP_OPS:
            self.next()
            rhs = self.term()
            return F.Cmp(tok.text, lhs, rhs)
        raise self.fail("expected a comparison operator")

    def term(self) -> F.LinTerm:
        acc = self.factor()
        while self.peek().kind == "sym" and self.peek().text in ("+", "-"):
            op = self.next().text
            rhs = self.factor()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def factor(self) -> F.LinTerm:
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            k = int(tok.text)
            if self.at_sym("*"):
                self.next()
                name = self.next()
                if name.kind != "ident" or name.text in KEYWORDS:
                    raise ParseError("expected a variable after '*'",
                                     name.line, name.col)
                return F.var(name.text).scale(k)
            return F.const(k)
        if tok.kind == "ident" and tok.text not in KEYWORDS:
            self.next()
            return F.var(tok.text)
        raise self.fail(f"expected a term, found {tok.text!r}")


def parse_formula(text: str) -> F.Formula:
    parser = _Parser(tokenize(text))
    result = parser.formula()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input starting at {tok.text!r}",
                         tok.line, tok.col)
    return result


def parse_term(text: str) -> F.LinTerm:
    parser = _Parser(tokenize(text))
    result = parser.term()
    tok = parser.peek()
    if tok.kind != "eof":
        raise ParseError(f"trailing input starting at {tok.text!r}",
                         tok.line, tok.col)
    return result
