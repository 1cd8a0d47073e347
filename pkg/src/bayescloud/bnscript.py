"""Parser, serializer, and evidence reader for the BN script language.

A model script (``.bns``) is a sequence of ``defineNode`` blocks.  Each block
declares a state space with ``defineState`` and a local distribution with a
``p(...)`` statement whose right-hand side is a probability table, a
``NormalDist(mean, variance)``, or an if/else-if chain over parent states.
Identifiers are ``[A-Za-z_][A-Za-z0-9_]*``, statements end with ``;``, and
whitespace is insignificant.

An evidence script (``.bne``) assigns one observed value per line
(``Name = state`` or ``Name = 12.5``); ``#`` starts a comment line.

Parsing is total: malformed input raises a positioned :class:`ScriptError`,
never returns a partial AST.  ``parse_model(serialize_model(ast)) == ast``
holds for every valid AST.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from .errors import (
    DuplicateAssignment,
    DuplicateNode,
    ProbabilityOutOfRange,
    ScriptSyntaxError,
    UnknownStateReference,
)

RESERVED = frozenset({"defineNode", "defineState", "if", "else", "NormalDist"})

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Discrete:
    states: tuple[str, ...]


@dataclass(frozen=True)
class Continuous:
    pass


CONTINUOUS = Continuous()

Domain = Union[Discrete, Continuous]


@dataclass(frozen=True)
class TableLiteral:
    """Probabilities over the node's own states, in declaration order."""

    rows: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class GaussianLiteral:
    """``NormalDist(mean [+ coef*Parent ...], variance)``."""

    mean: float
    variance: float
    terms: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class Guard:
    """Conjunction of ``parent == state`` tests."""

    tests: tuple[tuple[str, str], ...]


Leaf = Union[TableLiteral, GaussianLiteral]


@dataclass(frozen=True)
class Conditional:
    """Ordered (guard, distribution) branches; a ``None`` guard is a final
    catch-all.  Guards are evaluated first-match."""

    branches: tuple[tuple[Guard | None, Leaf], ...]


DistExpr = Union[TableLiteral, GaussianLiteral, Conditional]


@dataclass(frozen=True)
class NodeDef:
    name: str
    description: str | None
    domain: Domain
    distribution: DistExpr


@dataclass(frozen=True)
class ModelAst:
    nodes: tuple[NodeDef, ...] = ()


@dataclass(frozen=True)
class Evidence:
    """Observed values: state names for discrete variables, reals for
    continuous ones."""

    assignments: tuple[tuple[str, Union[str, float]], ...] = ()

    def as_dict(self) -> dict[str, Union[str, float]]:
        return dict(self.assignments)


def referenced_parents(dist: DistExpr) -> list[str]:
    """Identifiers a distribution conditions on, in first-reference order.

    This is the node's parent list: guards first, then CLG linear terms.
    """
    seen: list[str] = []

    def visit_leaf(leaf: Leaf):
        if isinstance(leaf, GaussianLiteral):
            for name, _coef in leaf.terms:
                if name not in seen:
                    seen.append(name)

    if isinstance(dist, Conditional):
        for guard, leaf in dist.branches:
            if guard is not None:
                for parent, _state in guard.tests:
                    if parent not in seen:
                        seen.append(parent)
            visit_leaf(leaf)
    else:
        visit_leaf(dist)
    return seen


# --------------------------------------------------------------------------
# Lexer

_SYMBOLS = ("==", "&&", "(", ")", "{", "}", "|", ",", ";", ":", "=", "+", "-", "*")


@dataclass(frozen=True)
class Token:
    kind: str  # 'ident', 'number', one of _SYMBOLS, or 'eof'
    text: str
    line: int
    column: int

    @property
    def value(self) -> float:
        return float(self.text)


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1

    def _advance(self, n: int):
        for ch in self.text[self.pos : self.pos + n]:
            if ch == "\n":
                self.line += 1
                self.column = 1
            else:
                self.column += 1
        self.pos += n

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self._advance(1)

    def next_token(self) -> Token:
        self._skip_ws()
        if self.pos >= len(self.text):
            return Token("eof", "", self.line, self.column)
        line, column = self.line, self.column
        m = _IDENT_RE.match(self.text, self.pos)
        if m:
            self._advance(len(m.group()))
            return Token("ident", m.group(), line, column)
        m = _NUMBER_RE.match(self.text, self.pos)
        if m:
            self._advance(len(m.group()))
            return Token("number", m.group(), line, column)
        for sym in _SYMBOLS:
            if self.text.startswith(sym, self.pos):
                self._advance(len(sym))
                return Token(sym, sym, line, column)
        raise ScriptSyntaxError(
            f"unexpected character {self.text[self.pos]!r}", line, column
        )

    def take_free_text_until_rparen(self) -> str:
        """Consume raw characters up to (not including) the next ``)``.

        Used for the free-text description argument of ``defineNode``; the
        description may not itself contain a closing parenthesis.
        """
        end = self.text.find(")", self.pos)
        if end == -1:
            raise ScriptSyntaxError("unterminated defineNode arguments", self.line, self.column)
        raw = self.text[self.pos : end]
        self._advance(end - self.pos)
        return raw.strip()


# --------------------------------------------------------------------------
# Parser


class _Parser:
    def __init__(self, text: str):
        self.lexer = _Lexer(text)
        self.tok = self.lexer.next_token()
        self.current_node = ""
        # (name, line, column) of every identifier used as a parent, resolved
        # against the full node list once the script has been read.
        self.parent_refs: list[tuple[str, int, int]] = []

    # -- token plumbing

    def advance(self) -> Token:
        tok = self.tok
        self.tok = self.lexer.next_token()
        return tok

    def expect(self, kind: str, expected: str) -> Token:
        if self.tok.kind != kind:
            raise ScriptSyntaxError(
                f"found {self.tok.text!r}" if self.tok.kind != "eof" else "unexpected end of input",
                self.tok.line,
                self.tok.column,
                expected=expected,
            )
        return self.advance()

    def expect_keyword(self, word: str):
        if self.tok.kind != "ident" or self.tok.text != word:
            raise ScriptSyntaxError(
                f"found {self.tok.text!r}" if self.tok.kind != "eof" else "unexpected end of input",
                self.tok.line,
                self.tok.column,
                expected=f"'{word}'",
            )
        return self.advance()

    def expect_name(self, what: str) -> Token:
        tok = self.expect("ident", what)
        if tok.text in RESERVED:
            raise ScriptSyntaxError(
                f"'{tok.text}' is a reserved word", tok.line, tok.column, expected=what
            )
        return tok

    def at_keyword(self, word: str) -> bool:
        return self.tok.kind == "ident" and self.tok.text == word

    # -- grammar

    def parse_model(self) -> ModelAst:
        nodes: list[NodeDef] = []
        declared: dict[str, NodeDef] = {}
        while self.tok.kind != "eof":
            node, name_tok = self.parse_node(declared)
            if node.name in declared:
                raise DuplicateNode(node.name, name_tok.line, name_tok.column)
            declared[node.name] = node
            nodes.append(node)
        for name, line, column in self.parent_refs:
            if name not in declared:
                raise ScriptSyntaxError(f"unknown node '{name}'", line, column)
        return ModelAst(tuple(nodes))

    def parse_node(self, declared) -> tuple[NodeDef, Token]:
        self.expect_keyword("defineNode")
        self.expect("(", "'('")
        name_tok = self.expect_name("node name")
        self.current_node = name_tok.text
        description = None
        if self.tok.kind == ",":
            # Free text runs from just past the comma to the closing paren;
            # self.tok is the comma, already consumed from the raw stream.
            raw = self.lexer.take_free_text_until_rparen()
            description = raw or None
            self.tok = self.lexer.next_token()
        self.expect(")", "')'")
        self.expect(";", "';'")
        self.expect("{", "'{'")

        domain = self.parse_define_state()
        dist = self.parse_p_statement(name_tok, domain)
        if self.tok.kind == ";":
            self.advance()
        self.expect("}", "'}'")
        return NodeDef(name_tok.text, description, domain, dist), name_tok

    def parse_define_state(self) -> Domain:
        self.expect_keyword("defineState")
        self.expect("(", "'('")
        kind = self.expect("ident", "'Discrete' or 'Continuous'")
        if kind.text == "Continuous":
            self.expect(")", "')'")
            self.expect(";", "';'")
            return CONTINUOUS
        if kind.text != "Discrete":
            raise ScriptSyntaxError(
                f"found {kind.text!r}", kind.line, kind.column, expected="'Discrete' or 'Continuous'"
            )
        states: list[str] = []
        while self.tok.kind == ",":
            self.advance()
            state = self.expect_name("state name")
            if state.text in states:
                raise ScriptSyntaxError(
                    f"duplicate state '{state.text}'", state.line, state.column
                )
            states.append(state.text)
        close = self.expect(")", "')'")
        self.expect(";", "';'")
        if len(states) < 2:
            raise ScriptSyntaxError(
                "a discrete node needs at least two states", close.line, close.column
            )
        return Discrete(tuple(states))

    def parse_p_statement(self, name_tok: Token, domain: Domain) -> DistExpr:
        head = self.expect("ident", "'p'")
        if head.text != "p":
            raise ScriptSyntaxError(
                f"found {head.text!r}", head.line, head.column, expected="'p'"
            )
        self.expect("(", "'('")
        subject = self.expect_name("node name")
        if subject.text != name_tok.text:
            raise ScriptSyntaxError(
                f"distribution is for '{subject.text}' but the node is '{name_tok.text}'",
                subject.line,
                subject.column,
            )
        parent_list: list[str] = []
        if self.tok.kind == "|":
            self.advance()
            while True:
                parent = self.expect_name("parent name")
                parent_list.append(parent.text)
                if self.tok.kind != ",":
                    break
                self.advance()
        self.expect(")", "')'")
        self.expect("=", "'='")
        return self.parse_dist_expr(domain)

    def parse_dist_expr(self, domain: Domain) -> DistExpr:
        if self.at_keyword("if"):
            return self.parse_conditional(domain)
        return self.parse_leaf(domain)

    def parse_conditional(self, domain: Domain) -> Conditional:
        branches: list[tuple[Guard | None, Leaf]] = []
        self.expect_keyword("if")
        branches.append((self.parse_guard(), self.parse_leaf(domain)))
        while self.at_keyword("else"):
            self.advance()
            if self.at_keyword("if"):
                self.advance()
                branches.append((self.parse_guard(), self.parse_leaf(domain)))
            else:
                branches.append((None, self.parse_leaf(domain)))
                break
        return Conditional(tuple(branches))

    def parse_guard(self) -> Guard:
        self.expect("(", "'('")
        tests: list[tuple[str, str]] = []
        while True:
            parent = self.expect_name("parent name")
            self.parent_refs.append((parent.text, parent.line, parent.column))
            self.expect("==", "'=='")
            state = self.expect_name("state name")
            tests.append((parent.text, state.text))
            if self.tok.kind != "&&":
                break
            self.advance()
        self.expect(")", "')'")
        return Guard(tuple(tests))

    def parse_leaf(self, domain: Domain) -> Leaf:
        if self.tok.kind == "{":
            open_tok = self.advance()
            if self.at_keyword("NormalDist"):
                leaf = self.parse_gaussian(domain)
            else:
                leaf = self.parse_table(domain, open_tok)
            self.expect("}", "'}'")
            return leaf
        if self.at_keyword("NormalDist"):
            return self.parse_gaussian(domain)
        raise ScriptSyntaxError(
            f"found {self.tok.text!r}" if self.tok.kind != "eof" else "unexpected end of input",
            self.tok.line,
            self.tok.column,
            expected="a distribution",
        )

    def parse_table(self, domain: Domain, open_tok: Token) -> TableLiteral:
        if not isinstance(domain, Discrete):
            raise ScriptSyntaxError(
                "a continuous node needs a NormalDist distribution",
                open_tok.line,
                open_tok.column,
            )
        rows: dict[str, float] = {}
        while self.tok.kind != "}":
            state = self.expect_name("state name")
            if state.text not in domain.states:
                raise UnknownStateReference(self.current_node, state.text, state.line, state.column)
            if state.text in rows:
                raise ScriptSyntaxError(
                    f"duplicate row for state '{state.text}'", state.line, state.column
                )
            self.expect(":", "':'")
            value_tok, value = self.parse_signed_number()
            if not 0.0 <= value <= 1.0:
                raise ProbabilityOutOfRange(value, value_tok.line, value_tok.column)
            rows[state.text] = value
            if self.tok.kind == ";":
                self.advance()
            elif self.tok.kind != "}":
                raise ScriptSyntaxError(
                    f"found {self.tok.text!r}",
                    self.tok.line,
                    self.tok.column,
                    expected="';' or '}'",
                )
        missing = [s for s in domain.states if s not in rows]
        if missing:
            raise ScriptSyntaxError(
                "missing probability for state(s): " + ", ".join(missing),
                open_tok.line,
                open_tok.column,
            )
        return TableLiteral(tuple((s, rows[s]) for s in domain.states))

    def parse_gaussian(self, domain: Domain) -> GaussianLiteral:
        kw = self.expect_keyword("NormalDist")
        if not isinstance(domain, Continuous):
            raise ScriptSyntaxError(
                "a discrete node needs a probability table", kw.line, kw.column
            )
        self.expect("(", "'('")
        mean, terms = self.parse_mean_expr()
        self.expect(",", "','")
        var_tok, variance = self.parse_signed_number()
        if variance <= 0.0:
            raise ScriptSyntaxError(
                f"variance must be positive, got {variance!r}", var_tok.line, var_tok.column
            )
        self.expect(")", "')'")
        return GaussianLiteral(mean, variance, tuple(terms))

    def parse_mean_expr(self) -> tuple[float, list[tuple[str, float]]]:
        """``number [+/- coef*Parent ...]``; pure-number terms add into the
        intercept, repeated parents accumulate their coefficients."""
        mean = 0.0
        order: list[str] = []
        coefs: dict[str, float] = {}
        sign = 1.0
        while True:
            value, parent = self.parse_mean_term()
            if parent is None:
                mean += sign * value
            else:
                if parent not in coefs:
                    coefs[parent] = 0.0
                    order.append(parent)
                coefs[parent] += sign * value
            if self.tok.kind not in ("+", "-"):
                break
            sign = 1.0 if self.tok.kind == "+" else -1.0
            self.advance()
        return mean, [(p, coefs[p]) for p in order]

    def parse_mean_term(self) -> tuple[float, str | None]:
        if self.tok.kind in ("number", "-", "+"):
            _tok, value = self.parse_signed_number()
            if self.tok.kind == "*":
                self.advance()
                parent = self.expect_name("parent name")
                self.parent_refs.append((parent.text, parent.line, parent.column))
                return value, parent.text
            return value, None
        parent = self.expect_name("a number or parent name")
        self.parent_refs.append((parent.text, parent.line, parent.column))
        if self.tok.kind == "*":
            self.advance()
            num = self.expect("number", "a number")
            return num.value, parent.text
        return 1.0, parent.text

    def parse_signed_number(self) -> tuple[Token, float]:
        sign = 1.0
        while self.tok.kind in ("+", "-"):
            if self.tok.kind == "-":
                sign = -sign
            self.advance()
        tok = self.expect("number", "a number")
        return tok, sign * tok.value


def parse_model(text: str) -> ModelAst:
    """Parse model script source into a :class:`ModelAst`."""
    return _Parser(text).parse_model()


# --------------------------------------------------------------------------
# Serializer


def format_number(value: float) -> str:
    """Shortest decimal form that parses back to the same float."""
    value = float(value)
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def _mean_expr_text(leaf: GaussianLiteral) -> str:
    parts = [format_number(leaf.mean)]
    for parent, coef in leaf.terms:
        op = "+" if coef >= 0 else "-"
        parts.append(f"{op} {format_number(abs(coef))}*{parent}")
    return " ".join(parts)


def _leaf_text(leaf: Leaf) -> str:
    if isinstance(leaf, TableLiteral):
        rows = " ".join(f"{state}: {format_number(p)};" for state, p in leaf.rows)
        return "{" + rows + "}"
    return f"{{ NormalDist({_mean_expr_text(leaf)}, {format_number(leaf.variance)}) }}"


def _guard_text(guard: Guard) -> str:
    return " && ".join(f"{parent} == {state}" for parent, state in guard.tests)


def serialize_model(ast: ModelAst) -> str:
    """Render an AST in canonical formatting; inverse of :func:`parse_model`."""
    blocks = []
    for node in ast.nodes:
        head = f"defineNode({node.name}, {node.description});" if node.description else f"defineNode({node.name});"
        if isinstance(node.domain, Discrete):
            state_line = f"    defineState(Discrete, {', '.join(node.domain.states)});"
        else:
            state_line = "    defineState(Continuous);"
        parents = referenced_parents(node.distribution)
        p_head = f"    p({node.name} | {', '.join(parents)}) =" if parents else f"    p({node.name}) ="
        lines = [head, "{", state_line, p_head]
        dist = node.distribution
        if isinstance(dist, Conditional):
            for i, (guard, leaf) in enumerate(dist.branches):
                if guard is None:
                    lines.append("        else")
                elif i == 0:
                    lines.append(f"        if ({_guard_text(guard)})")
                else:
                    lines.append(f"        else if ({_guard_text(guard)})")
                lines.append(f"            {_leaf_text(leaf)}")
        else:
            lines.append(f"        {_leaf_text(dist)}")
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n" if blocks else ""


# --------------------------------------------------------------------------
# Evidence scripts

_ASSIGN_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(\S.*?)\s*$")
_VALUE_NUMBER_RE = re.compile(r"^[+-]?(\d+(\.\d+)?|\.\d+)([eE][+-]?\d+)?$")


def parse_evidence(text: str) -> Evidence:
    """Parse evidence source: one ``Name = value`` per line, ``#`` comments."""
    assignments: list[tuple[str, Union[str, float]]] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _ASSIGN_RE.match(raw)
        if not m:
            raise ScriptSyntaxError(
                f"expected 'Name = value', found {line!r}", lineno, 1
            )
        name, value_text = m.group(1), m.group(2)
        if name in seen:
            raise DuplicateAssignment(name, lineno, raw.index(name) + 1)
        seen.add(name)
        if _VALUE_NUMBER_RE.match(value_text):
            assignments.append((name, float(value_text)))
        elif _IDENT_RE.fullmatch(value_text):
            assignments.append((name, value_text))
        else:
            raise ScriptSyntaxError(
                f"right-hand side {value_text!r} is neither a state name nor a number",
                lineno,
                raw.index("=") + 2,
            )
    return Evidence(tuple(assignments))


def serialize_evidence(evidence: Evidence) -> str:
    lines = []
    for name, value in evidence.assignments:
        text = format_number(value) if isinstance(value, float) else value
        lines.append(f"{name} = {text}")
    return "\n".join(lines) + "\n" if lines else ""
