"""Formulas of the multi-agent Chellas stit language.

The core constructors are ``Var``, ``Bottom``, ``Implies``, ``Box`` and
``Stit``.  Everything else (``Not``, ``And``, ``Or``, ``Top``, ``Diamond``,
``StitDual``, ``DelibStit``) is sugar: it is kept as its own node so that
printing round-trips, and :func:`desugar` rewrites it into core syntax.

Concrete syntax::

    formula := impl
    impl    := or [ "->" impl ]
    or      := and { "|" and }
    and     := unary { "&" unary }
    unary   := "~" unary | "[]" unary | "<>" unary | "[" nat "]" unary
             | "<" nat ">" unary | "[d:" nat "]" unary | atom
    atom    := "false" | "true" | ident | "(" impl ")"
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np

__all__ = [
    "Formula", "Var", "Bottom", "Implies", "Box", "Stit",
    "Top", "Not", "And", "Or", "Diamond", "StitDual", "DelibStit",
    "ParseError", "Vocabulary",
    "parse", "to_text", "desugar", "resugar", "vocabulary", "size",
    "modal_depth", "project_boxed", "project_stit", "subformulas",
    "conj", "disj", "iff", "is_box_free_of_agents", "random_formula",
    "enumerate_formulas",
]


class Formula:
    """Base class of all formula nodes."""

    __slots__ = ()

    def __str__(self) -> str:
        return to_text(self)


def _check_agent(agent: int) -> None:
    if isinstance(agent, bool) or not isinstance(agent, int) or agent < 1:
        raise ValueError(f"agents are positive integers, got {agent!r}")


@dataclass(frozen=True, slots=True)
class Var(Formula):
    name: str

    def __post_init__(self):
        if not _IDENT.fullmatch(self.name) or self.name in _KEYWORDS:
            raise ValueError(f"invalid variable name {self.name!r}")


@dataclass(frozen=True, slots=True)
class Bottom(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Box(Formula):
    body: Formula


@dataclass(frozen=True, slots=True)
class Stit(Formula):
    agent: int
    body: Formula

    def __post_init__(self):
        _check_agent(self.agent)


# sugar

@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Diamond(Formula):
    body: Formula


@dataclass(frozen=True, slots=True)
class StitDual(Formula):
    agent: int
    body: Formula

    def __post_init__(self):
        _check_agent(self.agent)


@dataclass(frozen=True, slots=True)
class DelibStit(Formula):
    agent: int
    body: Formula

    def __post_init__(self):
        _check_agent(self.agent)


CORE_TYPES = (Var, Bottom, Implies, Box, Stit)
BOTTOM = Bottom()


def conj(parts: Iterable[Formula]) -> Formula:
    """Left-nested conjunction; the empty conjunction is ``Top()``."""
    parts = list(parts)
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disj(parts: Iterable[Formula]) -> Formula:
    parts = list(parts)
    if not parts:
        return BOTTOM
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def iff(a: Formula, b: Formula) -> Formula:
    return And(Implies(a, b), Implies(b, a))


# ---------------------------------------------------------------------------
# desugaring

@lru_cache(maxsize=1 << 16)
def desugar(f: Formula) -> Formula:
    """Rewrite ``f`` into the core constructors (idempotent)."""
    if isinstance(f, (Var, Bottom)):
        return f
    if isinstance(f, Implies):
        return Implies(desugar(f.left), desugar(f.right))
    if isinstance(f, Box):
        return Box(desugar(f.body))
    if isinstance(f, Stit):
        return Stit(f.agent, desugar(f.body))
    if isinstance(f, Top):
        return Implies(BOTTOM, BOTTOM)
    if isinstance(f, Not):
        return Implies(desugar(f.body), BOTTOM)
    if isinstance(f, And):
        return Implies(Implies(desugar(f.left), Implies(desugar(f.right), BOTTOM)), BOTTOM)
    if isinstance(f, Or):
        return Implies(Implies(desugar(f.left), BOTTOM), desugar(f.right))
    if isinstance(f, Diamond):
        return Implies(Box(Implies(desugar(f.body), BOTTOM)), BOTTOM)
    if isinstance(f, StitDual):
        return Implies(Stit(f.agent, Implies(desugar(f.body), BOTTOM)), BOTTOM)
    if isinstance(f, DelibStit):
        body = desugar(f.body)
        return desugar(And(Stit(f.agent, body), Not(Box(body))))
    raise TypeError(f"not a formula: {f!r}")


def _neg_body(f: Formula) -> Formula | None:
    if isinstance(f, Implies) and isinstance(f.right, Bottom):
        return f.left
    return None


def resugar(f: Formula) -> Formula:
    """Recover readable sugar from core syntax; ``desugar(resugar(f)) == desugar(f)``."""
    return _resugar(desugar(f))


def _resugar(f: Formula) -> Formula:
    if isinstance(f, (Var, Bottom)):
        return f
    if isinstance(f, Box):
        return Box(_resugar(f.body))
    if isinstance(f, Stit):
        return Stit(f.agent, _resugar(f.body))
    left, right = f.left, f.right
    if isinstance(left, Bottom) and isinstance(right, Bottom):
        return Top()
    if isinstance(right, Bottom):
        if isinstance(left, Box) and _neg_body(left.body) is not None:
            return Diamond(_resugar(_neg_body(left.body)))
        if isinstance(left, Stit) and _neg_body(left.body) is not None:
            return StitDual(left.agent, _resugar(_neg_body(left.body)))
        if isinstance(left, Implies) and _neg_body(left.right) is not None:
            return And(_resugar(left.left), _resugar(_neg_body(left.right)))
        return Not(_resugar(left))
    a = _neg_body(left)
    if a is not None and not isinstance(a, Bottom):
        return Or(_resugar(a), _resugar(right))
    return Implies(_resugar(left), _resugar(right))


# ---------------------------------------------------------------------------
# structural measures

@dataclass(frozen=True)
class Vocabulary:
    vars: frozenset[str]
    agents: frozenset[int]

    def __or__(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.vars | other.vars, self.agents | other.agents)

    def __and__(self, other: "Vocabulary") -> "Vocabulary":
        return Vocabulary(self.vars & other.vars, self.agents & other.agents)


def subformulas(f: Formula) -> Iterator[Formula]:
    """Pre-order traversal of ``f`` as written (sugar included)."""
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        if isinstance(g, (Implies, And, Or)):
            stack.append(g.right)
            stack.append(g.left)
        elif isinstance(g, (Box, Stit, Not, Diamond, StitDual, DelibStit)):
            stack.append(g.body)


def vocabulary(f: Formula | Iterable[Formula]) -> Vocabulary:
    """Variables and agents occurring in ``f`` (or in a collection of formulas)."""
    fs = [f] if isinstance(f, Formula) else list(f)
    vars_: set[str] = set()
    agents: set[int] = set()
    for g in fs:
        for s in subformulas(g):
            if isinstance(s, Var):
                vars_.add(s.name)
            elif isinstance(s, (Stit, StitDual, DelibStit)):
                agents.add(s.agent)
    return Vocabulary(frozenset(vars_), frozenset(agents))


@lru_cache(maxsize=1 << 16)
def size(f: Formula) -> int:
    """Number of AST nodes after desugaring."""
    g = desugar(f)
    if isinstance(g, (Var, Bottom)):
        return 1
    if isinstance(g, Implies):
        return 1 + size(g.left) + size(g.right)
    return 1 + size(g.body)


def modal_depth(f: Formula) -> int:
    g = desugar(f)
    if isinstance(g, (Var, Bottom)):
        return 0
    if isinstance(g, Implies):
        return max(modal_depth(g.left), modal_depth(g.right))
    return 1 + modal_depth(g.body)


def project_boxed(fs: Iterable[Formula]) -> set[Formula]:
    return {f for f in fs if isinstance(f, Box)}


def project_stit(fs: Iterable[Formula], agent: int) -> set[Formula]:
    return {f for f in fs if isinstance(f, Stit) and f.agent == agent}


def is_box_free_of_agents(f: Formula) -> bool:
    """True iff ``f`` contains no action modality (the agent-free fragment)."""
    return not vocabulary(f).agents


# ---------------------------------------------------------------------------
# printing

_IMPL, _OR, _AND, _UNARY = 1, 2, 3, 4


def to_text(f: Formula) -> str:
    """Render ``f`` with minimal parentheses; ``parse(to_text(f)) == f``."""
    return _fmt(f, _IMPL)


def _fmt(f: Formula, ctx: int) -> str:
    if isinstance(f, Var):
        return f.name
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Implies):
        s, prec = f"{_fmt(f.left, _OR)} -> {_fmt(f.right, _IMPL)}", _IMPL
    elif isinstance(f, Or):
        s, prec = f"{_fmt(f.left, _OR)} | {_fmt(f.right, _AND)}", _OR
    elif isinstance(f, And):
        s, prec = f"{_fmt(f.left, _AND)} & {_fmt(f.right, _UNARY)}", _AND
    else:
        if isinstance(f, Not):
            op = "~"
        elif isinstance(f, Box):
            op = "[]"
        elif isinstance(f, Diamond):
            op = "<>"
        elif isinstance(f, Stit):
            op = f"[{f.agent}]"
        elif isinstance(f, StitDual):
            op = f"<{f.agent}>"
        elif isinstance(f, DelibStit):
            op = f"[d:{f.agent}]"
        else:
            raise TypeError(f"not a formula: {f!r}")
        s, prec = op + _fmt(f.body, _UNARY), _UNARY
    return f"({s})" if prec < ctx else s


# ---------------------------------------------------------------------------
# parsing

_IDENT = re.compile(r"[a-z][a-z0-9_]*")
_KEYWORDS = {"false", "true"}

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<arrow>->)
  | (?P<box>\[\])
  | (?P<dia><>)
  | (?P<delib>\[d:(?P<dn>\d+)\])
  | (?P<stit>\[(?P<sn>\d+)\])
  | (?P<dual><(?P<un>\d+)>)
  | (?P<sym>[~&|()])
  | (?P<ident>[a-z][a-z0-9_]*)
    """,
    re.VERBOSE,
)


class ParseError(ValueError):
    """Syntax error; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, pos: int, text: str):
        super().__init__(f"{message} at position {pos}: {text[:pos]}‸{text[pos:]}")
        self.pos = pos
        self.text = text


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        if kind in ("dn", "sn", "un"):  # inner groups never end a match
            kind = next(k for k in ("delib", "stit", "dual") if m.group(k))
        if kind == "ws":
            pass
        elif kind in ("delib", "stit", "dual"):
            num = m.group({"delib": "dn", "stit": "sn", "dual": "un"}[kind])
            if num.startswith("0"):
                raise ParseError("agent index must be a positive integer", pos, text)
            out.append((kind, int(num), pos))
        elif kind == "ident":
            word = m.group()
            out.append((word if word in _KEYWORDS else "ident", word, pos))
        elif kind == "sym":
            out.append((m.group(), m.group(), pos))
        else:
            out.append((kind, m.group(), pos))
        pos = m.end()
    out.append(("eof", None, len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, expected: str):
        kind, val, pos = self.toks[self.i]
        got = "end of input" if kind == "eof" else repr(self.text[pos:pos + 8].split()[0] if self.text[pos:].strip() else kind)
        raise ParseError(f"expected {expected}, got {got}", pos, self.text)

    def formula(self) -> Formula:
        f = self.impl()
        if self.peek() != "eof":
            self.fail("'->', '|', '&' or end of input")
        return f

    def impl(self) -> Formula:
        left = self.or_()
        if self.peek() == "arrow":
            self.take()
            return Implies(left, self.impl())
        return left

    def or_(self) -> Formula:
        f = self.and_()
        while self.peek() == "|":
            self.take()
            f = Or(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.unary()
        while self.peek() == "&":
            self.take()
            f = And(f, self.unary())
        return f

    def unary(self) -> Formula:
        kind = self.peek()
        if kind == "~":
            self.take()
            return Not(self.unary())
        if kind == "box":
            self.take()
            return Box(self.unary())
        if kind == "dia":
            self.take()
            return Diamond(self.unary())
        if kind == "stit":
            return Stit(self.take()[1], self.unary())
        if kind == "dual":
            return StitDual(self.take()[1], self.unary())
        if kind == "delib":
            return DelibStit(self.take()[1], self.unary())
        return self.atom()

    def atom(self) -> Formula:
        kind = self.peek()
        if kind == "false":
            self.take()
            return BOTTOM
        if kind == "true":
            self.take()
            return Top()
        if kind == "ident":
            return Var(self.take()[1])
        if kind == "(":
            self.take()
            f = self.impl()
            if self.peek() != ")":
                self.fail("')'")
            self.take()
            return f
        self.fail("a formula")


def parse(text: str) -> Formula:
    """Parse concrete syntax into a :class:`Formula`.

    >>> parse("<>([1]p & [2](p -> q))")
    Diamond(body=And(left=Stit(agent=1, body=Var(name='p')), right=Stit(agent=2, body=Implies(left=Var(name='p'), right=Var(name='q')))))
    """
    return _Parser(text).formula()


# ---------------------------------------------------------------------------
# random generation

_SUGAR_UNARY = ("not", "box", "dia", "stit", "dual", "delib")
_CORE_UNARY = ("box", "stit")


def random_formula(
    rng: np.random.Generator,
    depth: int,
    variables: Iterable[str] = ("p", "q"),
    agents: Iterable[int] = (1, 2),
    sugar: bool = True,
) -> Formula:
    """Random formula of nesting depth at most ``depth``.

    With ``sugar=False`` only core constructors are produced.  Agent
    modalities are skipped when ``agents`` is empty.
    """
    variables = list(variables)
    agents = list(agents)
    leaves = [Var(v) for v in variables] + [BOTTOM] + ([Top()] if sugar else [])
    unary = [u for u in (_SUGAR_UNARY if sugar else _CORE_UNARY)
             if agents or u not in ("stit", "dual", "delib")]
    binary = ("imp", "and", "or") if sugar else ("imp",)

    def gen(d: int) -> Formula:
        if d == 0 or rng.random() < 0.25:
            return leaves[rng.integers(len(leaves))]
        if rng.random() < 0.45:
            op = unary[rng.integers(len(unary))]
            body = gen(d - 1)
            if op == "not":
                return Not(body)
            if op == "box":
                return Box(body)
            if op == "dia":
                return Diamond(body)
            j = int(agents[rng.integers(len(agents))])
            return {"stit": Stit, "dual": StitDual, "delib": DelibStit}[op](j, body)
        op = binary[rng.integers(len(binary))]
        a, b = gen(d - 1), gen(d - 1)
        return {"imp": Implies, "and": And, "or": Or}[op](a, b)

    return gen(depth)


# ---------------------------------------------------------------------------
# exhaustive enumeration

def enumerate_formulas(
    variables: Iterable[str],
    agents: Iterable[int] = (),
    max_size: int = 5,
) -> Iterator[Formula]:
    """Every core formula over the vocabulary with ``size <= max_size``.

    Order is canonical: by size, then leaves (``false`` before variables),
    ``[]``, ``[j]`` by agent, and implications by left size.
    """
    leaves = [BOTTOM] + [Var(v) for v in sorted(set(variables))]
    ags = sorted(set(agents))
    levels: list[list[Formula]] = [[], leaves]
    yield from leaves
    for k in range(2, max_size + 1):
        level = [Box(f) for f in levels[k - 1]]
        for j in ags:
            level.extend(Stit(j, f) for f in levels[k - 1])
        for i in range(1, k - 1):
            level.extend(Implies(a, b) for a in levels[i] for b in levels[k - 1 - i])
        levels.append(level)
        yield from level
