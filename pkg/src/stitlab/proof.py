"""Hilbert system for stit logic: axiom matching and proof-script checking.

Axiom schemes (every formula is compared after desugaring):

* ``Taut`` - propositional tautologies, decided by truth tables over the
  maximal non-Boolean subformulas;
* ``K``, ``T``, ``5`` for ``[]`` and for each ``[j]``;
* ``A2``: ``[]A -> [j]A``;
* ``A3``: ``(<>[j1]A1 & ... & <>[jk]Ak) -> <>([j1]A1 & ... & [jk]Ak)`` with
  pairwise different agents, ``k >= 1``.

Rules are modus ponens and necessitation for ``[]``.  Scripts carry no
hypotheses, so ``nec`` applies to any earlier line.

Text format, one line each::

    <idx>. <formula> ; taut | ax:K([]) | ax:T([2]) | ax:5([]) | ax:A2([3]) | ax:A3 | mp <i> <j> | nec <i>

``mp i j`` takes line ``i`` = ``X`` and line ``j`` = ``X -> this``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Union

import numpy as np

from .syntax import (
    BOTTOM, Bottom, Box, Formula, Implies, ParseError, Stit, desugar, parse, to_text,
)

__all__ = [
    "BOX", "SchemeId", "Axiom", "MP", "Nec", "ProofLine", "ProofScript", "CheckResult",
    "ProofFormatError", "match_axiom", "is_tautology", "check_proof",
    "parse_script", "format_script", "all_schemes",
]

BOX = "[]"
Modality = Union[str, int]  # "[]" or an agent


@dataclass(frozen=True)
class SchemeId:
    """An axiom scheme; ``modality`` is ``"[]"`` or an agent where relevant."""

    kind: str  # Taut | K | T | 5 | A2 | A3
    modality: Modality | None = None

    def __post_init__(self):
        if self.kind not in ("Taut", "K", "T", "5", "A2", "A3"):
            raise ValueError(f"unknown scheme {self.kind!r}")
        needs = self.kind in ("K", "T", "5", "A2")
        if needs and self.modality is None:
            raise ValueError(f"scheme {self.kind} needs a modality")
        if self.kind == "A2" and not isinstance(self.modality, int):
            raise ValueError("A2 is indexed by an agent")
        if isinstance(self.modality, int) and self.modality < 1:
            raise ValueError(f"agent ids are positive, got {self.modality}")
        if self.modality is not None and not isinstance(self.modality, int) and self.modality != BOX:
            raise ValueError(f"unknown modality {self.modality!r}")

    def __str__(self) -> str:
        if self.kind == "Taut":
            return "taut"
        if self.kind == "A3":
            return "ax:A3"
        mod = BOX if self.modality == BOX else f"[{self.modality}]"
        return f"ax:{self.kind}({mod})"


TAUT = SchemeId("Taut")
A3 = SchemeId("A3")


def all_schemes(agents: Iterable[int]) -> list[SchemeId]:
    mods: list[Modality] = [BOX, *sorted(agents)]
    out = [TAUT, A3]
    for m in mods:
        out += [SchemeId("K", m), SchemeId("T", m), SchemeId("5", m)]
    out += [SchemeId("A2", j) for j in sorted(agents)]
    return out


@dataclass(frozen=True)
class Axiom:
    scheme: SchemeId
    instantiation: dict | None = field(default=None, compare=False)

    def __str__(self):
        return str(self.scheme)


@dataclass(frozen=True)
class MP:
    minor: int  # line holding X
    major: int  # line holding X -> Y

    def __str__(self):
        return f"mp {self.minor} {self.major}"


@dataclass(frozen=True)
class Nec:
    premise: int

    def __str__(self):
        return f"nec {self.premise}"


Justification = Union[Axiom, MP, Nec]


@dataclass(frozen=True)
class ProofLine:
    index: int
    formula: Formula
    justification: Justification


@dataclass(frozen=True)
class ProofScript:
    lines: tuple[ProofLine, ...]

    @property
    def conclusion(self) -> Formula:
        if not self.lines:
            raise ValueError("empty proof script")
        return self.lines[-1].formula

    def __len__(self):
        return len(self.lines)

    def __str__(self):
        return format_script(self)


@dataclass(frozen=True)
class CheckResult:
    ok: bool
    line: int | None = None
    reason: str = ""

    def __bool__(self):
        return self.ok


# ---------------------------------------------------------------------------
# core-syntax helpers

def _neg(x: Formula) -> Formula:
    return Implies(x, BOTTOM)


def _un_neg(f: Formula) -> Formula | None:
    if isinstance(f, Implies) and isinstance(f.right, Bottom):
        return f.left
    return None


def _mod(m: Modality, x: Formula) -> Formula:
    return Box(x) if m == BOX else Stit(m, x)


def _un_mod(m: Modality, f: Formula) -> Formula | None:
    if m == BOX:
        return f.body if isinstance(f, Box) else None
    return f.body if isinstance(f, Stit) and f.agent == m else None


def _un_dual(m: Modality, f: Formula) -> Formula | None:
    """Body ``x`` if ``f`` is ``~M~x``."""
    inner = _un_neg(f)
    if inner is None:
        return None
    body = _un_mod(m, inner)
    return None if body is None else _un_neg(body)


def _un_and(f: Formula) -> tuple[Formula, Formula] | None:
    inner = _un_neg(f)
    if isinstance(inner, Implies):
        right = _un_neg(inner.right)
        if right is not None:
            return inner.left, right
    return None


def _flatten_and(f: Formula) -> list[Formula]:
    parts = _un_and(f)
    if parts is None:
        return [f]
    return _flatten_and(parts[0]) + _flatten_and(parts[1])


# ---------------------------------------------------------------------------
# tautologies

def _bool_atoms(f: Formula, acc: dict[Formula, int]) -> None:
    if isinstance(f, Implies):
        _bool_atoms(f.left, acc)
        _bool_atoms(f.right, acc)
    elif not isinstance(f, Bottom):
        acc.setdefault(f, len(acc))


def _bool_eval(f: Formula, cols: dict[Formula, np.ndarray], n: int) -> np.ndarray:
    if isinstance(f, Implies):
        return ~_bool_eval(f.left, cols, n) | _bool_eval(f.right, cols, n)
    if isinstance(f, Bottom):
        return np.zeros(n, dtype=bool)
    return cols[f]


_CHUNK = 1 << 16


@lru_cache(maxsize=1 << 14)
def _taut_core(g: Formula) -> bool:
    atoms: dict[Formula, int] = {}
    _bool_atoms(g, atoms)
    k = len(atoms)
    total = 1 << k
    for lo in range(0, total, _CHUNK):
        rows = np.arange(lo, min(total, lo + _CHUNK), dtype=np.int64)
        cols = {a: ((rows >> i) & 1).astype(bool) for a, i in atoms.items()}
        if not _bool_eval(g, cols, len(rows)).all():
            return False
    return True


def is_tautology(f: Formula) -> bool:
    """Truth-table check, treating variables and modal subformulas as atoms."""
    return _taut_core(desugar(f))


def _taut_instantiation(g: Formula) -> dict:
    atoms: dict[Formula, int] = {}
    _bool_atoms(g, atoms)
    return {f"a{i}": a for a, i in atoms.items()}


# ---------------------------------------------------------------------------
# scheme matching

def _match(f: Formula, s: SchemeId) -> tuple[dict | None, str]:
    g = desugar(f)
    if s.kind == "Taut":
        if is_tautology(g):
            return _taut_instantiation(g), ""
        return None, "not a propositional tautology"
    if not isinstance(g, Implies):
        return None, "not an implication"
    ante, cons = g.left, g.right
    m = s.modality
    if s.kind == "K":
        a_to_b = _un_mod(m, ante)
        if not isinstance(a_to_b, Implies) or not isinstance(cons, Implies):
            return None, "not of the form M(A -> B) -> (MA -> MB)"
        a, b = a_to_b.left, a_to_b.right
        if _un_mod(m, cons.left) == a and _un_mod(m, cons.right) == b:
            return {"A": a, "B": b}, ""
        return None, "not of the form M(A -> B) -> (MA -> MB)"
    if s.kind == "T":
        a = _un_mod(m, ante)
        if a is not None and a == cons:
            return {"A": a}, ""
        return None, "not of the form MA -> A"
    if s.kind == "5":
        a = _un_dual(m, ante)
        if a is not None and _un_mod(m, cons) == ante:
            return {"A": a}, ""
        return None, "not of the form ~M~A -> M~M~A"
    if s.kind == "A2":
        a = _un_mod(BOX, ante)
        if a is not None and _un_mod(m, cons) == a:
            return {"A": a}, ""
        return None, "not of the form []A -> [j]A"
    # A3
    left = _flatten_and(ante)
    inner = _un_dual(BOX, cons)
    if inner is None:
        return None, "consequent is not a <>-formula"
    right = _flatten_and(inner)
    if len(left) != len(right):
        return None, "conjunct counts differ"
    agents, bodies = [], []
    for l, r in zip(left, right):
        if not isinstance(r, Stit):
            return None, "consequent conjunct is not an agent modality"
        if _un_dual(BOX, l) != r:
            return None, "antecedent conjunct does not match <>[j]A"
        agents.append(r.agent)
        bodies.append(r.body)
    if len(set(agents)) != len(agents):
        return None, "agents in A3 must be pairwise different"
    return {"agents": agents, "bodies": bodies}, ""


def match_axiom(f: Formula, s: SchemeId) -> dict | None:
    """The instantiation under which ``f`` is an instance of ``s``, else ``None``."""
    return _match(f, s)[0]


# ---------------------------------------------------------------------------
# checking

def check_proof(ps: ProofScript) -> CheckResult:
    """Check every line; report the first violation."""
    if not ps.lines:
        return CheckResult(False, None, "empty proof script")
    seen: dict[int, Formula] = {}
    for pos, line in enumerate(ps.lines, 1):
        if line.index != pos:
            return CheckResult(False, line.index, f"line numbered {line.index} at position {pos}")
        g = desugar(line.formula)
        j = line.justification
        if isinstance(j, Axiom):
            inst, why = _match(g, j.scheme)
            if inst is None:
                return CheckResult(False, pos, f"{j.scheme}: {why}")
        elif isinstance(j, MP):
            for ref in (j.minor, j.major):
                if ref not in seen:
                    return CheckResult(False, pos, f"reference to line {ref} is not to an earlier line")
            if seen[j.major] != Implies(seen[j.minor], g):
                return CheckResult(False, pos, f"line {j.major} is not line {j.minor} -> this formula")
        elif isinstance(j, Nec):
            if j.premise not in seen:
                return CheckResult(False, pos, f"reference to line {j.premise} is not to an earlier line")
            if g != Box(seen[j.premise]):
                return CheckResult(False, pos, f"not the necessitation of line {j.premise}")
        else:
            return CheckResult(False, pos, f"unknown justification {j!r}")
        seen[pos] = g
    return CheckResult(True)


# ---------------------------------------------------------------------------
# text format

class ProofFormatError(ValueError):
    pass


_JUST = re.compile(
    r"^(?:(?P<taut>taut)|ax:(?P<k>K|T|5|A2)\((?P<mod>\[\]|\[\d+\])\)|ax:(?P<a3>A3)"
    r"|mp\s+(?P<i>\d+)\s+(?P<j>\d+)|nec\s+(?P<n>\d+))$"
)


def _parse_just(text: str, lineno: int) -> Justification:
    m = _JUST.match(text.strip())
    if m is None:
        raise ProofFormatError(f"line {lineno}: unknown justification {text.strip()!r}")
    if m.group("taut"):
        return Axiom(TAUT)
    if m.group("a3"):
        return Axiom(A3)
    if m.group("k"):
        mod = m.group("mod")
        modality: Modality = BOX if mod == "[]" else int(mod[1:-1])
        try:
            return Axiom(SchemeId(m.group("k"), modality))
        except ValueError as exc:
            raise ProofFormatError(f"line {lineno}: {exc}") from None
    if m.group("i"):
        return MP(int(m.group("i")), int(m.group("j")))
    return Nec(int(m.group("n")))


def parse_script(text: str) -> ProofScript:
    lines = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        m = re.match(r"^(\d+)\.\s*(.*?)\s*;\s*(.*)$", s)
        if m is None:
            raise ProofFormatError(f"line {lineno}: expected '<idx>. <formula> ; <justification>'")
        try:
            f = parse(m.group(2))
        except ParseError as exc:
            raise ProofFormatError(f"line {lineno}: {exc}") from None
        lines.append(ProofLine(int(m.group(1)), f, _parse_just(m.group(3), lineno)))
    return ProofScript(tuple(lines))


def format_script(ps: ProofScript) -> str:
    return "\n".join(f"{l.index}. {to_text(l.formula)} ; {l.justification}" for l in ps.lines) + "\n"
