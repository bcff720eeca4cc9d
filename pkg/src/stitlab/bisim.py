"""Bisimulations between pointed stit models.

A relation links histories through the left point's moment with histories
through the right point's moment.  It is a bisimulation for a variable set
when it is total on both sides and satisfies the atoms, forth and back
clauses for every shared agent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from .semantics import ModelError, StitModel, truth_set
from .syntax import Formula, enumerate_formulas, is_box_free_of_agents, modal_depth, to_text, vocabulary

__all__ = [
    "PointedModel", "HistoryRelation", "BisimViolation", "BisimResult",
    "Agree", "Disagree", "AgreementReport", "TransferError",
    "is_bisimulation", "max_bisimulation", "transfer_check", "transfer_suite",
    "atoms_only_agreement", "diagonal", "load_relation", "save_relation",
]


class TransferError(ValueError):
    """A transfer or agreement check was called outside its preconditions."""


@dataclass(frozen=True)
class PointedModel:
    model: StitModel
    moment: str

    def __post_init__(self):
        if self.moment not in self.model.moments:
            raise ModelError(f"unknown moment {self.moment!r}")

    @property
    def histories(self) -> frozenset[str]:
        return self.model.histories_through(self.moment)

    def cell(self, j: int, h: str) -> frozenset[str]:
        return self.model.cell(self.moment, j, h)

    def true_at(self, var: str, h: str) -> bool:
        return self.model.true_at(var, self.moment, h)


@dataclass(frozen=True)
class HistoryRelation:
    pairs: frozenset[tuple[str, str]]

    def __init__(self, pairs: Iterable[tuple[str, str]] = ()):
        object.__setattr__(self, "pairs", frozenset((str(a), str(b)) for a, b in pairs))

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __le__(self, other: "HistoryRelation") -> bool:
        return self.pairs <= other.pairs

    def without(self, *pairs: tuple[str, str]) -> "HistoryRelation":
        return HistoryRelation(self.pairs - {tuple(p) for p in pairs})

    def domain(self) -> frozenset[str]:
        return frozenset(a for a, _ in self.pairs)

    def counterdomain(self) -> frozenset[str]:
        return frozenset(b for _, b in self.pairs)

    def to_dict(self) -> dict:
        return {"pairs": [list(p) for p in sorted(self.pairs)]}

    @classmethod
    def from_dict(cls, data) -> "HistoryRelation":
        try:
            return cls(tuple(p) for p in data["pairs"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed relation data: {exc}") from exc


def load_relation(path: str | Path) -> HistoryRelation:
    return HistoryRelation.from_dict(json.loads(Path(path).read_text()))


def save_relation(rel: HistoryRelation, path: str | Path) -> None:
    Path(path).write_text(json.dumps(rel.to_dict(), indent=1) + "\n")


def diagonal(point: PointedModel) -> HistoryRelation:
    return HistoryRelation((h, h) for h in point.histories)


@dataclass(frozen=True)
class BisimViolation:
    condition: str  # membership, domain, counterdomain, agents, atoms, forth, back
    message: str
    witness: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"condition": self.condition, "message": self.message, "witness": self.witness}


@dataclass(frozen=True)
class BisimResult:
    violations: tuple[BisimViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    @property
    def first(self) -> BisimViolation | None:
        return self.violations[0] if self.violations else None

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def _shared_agents(left: PointedModel, right: PointedModel) -> tuple[int, ...]:
    return tuple(sorted(set(left.model.agents) | set(right.model.agents)))


def is_bisimulation(
    left: PointedModel,
    right: PointedModel,
    R: HistoryRelation,
    vars: Iterable[str],
    *,
    limit: int = 20,
) -> BisimResult:
    """Check every clause; up to ``limit`` violations are reported, in clause order."""
    vars = sorted(set(vars))
    H, G = left.histories, right.histories
    out: list[BisimViolation] = []

    def add(v: BisimViolation) -> bool:
        out.append(v)
        return len(out) >= limit

    for a, b in sorted(R.pairs):
        if a not in H or b not in G:
            if add(BisimViolation("membership", "pair outside H_m x H'_m'", {"pair": [a, b]})):
                return BisimResult(tuple(out))
    if out:
        return BisimResult(tuple(out))

    missing = sorted(H - R.domain())
    if missing:
        add(BisimViolation("domain", "left histories with no partner", {"histories": missing}))
    missing = sorted(G - R.counterdomain())
    if missing:
        add(BisimViolation("counterdomain", "right histories with no partner", {"histories": missing}))

    agents = _shared_agents(left, right)
    for j in agents:
        for side, pm in (("left", left), ("right", right)):
            if j not in pm.model.agents:
                add(BisimViolation("agents", f"agent {j} is missing from the {side} model",
                                   {"agent": j, "side": side}))
    agents = tuple(j for j in agents if j in left.model.agents and j in right.model.agents)

    pairs = sorted(R.pairs)
    for a, b in pairs:
        for v in vars:
            if left.true_at(v, a) != right.true_at(v, b):
                if add(BisimViolation("atoms", f"{v} differs on a related pair",
                                      {"pair": [a, b], "var": v,
                                       "left": left.true_at(v, a), "right": right.true_at(v, b)})):
                    return BisimResult(tuple(out))

    for a, b in pairs:
        for j in agents:
            ca, cb = left.cell(j, a), right.cell(j, b)
            for a2 in sorted(ca):
                if not any((a2, b2) in R.pairs for b2 in cb):
                    if add(BisimViolation("forth", f"no partner in agent {j}'s cell",
                                          {"pair": [a, b], "agent": j, "history": a2,
                                           "cell": sorted(cb)})):
                        return BisimResult(tuple(out))
            for b2 in sorted(cb):
                if not any((a2, b2) in R.pairs for a2 in ca):
                    if add(BisimViolation("back", f"no partner in agent {j}'s cell",
                                          {"pair": [a, b], "agent": j, "history": b2,
                                           "cell": sorted(ca)})):
                        return BisimResult(tuple(out))
    return BisimResult(tuple(out))


def _cell_matrix(pm: PointedModel, j: int, hs: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """One-hot cell membership ``(n, k)`` and the cell index of each history."""
    cells = sorted({pm.cell(j, h) for h in hs}, key=lambda c: sorted(c))
    pos = {h: i for i, h in enumerate(hs)}
    mat = np.zeros((len(hs), len(cells)), dtype=bool)
    idx = np.zeros(len(hs), dtype=int)
    for k, c in enumerate(cells):
        for h in c:
            mat[pos[h], k] = True
            idx[pos[h]] = k
    return mat, idx


def max_bisimulation(left: PointedModel, right: PointedModel, vars: Iterable[str]) -> HistoryRelation:
    """Largest relation satisfying atoms, forth and back; totality is not enforced."""
    vars = sorted(set(vars))
    hs, gs = sorted(left.histories), sorted(right.histories)
    R = np.ones((len(hs), len(gs)), dtype=bool)
    for v in vars:
        lv = np.array([left.true_at(v, h) for h in hs])
        rv = np.array([right.true_at(v, g) for g in gs])
        R &= lv[:, None] == rv[None, :]
    agents = [j for j in _shared_agents(left, right)
              if j in left.model.agents and j in right.model.agents]
    if len(agents) < len(_shared_agents(left, right)):
        return HistoryRelation()
    mats = [(_cell_matrix(left, j, hs), _cell_matrix(right, j, gs)) for j in agents]
    while True:
        keep = R.copy()
        for (lm, li), (rm, ri) in mats:
            lm32, rm32, r32 = lm.astype(np.int32), rm.astype(np.int32), R.astype(np.int32)
            to_right = (r32 @ rm32) > 0    # [h, b]: h has a partner in right cell b
            to_left = (r32.T @ lm32) > 0   # [g, a]: g has a partner in left cell a
            # [a, b]: every member of one cell has a partner in the other
            forth = (lm32.T @ (~to_right).astype(np.int32)) == 0
            back = ((~to_left).astype(np.int32).T @ rm32) == 0
            ok = forth & back
            keep &= ok[li][:, ri]
        if np.array_equal(keep, R):
            break
        R = keep
    return HistoryRelation((hs[i], gs[k]) for i, k in zip(*np.nonzero(R)))


@dataclass(frozen=True)
class Agree:
    value: bool
    agrees = True


@dataclass(frozen=True)
class Disagree:
    formula: Formula
    pair: tuple[str, str]
    left: bool
    right: bool
    agrees = False

    def to_dict(self) -> dict:
        return {"formula": to_text(self.formula), "pair": list(self.pair),
                "left": self.left, "right": self.right}


def _check_language(left: PointedModel, right: PointedModel, f: Formula, vars) -> None:
    voc = vocabulary(f)
    extra = voc.vars - set(vars)
    if extra:
        raise TransferError(f"formula uses variables outside the relation's vocabulary: {sorted(extra)}")
    for pm in (left, right):
        if not voc.agents <= set(pm.model.agents):
            raise TransferError(f"formula mentions agents {sorted(voc.agents - set(pm.model.agents))}"
                                " unknown to a model")


def transfer_check(
    left: PointedModel,
    right: PointedModel,
    R: HistoryRelation,
    h: str,
    h2: str,
    f: Formula,
    vars: Iterable[str] | None = None,
    *,
    require_bisimulation: bool = True,
) -> Agree | Disagree:
    """Evaluate ``f`` at a related pair on both sides.

    Bisimilar points agree on every formula of the vocabulary, so a
    ``Disagree`` with the precondition checked is a bug somewhere upstream.
    """
    vars = sorted(vocabulary(f).vars) if vars is None else sorted(set(vars))
    if (h, h2) not in R:
        raise TransferError(f"({h!r}, {h2!r}) is not in the relation")
    _check_language(left, right, f, vars)
    if require_bisimulation:
        res = is_bisimulation(left, right, R, vars, limit=1)
        if not res.ok:
            raise TransferError(f"relation is not a bisimulation: {res.first.condition}")
    a = h in truth_set(left.model, left.moment, f)
    b = h2 in truth_set(right.model, right.moment, f)
    return Agree(a) if a == b else Disagree(f, (h, h2), a, b)


def transfer_suite(
    left: PointedModel,
    right: PointedModel,
    R: HistoryRelation,
    formulas: Iterable[Formula],
    vars: Iterable[str],
    *,
    require_bisimulation: bool = True,
) -> list[Disagree]:
    """Every disagreement over all related pairs and formulas (empty when transfer holds)."""
    vars = sorted(set(vars))
    if require_bisimulation:
        res = is_bisimulation(left, right, R, vars, limit=1)
        if not res.ok:
            raise TransferError(f"relation is not a bisimulation: {res.first.condition}")
    out = []
    for f in formulas:
        _check_language(left, right, f, vars)
        ta = truth_set(left.model, left.moment, f)
        tb = truth_set(right.model, right.moment, f)
        for a, b in sorted(R.pairs):
            if (a in ta) != (b in tb):
                out.append(Disagree(f, (a, b), a in ta, b in tb))
    return out


@dataclass(frozen=True)
class AgreementReport:
    ok: bool
    checked: int
    bounds: dict
    counterexample: Disagree | None = None

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        d = {"ok": self.ok, "checked": self.checked, "bounds": self.bounds}
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample.to_dict()
        return d


def atoms_only_agreement(
    left: PointedModel,
    right: PointedModel,
    R: HistoryRelation,
    vars: Iterable[str],
    *,
    max_size: int = 7,
    max_depth: int | None = None,
    formulas: Iterable[Formula] | None = None,
) -> AgreementReport:
    """Agreement of related pairs on the fragment without action modalities.

    Totality and atoms are enough for this fragment.  By default every core
    formula up to ``max_size`` (and ``max_depth`` if given) is checked;
    an explicit ``formulas`` list must stay inside the fragment.
    """
    vars = sorted(set(vars))
    res = is_bisimulation(left, right, R, vars, limit=1000)
    pre = [v for v in res.violations if v.condition in ("membership", "domain", "counterdomain", "atoms")]
    if pre:
        raise TransferError(f"relation fails {pre[0].condition}: {pre[0].message}")
    if formulas is None:
        pool = (f for f in enumerate_formulas(vars, (), max_size)
                if max_depth is None or modal_depth(f) <= max_depth)
    else:
        pool = list(formulas)
        for f in pool:
            if not is_box_free_of_agents(f):
                raise TransferError(f"{to_text(f)} is outside the fragment without action modalities")
            if not vocabulary(f).vars <= set(vars):
                raise TransferError(f"{to_text(f)} uses variables outside {vars}")
    bounds = {"max_size": max_size, "max_depth": max_depth} if formulas is None else {"explicit": True}
    n = 0
    for f in pool:
        n += 1
        ta = truth_set(left.model, left.moment, f)
        tb = truth_set(right.model, right.moment, f)
        for a, b in sorted(R.pairs):
            if (a in ta) != (b in tb):
                return AgreementReport(False, n, bounds, Disagree(f, (a, b), a in ta, b in tb))
    return AgreementReport(True, n, bounds)
