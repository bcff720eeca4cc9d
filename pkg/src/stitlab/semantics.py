"""Finite stit models: histories, frame constraints and satisfaction.

A model is a finite tree of moments ordered by ``<=``, a choice partition of
the histories through each moment for each agent, and a valuation on
moment-history pairs.  Histories are never given explicitly; they are the
maximal chains of the order and are named by joining their moments with
``">"`` (``"dag>t0000p"``).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .syntax import Bottom, Box, Formula, Implies, Stit, Var, desugar, vocabulary

__all__ = [
    "ModelError", "History", "Violation", "StitModel",
    "histories", "undivided", "validate", "satisfies", "valid_in_model",
    "truth_set", "load_model", "save_model", "random_model",
]


class ModelError(ValueError):
    """Raised for ill-formed model input or invalid moment-history pairs."""


@dataclass(frozen=True)
class History:
    moments: tuple[str, ...]

    @property
    def name(self) -> str:
        return ">".join(self.moments)

    def __contains__(self, moment: str) -> bool:
        return moment in self.moments

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Violation:
    constraint: str
    message: str
    witness: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"constraint": self.constraint, "message": self.message,
                "witness": _jsonable(self.witness)}


def _jsonable(x):
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (set, frozenset)):
        return sorted(_jsonable(v) for v in x)
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


class StitModel:
    """A finite ``(Ag, V)``-stit model.

    ``order`` may be any set of pairs ``(a, b)`` meaning ``a <= b``; its
    reflexive-transitive closure is taken.  ``choice`` maps a moment to a
    mapping from agent to a list of cells, each cell a collection of history
    names.  A missing ``(moment, agent)`` entry stands for the vacuous
    partition ``{H_m}``.  ``valuation`` holds ``(var, moment, history_name)``
    triples.

    Instances are treated as immutable once built.
    """

    def __init__(
        self,
        moments: Iterable[str],
        order: Iterable[tuple[str, str]],
        agents: Iterable[int],
        choice: Mapping[str, Mapping[int, Iterable[Iterable[str]]]] | None = None,
        valuation: Iterable[tuple[str, str, str]] = (),
        variables: Iterable[str] | None = None,
    ):
        self.moments: tuple[str, ...] = tuple(moments)
        if len(set(self.moments)) != len(self.moments):
            raise ModelError("duplicate moment names")
        known = set(self.moments)
        pairs = set()
        for a, b in order:
            if a not in known or b not in known:
                raise ModelError(f"order pair ({a!r}, {b!r}) mentions an unknown moment")
            pairs.add((a, b))
        self.order: frozenset[tuple[str, str]] = _closure(self.moments, pairs)
        self.agents: tuple[int, ...] = tuple(sorted(set(int(j) for j in agents)))
        self._choice_in = {
            str(m): {int(j): [frozenset(c) for c in cells] for j, cells in per.items()}
            for m, per in (choice or {}).items()
        }
        self.valuation: frozenset[tuple[str, str, str]] = frozenset(
            (str(v), str(m), str(h)) for v, m, h in valuation)
        declared = None if variables is None else frozenset(variables)
        self._declared_vars = declared
        self._memo: dict = {}

    # --- order ---------------------------------------------------------------

    def leq(self, a: str, b: str) -> bool:
        return (a, b) in self.order

    def lt(self, a: str, b: str) -> bool:
        return a != b and (a, b) in self.order

    @cached_property
    def antisymmetric(self) -> bool:
        return not any(a != b and (b, a) in self.order for a, b in self.order)

    # --- histories -----------------------------------------------------------

    @cached_property
    def histories(self) -> tuple[History, ...]:
        if not self.antisymmetric:
            raise ModelError("order is not antisymmetric; histories are undefined")
        below = {m: sum(1 for x in self.moments if self.leq(x, m)) for m in self.moments}
        covers = {m: [b for b in self.moments if self.lt(m, b) and not any(
            self.lt(m, c) and self.lt(c, b) for c in self.moments)] for m in self.moments}
        minimal = [m for m in self.moments if not any(self.lt(x, m) for x in self.moments)]
        out = []

        def walk(path):
            nxt = covers[path[-1]]
            if not nxt:
                out.append(History(tuple(sorted(path, key=below.__getitem__))))
                return
            for b in nxt:
                walk(path + [b])

        for m in minimal:
            walk([m])
        return tuple(sorted(out, key=lambda h: h.name))

    @cached_property
    def history_by_name(self) -> dict[str, History]:
        return {h.name: h for h in self.histories}

    @cached_property
    def _through(self) -> dict[str, frozenset[str]]:
        return {m: frozenset(h.name for h in self.histories if m in h) for m in self.moments}

    def histories_through(self, m: str) -> frozenset[str]:
        """``H_m`` as a set of history names."""
        if m not in self._through:
            raise ModelError(f"unknown moment {m!r}")
        return self._through[m]

    def mh_pairs(self) -> list[tuple[str, str]]:
        return [(m, h) for m in self.moments for h in sorted(self._through[m])]

    # --- choice --------------------------------------------------------------

    def partition(self, m: str, j: int) -> list[frozenset[str]]:
        """Cells of ``Choice^m_j`` as given (vacuous partition when absent)."""
        cells = self._choice_in.get(m, {}).get(j)
        if cells is None:
            return [self.histories_through(m)]
        return list(cells)

    @cached_property
    def _cell_index(self) -> dict[tuple[str, int, str], frozenset[str]]:
        idx = {}
        for m in self.moments:
            for j in self.agents:
                for cell in self.partition(m, j):
                    for h in cell:
                        idx.setdefault((m, j, h), cell)
        return idx

    def cell(self, m: str, j: int, h: str) -> frozenset[str]:
        """``Choice^m_j(h)``."""
        try:
            return self._cell_index[(m, j, h)]
        except KeyError:
            raise ModelError(f"history {h!r} is in no choice cell of agent {j} at {m!r}") from None

    def true_at(self, var: str, m: str, h: str) -> bool:
        return (var, m, h) in self.valuation

    @cached_property
    def variables(self) -> frozenset[str]:
        """The model's propositional language: declared, else those in the valuation."""
        used = frozenset(v for v, _, _ in self.valuation)
        return used if self._declared_vars is None else self._declared_vars | used

    # --- (de)serialisation ---------------------------------------------------

    def to_dict(self) -> dict:
        covers = sorted((a, b) for a, b in self.order if a != b)
        return {
            "moments": list(self.moments),
            "order": [list(p) for p in covers],
            "agents": list(self.agents),
            "choice": {m: {str(j): [sorted(c) for c in self.partition(m, j)]
                           for j in self.agents}
                       for m in self.moments},
            "valuation": [list(t) for t in sorted(self.valuation)],
            "variables": sorted(self.variables),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "StitModel":
        try:
            return cls(
                moments=data["moments"],
                order=[tuple(p) for p in data.get("order", [])],
                agents=data.get("agents", []),
                choice={m: {int(j): cells for j, cells in per.items()}
                        for m, per in data.get("choice", {}).items()},
                valuation=[tuple(t) for t in data.get("valuation", [])],
                variables=data.get("variables"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelError):
                raise
            raise ModelError(f"malformed model data: {exc}") from exc

    def replace(self, **changes) -> "StitModel":
        args = dict(moments=self.moments, order=self.order, agents=self.agents,
                    choice={m: {j: self.partition(m, j) for j in self.agents} for m in self.moments},
                    valuation=self.valuation, variables=self._declared_vars)
        args.update(changes)
        return StitModel(**args)

    def __eq__(self, other):
        if not isinstance(other, StitModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.moments, self.order, self.valuation))

    def __repr__(self):
        return (f"StitModel({len(self.moments)} moments, {len(self.histories) if self.antisymmetric else '?'}"
                f" histories, agents={list(self.agents)})")


def _closure(moments, pairs) -> frozenset[tuple[str, str]]:
    rel = {m: {m} for m in moments}
    for a, b in pairs:
        rel[a].add(b)
    changed = True
    while changed:
        changed = False
        for a in moments:
            new = set().union(*(rel[b] for b in rel[a]))
            if not new <= rel[a]:
                rel[a] |= new
                changed = True
    return frozenset((a, b) for a in moments for b in rel[a])


def load_model(path: str | Path) -> StitModel:
    with open(path) as fh:
        return StitModel.from_dict(json.load(fh))


def save_model(model: StitModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=1)


# ---------------------------------------------------------------------------
# operations

def histories(model: StitModel) -> tuple[History, ...]:
    return model.histories


def undivided(model: StitModel, m: str) -> frozenset[tuple[str, str]]:
    """The relation ``h ~_m g``: both pass through some moment strictly after ``m``.

    Reflexively closed on ``H_m``.
    """
    hm = model.histories_through(m)
    later = [model.histories_through(x) for x in model.moments if model.lt(m, x)]
    rel = {(h, h) for h in hm}
    for hs in later:
        rel.update(itertools.product(hs & hm, repeat=2))
    return frozenset(rel)


def validate(model: StitModel) -> list[Violation]:
    """All violated constraints; an empty list means the model is well formed."""
    out: list[Violation] = []
    ms = model.moments
    if not ms:
        return [Violation("HC", "a model needs at least one moment")]
    if not model.antisymmetric:
        bad = sorted((a, b) for a, b in model.order if a < b and (b, a) in model.order)
        return [Violation("order", "order is not antisymmetric", {"pair": bad[0]})]

    for a, b in itertools.combinations(ms, 2):
        if not any(model.leq(c, a) and model.leq(c, b) for c in ms):
            out.append(Violation("HC", f"{a!r} and {b!r} have no common lower bound",
                                 {"moments": [a, b]}))
            break
    for m in ms:
        preds = [x for x in ms if model.leq(x, m)]
        bad = next(((x, y) for x, y in itertools.combinations(preds, 2)
                    if not (model.leq(x, y) or model.leq(y, x))), None)
        if bad:
            out.append(Violation("NBB", f"incomparable predecessors of {m!r}",
                                 {"moment": m, "predecessors": list(bad)}))

    known_h = set(model.history_by_name)
    for m in model._choice_in:
        if m not in model._through:
            out.append(Violation("partition", f"choice given for unknown moment {m!r}", {"moment": m}))
            continue
        for j in model._choice_in[m]:
            if j not in model.agents:
                out.append(Violation("partition", f"choice given for unknown agent {j}",
                                     {"moment": m, "agent": j}))

    completed: dict[tuple[str, int], list[frozenset[str]]] = {}
    for m in ms:
        hm = model.histories_through(m)
        for j in model.agents:
            cells = model.partition(m, j)
            seen: set[str] = set()
            for cell in cells:
                w = {"moment": m, "agent": j, "cell": cell}
                if not cell:
                    out.append(Violation("partition", f"empty cell for agent {j} at {m!r}", w))
                unknown = cell - known_h
                if unknown:
                    out.append(Violation("partition", f"unknown histories {sorted(unknown)}", w))
                stray = (cell & known_h) - hm
                if stray:
                    out.append(Violation("partition", f"histories {sorted(stray)} do not pass through {m!r}", w))
                overlap = cell & seen
                if overlap:
                    out.append(Violation("partition", f"cells of agent {j} at {m!r} overlap on {sorted(overlap)}", w))
                seen |= cell
            missing = hm - seen
            if missing:
                out.append(Violation("partition", f"cells of agent {j} at {m!r} miss {sorted(missing)}",
                                     {"moment": m, "agent": j, "uncovered": missing}))
            # an uncovered history is alone in its (implicit) cell
            proper = [c & hm for c in cells if c & hm]
            completed[(m, j)] = proper + [frozenset([h]) for h in sorted(missing)]

    for m in ms:
        und = undivided(model, m)
        for j in model.agents:
            cell_of = {h: c for c in completed[(m, j)] for h in c}
            bad = next(((h, g) for h, g in sorted(und) if h < g and cell_of.get(h) != cell_of.get(g)), None)
            if bad:
                out.append(Violation("NCUH", f"agent {j} separates undivided histories at {m!r}",
                                     {"moment": m, "agent": j, "histories": list(bad)}))

    if model.agents:
        for m in ms:
            parts = [completed[(m, j)] for j in model.agents]
            for sel in itertools.product(*parts):
                if not frozenset.intersection(*sel):
                    out.append(Violation("IA", f"choices of independent agents at {m!r} do not intersect",
                                         {"moment": m, "selector": dict(zip(model.agents, sel))}))
                    break

    for v, m, h in sorted(model.valuation):
        if m not in model._through or h not in model._through[m]:
            out.append(Violation("valuation", f"({v}, {m}, {h}) is not on a moment-history pair",
                                 {"triple": [v, m, h]}))
    return out


def _check_pair(model: StitModel, m: str, h: str) -> None:
    if h not in model.histories_through(m):
        raise ModelError(f"({m!r}, {h!r}) is not a moment-history pair")


def truth_set(model: StitModel, m: str, f: Formula) -> frozenset[str]:
    """Histories ``h`` through ``m`` with ``model, m, h |= f``."""
    g = desugar(f)
    missing = vocabulary(g).agents - set(model.agents)
    if missing:
        raise ModelError(f"formula mentions agents {sorted(missing)} unknown to the model")
    model.histories_through(m)
    return _ts(model, m, g)


def _ts(model: StitModel, m: str, g: Formula) -> frozenset[str]:
    key = (m, g)
    memo = model._memo
    if key in memo:
        return memo[key]
    hm = model._through[m]
    if isinstance(g, Var):
        out = frozenset(h for h in hm if (g.name, m, h) in model.valuation)
    elif isinstance(g, Bottom):
        out = frozenset()
    elif isinstance(g, Implies):
        out = (hm - _ts(model, m, g.left)) | _ts(model, m, g.right)
    elif isinstance(g, Box):
        out = hm if _ts(model, m, g.body) == hm else frozenset()
    elif isinstance(g, Stit):
        body = _ts(model, m, g.body)
        out = frozenset(h for h in hm if model.cell(m, g.agent, h) <= body)
    else:
        raise TypeError(f"not a core formula: {g!r}")
    memo[key] = out
    return out


def satisfies(model: StitModel, m: str, h: str | History, f: Formula) -> bool:
    """``model, m, h |= f``."""
    h = h.name if isinstance(h, History) else h
    _check_pair(model, m, h)
    return h in truth_set(model, m, f)


def valid_in_model(model: StitModel, f: Formula) -> bool:
    return all(truth_set(model, m, f) == model.histories_through(m) for m in model.moments)


def random_model(
    rng,
    max_histories: int = 6,
    agents: Iterable[int] = (1, 2),
    variables: Iterable[str] = ("p", "q"),
    p_true: float = 0.5,
) -> StitModel:
    """A random model that passes :func:`validate`.

    The tree grows by giving a random leaf one to three children while the
    leaf count stays within ``max_histories``.  At each moment every agent
    partitions the child subtrees (which keeps NCUH); an agent whose random
    partition would break IA gets the vacuous one instead.
    """
    agents = sorted(set(agents))
    variables = sorted(set(variables))
    children: dict[str, list[str]] = {"m0": []}
    leaves = ["m0"]
    for _ in range(int(rng.integers(0, 2 * max_histories))):
        leaf = leaves[int(rng.integers(len(leaves)))]
        k = int(rng.integers(1, 4))
        if len(leaves) - 1 + k > max_histories:
            continue
        new = [f"m{len(children) + i}" for i in range(k)]
        children[leaf] = new
        for c in new:
            children[c] = []
        leaves.remove(leaf)
        leaves.extend(new)

    def below(m):
        return [m] if not children[m] else [x for c in children[m] for x in below(c)]

    model = StitModel(list(children), [(m, c) for m in children for c in children[m]], agents)
    choice: dict[str, dict[int, list]] = {}
    for m, kids in children.items():
        if len(kids) < 2:
            continue
        chosen: list[list[set[int]]] = []
        for j in agents:
            labels = rng.integers(0, len(kids), size=len(kids))
            blocks = [set(np.flatnonzero(labels == v)) for v in np.unique(labels)]
            if all(set.intersection(*sel) for sel in itertools.product(*chosen, blocks)):
                chosen.append(blocks)
            else:
                chosen.append([set(range(len(kids)))])
            choice.setdefault(m, {})[j] = [
                [h for i in sorted(b) for leaf in below(kids[i]) for h in model.histories_through(leaf)]
                for b in chosen[-1]]
    valuation = [(v, m, h) for m in children for h in sorted(model.histories_through(m))
                 for v in variables if rng.random() < p_true]
    return StitModel(list(children), model.order, agents, choice, valuation, variables)
