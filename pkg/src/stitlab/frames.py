"""Single-moment choice frames and bounded satisfiability search.

Satisfaction at a moment only looks at the histories through that moment and
at the agents' choice partitions there, so satisfiability can be searched on
*choice frames*: a finite set of histories, one partition per agent obeying
independence, and a valuation per history.  :func:`to_model` turns a frame
into a root-plus-leaves stit model.

The search enumerates frames by ascending history count, then partition
tuples in lexicographic order of their restricted-growth encodings (one
representative per relabelling of histories), then valuations.  All
valuations of a frame are evaluated at once as a numpy array of shape
``(frames, valuations, histories)``.
"""

from __future__ import annotations

import itertools
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .semantics import StitModel, satisfies
from .syntax import Bottom, Box, Formula, Implies, Not, Stit, Var, desugar, vocabulary

__all__ = [
    "ChoiceFrame", "Satisfiable", "NoModelUpTo", "ValidUpTo", "Countermodel",
    "check_independence", "frame_problems", "to_model", "evaluate",
    "sat_search", "validity_up_to", "FrameUniverse", "load_frame", "save_frame",
    "DEFAULT_BOUND", "LARGE_BOUND",
]

DEFAULT_BOUND = int(os.environ.get("STIT_DEFAULT_BOUND", "3"))
LARGE_BOUND = 4  # bounds from here on need allow_large=True


@dataclass(frozen=True)
class ChoiceFrame:
    histories: tuple[str, ...]
    partitions: Mapping[int, tuple[frozenset[str], ...]]
    valuation: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def build(cls, histories: Iterable[str], partitions: Mapping[int, Iterable[Iterable[str]]],
              valuation: Mapping[str, Iterable[str]] | None = None) -> "ChoiceFrame":
        return cls(
            tuple(histories),
            {int(j): tuple(frozenset(c) for c in cells) for j, cells in sorted(partitions.items())},
            {h: frozenset(vs) for h, vs in (valuation or {}).items()},
        )

    @property
    def agents(self) -> tuple[int, ...]:
        return tuple(sorted(self.partitions))

    def cell(self, j: int, h: str) -> frozenset[str]:
        for c in self.partitions[j]:
            if h in c:
                return c
        raise KeyError((j, h))

    def true_vars(self, h: str) -> frozenset[str]:
        return self.valuation.get(h, frozenset())

    def to_dict(self) -> dict:
        return {
            "histories": list(self.histories),
            "partitions": {str(j): [sorted(c, key=self.histories.index) for c in cells]
                           for j, cells in self.partitions.items()},
            "valuation": {h: sorted(self.true_vars(h)) for h in self.histories},
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ChoiceFrame":
        return cls.build(data["histories"], {int(j): c for j, c in data.get("partitions", {}).items()},
                         data.get("valuation", {}))


def load_frame(path: str | Path) -> ChoiceFrame:
    with open(path) as fh:
        return ChoiceFrame.from_dict(json.load(fh))


def save_frame(frame: ChoiceFrame, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(frame.to_dict(), fh, indent=1)


# ---------------------------------------------------------------------------
# verdicts

@dataclass(frozen=True)
class Satisfiable:
    frame: ChoiceFrame
    history: str
    kind = "satisfiable"


@dataclass(frozen=True)
class NoModelUpTo:
    bound: int
    kind = "no-model"


@dataclass(frozen=True)
class ValidUpTo:
    bound: int
    kind = "valid"


@dataclass(frozen=True)
class Countermodel:
    frame: ChoiceFrame
    history: str
    kind = "countermodel"


# ---------------------------------------------------------------------------
# frame checks and reduction

def frame_problems(frame: ChoiceFrame) -> list[str]:
    """Partition well-formedness problems (empty when every partition is fine)."""
    out = []
    hs = set(frame.histories)
    if not hs:
        out.append("a frame needs at least one history")
    if len(hs) != len(frame.histories):
        out.append("duplicate history labels")
    for j, cells in frame.partitions.items():
        seen: set[str] = set()
        for c in cells:
            if not c:
                out.append(f"agent {j}: empty cell")
            if c - hs:
                out.append(f"agent {j}: unknown histories {sorted(c - hs)}")
            if c & seen:
                out.append(f"agent {j}: overlapping cells")
            seen |= c
        if hs - seen:
            out.append(f"agent {j}: cells miss {sorted(hs - seen)}")
    for h in frame.valuation:
        if h not in hs:
            out.append(f"valuation mentions unknown history {h!r}")
    return out


def check_independence(frame: ChoiceFrame) -> dict[int, frozenset[str]] | None:
    """A selector (agent -> cell) with empty intersection, or ``None`` if IA holds."""
    agents = frame.agents
    if not agents:
        return None
    for sel in itertools.product(*(frame.partitions[j] for j in agents)):
        if not frozenset.intersection(*sel):
            return dict(zip(agents, sel))
    return None


def to_model(frame: ChoiceFrame, root: str = "dag") -> StitModel:
    """Root-plus-leaves model: root ``root`` and one leaf moment per history label.

    The history through leaf ``x`` is named ``"<root>>x"``.  Leaf choices are
    vacuous and the valuation lives on the root only.
    """
    problems = frame_problems(frame)
    if problems:
        raise ValueError("ill-formed frame: " + "; ".join(problems))
    sel = check_independence(frame)
    if sel is not None:
        raise ValueError(f"frame violates independence of agents: {({j: sorted(c) for j, c in sel.items()})}")
    if root in frame.histories:
        raise ValueError(f"root name {root!r} clashes with a history label")
    name = {h: f"{root}>{h}" for h in frame.histories}
    return StitModel(
        moments=(root,) + frame.histories,
        order=[(root, h) for h in frame.histories],
        agents=frame.agents,
        choice={root: {j: [[name[h] for h in c] for c in cells]
                       for j, cells in frame.partitions.items()}},
        valuation=[(v, root, name[h]) for h in frame.histories for v in sorted(frame.true_vars(h))],
    )


def evaluate(frame: ChoiceFrame, h: str, f: Formula) -> bool:
    """Direct recursive truth of ``f`` at history ``h`` of ``frame``."""
    g = desugar(f)
    if isinstance(g, Var):
        return g.name in frame.true_vars(h)
    if isinstance(g, Bottom):
        return False
    if isinstance(g, Implies):
        return (not evaluate(frame, h, g.left)) or evaluate(frame, h, g.right)
    if isinstance(g, Box):
        return all(evaluate(frame, x, g.body) for x in frame.histories)
    if isinstance(g, Stit):
        return all(evaluate(frame, x, g.body) for x in frame.cell(g.agent, h))
    raise TypeError(g)


# ---------------------------------------------------------------------------
# enumeration of partition tuples

@lru_cache(maxsize=None)
def _set_partitions(n: int) -> tuple[tuple[int, ...], ...]:
    """Restricted-growth strings of length ``n`` in lexicographic order."""
    out = []

    def rec(prefix, top):
        if len(prefix) == n:
            out.append(tuple(prefix))
            return
        for b in range(top + 2):
            rec(prefix + [b], max(top, b))

    rec([0], 0) if n else out.append(())
    return tuple(out)


def _rgs(labels: Sequence[int]) -> tuple[int, ...]:
    seen: dict[int, int] = {}
    return tuple(seen.setdefault(x, len(seen)) for x in labels)


def _independent(rgs_tuple: tuple[tuple[int, ...], ...], n: int) -> bool:
    if not rgs_tuple:
        return True
    cells = []
    for rgs in rgs_tuple:
        blocks: dict[int, int] = {}
        for h, b in enumerate(rgs):
            blocks[b] = blocks.get(b, 0) | (1 << h)
        cells.append(list(blocks.values()))
    for sel in itertools.product(*cells):
        acc = (1 << n) - 1
        for c in sel:
            acc &= c
        if not acc:
            return False
    return True


@lru_cache(maxsize=None)
def _partition_tuples(n: int, n_agents: int, prune: bool) -> tuple[tuple[tuple[int, ...], ...], ...]:
    """IA-respecting partition tuples on ``n`` histories, lexicographic order.

    With ``prune`` only the lexicographically least member of each orbit under
    relabelling of histories is kept.
    """
    parts = _set_partitions(n)
    perms = list(itertools.permutations(range(n)))[1:]
    out = []
    for tup in itertools.product(parts, repeat=n_agents):
        if prune and any(
            tuple(_rgs([rgs[p[h]] for h in range(n)]) for rgs in tup) < tup for p in perms
        ):
            continue
        if _independent(tup, n):
            out.append(tup)
    return tuple(out)


class _Block:
    """All enumerated frames with ``n`` histories, stacked for vectorised evaluation."""

    def __init__(self, n: int, agents: tuple[int, ...], variables: tuple[str, ...], prune: bool):
        self.n = n
        self.agents = agents
        self.variables = variables
        self.tuples = _partition_tuples(n, len(agents), prune)
        self.F = len(self.tuples)
        self.W = 1 << (n * len(variables))
        labels = np.array(self.tuples, dtype=np.int8).reshape(self.F, len(agents), n)
        # same[f, a, h, k]: histories h and k share agent a's cell in frame f
        self.same = labels[..., :, None] == labels[..., None, :]
        w = np.arange(self.W, dtype=np.int64)
        self.bits = {
            v: ((w[:, None] >> (np.arange(n) * len(variables) + k)) & 1).astype(bool)[None]
            for k, v in enumerate(variables)
        }

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.F, self.W, self.n)

    def evaluate(self, f: Formula, memo: dict | None = None) -> np.ndarray:
        memo = {} if memo is None else memo
        return np.broadcast_to(self._ev(desugar(f), memo), self.shape)

    def _ev(self, g: Formula, memo: dict) -> np.ndarray:
        if g in memo:
            return memo[g]
        if isinstance(g, Var):
            out = self.bits.get(g.name)
            if out is None:
                out = np.zeros((1, 1, 1), dtype=bool)
        elif isinstance(g, Bottom):
            out = np.zeros((1, 1, 1), dtype=bool)
        elif isinstance(g, Implies):
            out = ~self._ev(g.left, memo) | self._ev(g.right, memo)
        elif isinstance(g, Box):
            out = self._ev(g.body, memo).all(axis=2, keepdims=True)
        elif isinstance(g, Stit):
            out = self.stit(self.agents.index(g.agent), self._ev(g.body, memo))
        else:
            raise TypeError(g)
        memo[g] = out
        return out

    def stit(self, a: int, x: np.ndarray) -> np.ndarray:
        bad = ~np.broadcast_to(x, (self.F, x.shape[1], self.n))
        # some history in h's cell falsifies the body
        return ~np.matmul(bad, self.same[:, a].transpose(0, 2, 1))

    def frame(self, i: int, w: int) -> ChoiceFrame:
        names = tuple(f"h{k}" for k in range(self.n))
        parts = {}
        for j, rgs in zip(self.agents, self.tuples[i]):
            blocks: dict[int, list[str]] = {}
            for k, b in enumerate(rgs):
                blocks.setdefault(b, []).append(names[k])
            parts[j] = [blocks[b] for b in sorted(blocks)]
        val = {names[k]: [v for v in self.variables if self.bits[v][0, w, k]] for k in range(self.n)}
        return ChoiceFrame.build(names, parts, val)


@lru_cache(maxsize=64)
def _block(n: int, agents: tuple[int, ...], variables: tuple[str, ...], prune: bool) -> _Block:
    return _Block(n, agents, variables, prune)


def _check_bound(bound: int, allow_large: bool) -> None:
    if bound < 1:
        raise ValueError("the history bound must be at least 1")
    if bound >= LARGE_BOUND and not allow_large:
        raise ValueError(f"bound {bound} needs allow_large=True (combinatorial growth)")


def _first_hit(block: _Block, f: Formula, workers: int) -> tuple[int, int, int] | None:
    chunks = [(lo, min(lo + 64, block.F)) for lo in range(0, block.F, 64)] or [(0, 0)]

    def scan(lo_hi):
        lo, hi = lo_hi
        if lo == hi:
            return None
        sub = _SubBlock(block, lo, hi)
        arr = sub.evaluate(f).reshape(hi - lo, -1)
        rows = np.flatnonzero(arr.any(axis=1))
        if not len(rows):
            return None
        i = rows[0]
        flat = int(np.argmax(arr[i]))
        return lo + int(i), flat // block.n, flat % block.n

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(scan, chunks))
    else:
        results = []
        for c in chunks:
            r = scan(c)
            results.append(r)
            if r is not None:
                break
    return next((r for r in results if r is not None), None)


class _SubBlock(_Block):
    """A contiguous slice of a block's frames (keeps memory bounded)."""

    def __init__(self, parent: _Block, lo: int, hi: int):
        self.__dict__.update(parent.__dict__)
        self.tuples = parent.tuples[lo:hi]
        self.F = hi - lo
        self.same = parent.same[lo:hi]


def sat_search(
    f: Formula,
    max_histories: int = DEFAULT_BOUND,
    *,
    agents: Iterable[int] = (),
    variables: Iterable[str] = (),
    prune: bool = True,
    allow_large: bool = False,
    workers: int = 1,
) -> Satisfiable | NoModelUpTo:
    """Search frames with at most ``max_histories`` histories for one satisfying ``f``.

    The returned witness is the first hit in enumeration order and is
    re-checked with the model checker on :func:`to_model` of the frame.
    """
    _check_bound(max_histories, allow_large)
    voc = vocabulary(f)
    ags = tuple(sorted(voc.agents | set(agents)))
    vs = tuple(sorted(voc.vars | set(variables)))
    for n in range(1, max_histories + 1):
        block = _block(n, ags, vs, prune)
        hit = _first_hit(block, f, workers)
        if hit is not None:
            i, w, k = hit
            frame = block.frame(i, w)
            h = frame.histories[k]
            if not satisfies(to_model(frame), "dag", f"dag>{h}", f):
                raise AssertionError("search witness failed the model-checker re-check")
            return Satisfiable(frame, h)
    return NoModelUpTo(max_histories)


def validity_up_to(f: Formula, bound: int = DEFAULT_BOUND, **kwargs) -> ValidUpTo | Countermodel:
    """``ValidUpTo(bound)`` unless some frame within the bound falsifies ``f``."""
    res = sat_search(Not(f), bound, **kwargs)
    if isinstance(res, Satisfiable):
        return Countermodel(res.frame, res.history)
    return ValidUpTo(bound)


# ---------------------------------------------------------------------------
# whole-universe evaluation (used by the interpolant search)

class FrameUniverse:
    """Every (frame, valuation, history) point up to a bound, as one flat axis.

    Formulas evaluate to boolean vectors over the points, so bounded validity
    of ``A -> C`` is ``~a | c`` being all true.  Vectors compose: the
    operations below mirror the core connectives.
    """

    def __init__(self, agents: Iterable[int], variables: Iterable[str], bound: int = DEFAULT_BOUND,
                 *, allow_large: bool = False):
        _check_bound(bound, allow_large)
        self.agents = tuple(sorted(set(agents)))
        self.variables = tuple(sorted(set(variables)))
        self.bound = bound
        self.blocks = [_block(n, self.agents, self.variables, True) for n in range(1, bound + 1)]
        sizes = [int(np.prod(b.shape)) for b in self.blocks]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.size = int(self.offsets[-1])

    def _split(self, x: np.ndarray):
        for b, lo, hi in zip(self.blocks, self.offsets[:-1], self.offsets[1:]):
            yield b, x[..., lo:hi].reshape(x.shape[:-1] + b.shape)

    def _join(self, parts) -> np.ndarray:
        return np.concatenate([p.reshape(p.shape[:-3] + (-1,)) for p in parts], axis=-1)

    def evaluate(self, f: Formula) -> np.ndarray:
        return self._join(b.evaluate(f) for b in self.blocks)

    def var(self, name: str) -> np.ndarray:
        return self.evaluate(Var(name))

    def bottom(self) -> np.ndarray:
        return np.zeros(self.size, dtype=bool)

    @staticmethod
    def implies(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return ~x | y

    def box(self, x: np.ndarray) -> np.ndarray:
        """Works on a single vector or a stack ``(k, size)``."""
        return self._join(np.broadcast_to(p.all(axis=-1, keepdims=True), p.shape) for _, p in self._split(x))

    def stit(self, agent: int, x: np.ndarray) -> np.ndarray:
        a = self.agents.index(agent)
        out = []
        for b, p in self._split(x):
            same = b.same[:, a].transpose(0, 2, 1)
            out.append(~np.matmul(~p, same))
        return self._join(out)

    def locate(self, index: int) -> tuple[ChoiceFrame, str]:
        """The frame and history of a point."""
        k = int(np.searchsorted(self.offsets, index, side="right")) - 1
        b = self.blocks[k]
        i, w, h = np.unravel_index(index - self.offsets[k], b.shape)
        frame = b.frame(int(i), int(w))
        return frame, frame.histories[int(h)]
