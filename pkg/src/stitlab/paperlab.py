"""The concrete witness objects for the interpolation results, and searches.

``build_S``/``build_S_prime`` are two 32-history, four-agent models whose
q-reducts are bisimilar at the root, while ``A`` holds in the first and
``B`` fails in the second although ``A -> B`` is derivable.  ``build_M`` is
the two-history, one-agent model used against agent-free interpolants.

The certificates re-run every check from the builders each time; nothing is
cached between runs.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .bisim import (HistoryRelation, PointedModel, TransferError, atoms_only_agreement,
                    diagonal, is_bisimulation)
from .derivations import derive_counterexample, derive_s_counterexample
from .frames import DEFAULT_BOUND, FrameUniverse, ValidUpTo, validity_up_to
from .proof import check_proof
from .semantics import ModelError, StitModel, satisfies, truth_set, validate
from .syntax import (BOTTOM, And, Box, Diamond, Formula, Implies, Not, Stit, Var, conj,
                     desugar, resugar, size, to_text, vocabulary)

__all__ = [
    "FourTuple", "four_tuples", "build_S", "build_S_prime", "reduct", "build_B", "build_M",
    "formula_A", "formula_B", "strong_A", "strong_B",
    "Fact", "Certificate", "certify_negative", "certify_strong_negative",
    "Found", "Separating", "NotFoundUpTo", "InterpolationError",
    "interpolant_search", "is_separable_bounded",
]

ROOT_S, ROOT_S_PRIME = "dag", "ddag"


# ---------------------------------------------------------------------------
# the 32 signed four-tuples

@dataclass(frozen=True, order=True)
class FourTuple:
    core: tuple[int, int, int, int]
    sign: str  # "+" or "-"

    def __post_init__(self):
        if len(self.core) != 4 or any(x not in (0, 1) for x in self.core):
            raise ValueError(f"bad core {self.core!r}")
        if self.sign not in "+-" or len(self.sign) != 1:
            raise ValueError(f"bad sign {self.sign!r}")

    def pr(self, j: int) -> int:
        return self.core[j - 1]

    @property
    def name(self) -> str:
        return "t" + "".join(map(str, self.core)) + ("p" if self.sign == "+" else "m")

    @classmethod
    def from_name(cls, name: str) -> "FourTuple":
        if len(name) != 6 or name[0] != "t" or name[5] not in "pm":
            raise ValueError(f"bad tuple name {name!r}")
        return cls(tuple(int(c) for c in name[1:5]), "+" if name[5] == "p" else "-")

    def __str__(self) -> str:
        return f"({','.join(map(str, self.core))}){self.sign}"


def four_tuples() -> list[FourTuple]:
    return [FourTuple(c, s) for c in itertools.product((0, 1), repeat=4) for s in "+-"]


def _tree_model(root: str, var_rules: dict[str, Callable[[FourTuple], bool]]) -> StitModel:
    ts = four_tuples()
    leaves = [t.name for t in ts]
    hname = {t: f"{root}>{t.name}" for t in ts}
    choice = {root: {j: [[hname[t] for t in ts if t.pr(j) == v] for v in (0, 1)]
                     for j in (1, 2, 3, 4)}}
    valuation = [(v, root, hname[t]) for v, rule in var_rules.items() for t in ts if rule(t)]
    return StitModel(
        moments=[root] + leaves,
        order=[(root, x) for x in leaves],
        agents=(1, 2, 3, 4),
        choice=choice,
        valuation=valuation,
        variables=var_rules,
    )


def _v_q(t: FourTuple) -> bool:
    return (t.pr(1) == t.pr(2) == 0) or (t.pr(3) == t.pr(4) == 0) or t.sign == "+"


def _v_prime_q(t: FourTuple) -> bool:
    return (t.pr(3) == t.pr(4) == 0) or (t.sign == "+" and not (t.pr(3) == 1 and t.pr(4) == 0))


def build_S() -> StitModel:
    """Root ``dag`` with one leaf per tuple; agent j's choice splits on ``pr_j``."""
    return _tree_model(ROOT_S, {"p": lambda t: t.pr(1) == 0, "q": _v_q})


def build_S_prime() -> StitModel:
    return _tree_model(ROOT_S_PRIME, {"q": _v_prime_q, "r": lambda t: t.pr(3) == 1})


def reduct(model: StitModel, vars: Iterable[str]) -> StitModel:
    """Same model with the valuation restricted to ``vars``."""
    vars = frozenset(vars)
    unknown = vars - model.variables
    if unknown:
        raise ModelError(f"variables {sorted(unknown)} are not in the model's language")
    return model.replace(valuation=[t for t in model.valuation if t[0] in vars], variables=vars)


def build_B() -> HistoryRelation:
    """Pairs of root histories whose q-values agree."""
    ts = four_tuples()
    return HistoryRelation(
        (f"{ROOT_S}>{a.name}", f"{ROOT_S_PRIME}>{b.name}")
        for a in ts for b in ts if _v_q(a) == _v_prime_q(b))


def build_M(j: int, p: str = "p") -> StitModel:
    """Moment ``m`` with two successors; agent j chooses between them; p true on ``m>m0``."""
    h0, h1 = "m>m0", "m>m1"
    return StitModel(
        moments=["m", "m0", "m1"],
        order=[("m", "m0"), ("m", "m1")],
        agents=[j],
        choice={"m": {j: [[h0], [h1]]}},
        valuation=[(p, "m", h0)],
        variables=[p],
    )


def formula_A(j1=1, j2=2, p="p", q="q") -> Formula:
    P, Q = Var(p), Var(q)
    return Diamond(And(Stit(j1, P), Stit(j2, Implies(P, Q))))


def formula_B(j3=3, j4=4, q="q", r="r") -> Formula:
    Q, R = Var(q), Var(r)
    return Not(Diamond(And(Stit(j3, R), Stit(j4, Implies(R, Not(Q))))))


def strong_A(j1=1, p="p") -> Formula:
    return Diamond(Stit(j1, Var(p)))


def strong_B(j2=2, p="p") -> Formula:
    return Not(Diamond(Stit(j2, Not(Var(p)))))


# ---------------------------------------------------------------------------
# certificates

@dataclass(frozen=True)
class Fact:
    step: str
    kind: str
    statement: str
    verdict: bool
    witness: dict | None = None

    def to_dict(self) -> dict:
        d = {"step": self.step, "kind": self.kind, "statement": self.statement, "verdict": self.verdict}
        if self.witness is not None:
            d["witness"] = self.witness
        return d


@dataclass
class Certificate:
    claim: str
    bounds: dict
    facts: list[Fact] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    failed_step: str | None = None

    @property
    def verdict(self) -> str:
        return "certified" if self.failed_step is None else f"failed({self.failed_step})"

    @property
    def certified(self) -> bool:
        return self.failed_step is None

    def to_dict(self) -> dict:
        return {"claim": self.claim, "bounds": self.bounds,
                "facts": [f.to_dict() for f in self.facts],
                "notes": self.notes, "verdict": self.verdict}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


class _Steps:
    """Runs named steps in order and stops at the first one with a false fact."""

    def __init__(self, cert: Certificate):
        self.cert = cert

    def record(self, step: str, kind: str, statement: str, verdict: bool, witness=None) -> bool:
        self.cert.facts.append(Fact(step, kind, statement, bool(verdict), witness))
        if not verdict and self.cert.failed_step is None:
            self.cert.failed_step = step
        return bool(verdict)

    @property
    def failed(self) -> bool:
        return self.cert.failed_step is not None


def _in_language(model: StitModel, f: Formula) -> tuple[bool, dict]:
    voc = vocabulary(f)
    extra_v = sorted(voc.vars - model.variables)
    extra_a = sorted(voc.agents - set(model.agents))
    return not (extra_v or extra_a), {"unknown_vars": extra_v, "unknown_agents": extra_a}


def _modelhood(st: _Steps, named: Sequence[tuple[str, StitModel]]) -> None:
    for name, model in named:
        vs = validate(model)
        st.record("modelhood", "validate", f"{name} satisfies HC, NBB, NCUH, IA and is well formed",
                  not vs, {"violations": [v.to_dict() for v in vs]} if vs else None)


def certify_negative(
    *,
    left: StitModel | None = None,
    right: StitModel | None = None,
    relation: HistoryRelation | None = None,
    antecedent: Formula | None = None,
    consequent: Formula | None = None,
    frame_bound: int = DEFAULT_BOUND,
) -> Certificate:
    """Four agents: a derivable ``A -> B`` with ``Ag(A) = {1,2}``, ``Ag(B) = {3,4}`` and no interpolant.

    The keyword arguments replace individual ingredients, which is how the
    perturbation tests check that each step can actually fail.
    """
    S = build_S() if left is None else left
    S2 = build_S_prime() if right is None else right
    R = build_B() if relation is None else relation
    A = formula_A() if antecedent is None else antecedent
    B = formula_B() if consequent is None else consequent
    h0, g0 = f"{ROOT_S}>t0000p", f"{ROOT_S_PRIME}>t0000p"
    cert = Certificate(
        claim="no restricted interpolant for agent-disjoint implications with four agents",
        bounds={"frame_bound": frame_bound, "models": "exact (finite model checking)"},
        notes=[
            "A holds at the left endpoint and B fails at the right endpoint while A -> B is derivable.",
            "The q-reducts are bisimilar and relate the endpoints, so every formula over agents "
            "{1,2,3,4} and variables {q} takes the same value at both endpoints. "
            "An interpolant C would be true at the left endpoint and false at the right one.",
            "Bounded interpolant searches cannot contradict this: they only report absence up to a size bound.",
        ],
    )
    st = _Steps(cert)

    _modelhood(st, [("S", S), ("S'", S2)])
    if st.failed:
        return cert

    ok_a, wa = _in_language(S, A)
    st.record("satisfaction", "language", f"{to_text(A)} is in the language of S", ok_a, wa)
    ok_b, wb = _in_language(S2, B)
    st.record("satisfaction", "language", f"{to_text(B)} is in the language of S'", ok_b, wb)
    if st.failed:
        return cert
    st.record("satisfaction", "model-check", f"S, {ROOT_S}, {h0} |= {to_text(A)}",
              h0 in S.histories_through(ROOT_S) and satisfies(S, ROOT_S, h0, A))
    st.record("satisfaction", "model-check", f"S', {ROOT_S_PRIME}, {g0} |/= {to_text(B)}",
              g0 in S2.histories_through(ROOT_S_PRIME) and not satisfies(S2, ROOT_S_PRIME, g0, B))
    bad_a = sorted(S.histories_through(ROOT_S) - truth_set(S, ROOT_S, A))
    st.record("satisfaction", "model-check", f"{to_text(A)} holds at every history through {ROOT_S} in S",
              not bad_a, {"failing": bad_a} if bad_a else None)
    bad_b = sorted(truth_set(S2, ROOT_S_PRIME, B))
    st.record("satisfaction", "model-check",
              f"{to_text(B)} fails at every history through {ROOT_S_PRIME} in S'",
              not bad_b, {"holding": bad_b} if bad_b else None)
    if st.failed:
        return cert

    script = derive_counterexample(1, 2, 3, 4, "p", "q", "r")
    res = check_proof(script)
    st.record("proof", "proof-check", f"derivation of {to_text(script.conclusion)} is accepted "
              f"({len(script.lines)} lines)", res.ok,
              None if res.ok else {"line": res.line, "reason": res.reason})
    same = desugar(script.conclusion) == desugar(Implies(A, B))
    st.record("proof", "proof-check", f"the derivation concludes {to_text(Implies(A, B))}", same,
              None if same else {"conclusion": to_text(script.conclusion)})
    disjoint = not (vocabulary(A).agents & vocabulary(B).agents)
    st.record("proof", "vocabulary", "antecedent and consequent use disjoint agent sets", disjoint,
              {"antecedent": sorted(vocabulary(A).agents), "consequent": sorted(vocabulary(B).agents)})
    if st.failed:
        return cert

    shared = sorted(vocabulary(A).vars & vocabulary(B).vars)
    try:
        Sq, S2q = reduct(S, shared), reduct(S2, shared)
    except ModelError as exc:
        st.record("bisimulation", "reduct", f"reducts to {shared}", False, {"error": str(exc)})
        return cert
    bis = is_bisimulation(PointedModel(Sq, ROOT_S), PointedModel(S2q, ROOT_S_PRIME), R, shared)
    st.record("bisimulation", "bisimulation",
              f"the relation ({len(R)} pairs) is a bisimulation between the {shared}-reducts at "
              f"{ROOT_S} and {ROOT_S_PRIME}", bis.ok,
              None if bis.ok else {"violations": [v.to_dict() for v in bis.violations[:3]]})
    st.record("bisimulation", "membership", f"({h0}, {g0}) is in the relation", (h0, g0) in R)
    if st.failed:
        return cert

    v = validity_up_to(Implies(A, B), frame_bound)
    st.record("bounded-validity", "bounded-validity",
              f"{to_text(Implies(A, B))} has no countermodel with at most {frame_bound} histories",
              isinstance(v, ValidUpTo))
    return cert


def certify_strong_negative(
    j1: int = 1,
    j2: int = 2,
    p: str = "p",
    *,
    left: StitModel | None = None,
    right: StitModel | None = None,
    agreement_size: int = 7,
    frame_bound: int = DEFAULT_BOUND,
) -> Certificate:
    """Two agents: ``<>[j1]p -> ~<>[j2]~p`` is derivable but has no agent-free interpolant.

    Equal agents make the derivation builder raise; that error is not caught.
    """
    M1 = build_M(j1, p) if left is None else left
    M2 = build_M(j2, p) if right is None else right
    A, B = strong_A(j1, p), strong_B(j2, p)
    h0 = "m>m0"
    cert = Certificate(
        claim="no agent-free interpolant for agent-disjoint implications with two agents",
        bounds={"agreement_max_size": agreement_size, "frame_bound": frame_bound,
                "models": "exact (finite model checking)"},
        notes=[
            "The diagonal relates the two models' histories and respects atoms, which is enough for "
            "agreement on every formula without action modalities.",
            "An agent-free interpolant over {p} would be true at the left endpoint and false at the right one.",
        ],
    )
    st = _Steps(cert)

    _modelhood(st, [(f"M{j1}", M1), (f"M{j2}", M2)])
    if st.failed:
        return cert

    left_p, right_p = PointedModel(M1, "m"), PointedModel(M2, "m")
    R = diagonal(left_p)
    try:
        rep = atoms_only_agreement(left_p, right_p, R, [p], max_size=agreement_size)
        st.record("atoms", "agreement",
                  f"diagonal agrees on all {rep.checked} agent-free formulas over {{{p}}} "
                  f"up to size {agreement_size}", rep.ok,
                  None if rep.ok else rep.counterexample.to_dict())
    except TransferError as exc:
        st.record("atoms", "agreement", "diagonal is total and respects atoms", False, {"error": str(exc)})
    if st.failed:
        return cert

    script = derive_s_counterexample(j1, j2, p)
    res = check_proof(script)
    st.record("proof", "proof-check", f"derivation of {to_text(script.conclusion)} is accepted "
              f"({len(script.lines)} lines)", res.ok,
              None if res.ok else {"line": res.line, "reason": res.reason})
    st.record("proof", "proof-check", f"the derivation concludes {to_text(Implies(A, B))}",
              desugar(script.conclusion) == desugar(Implies(A, B)))
    if st.failed:
        return cert

    for name, model, f, want in ((f"M{j1}", M1, A, True), (f"M{j2}", M2, B, False)):
        ok, w = _in_language(model, f)
        st.record("satisfaction", "language", f"{to_text(f)} is in the language of {name}", ok, w)
        if ok:
            rel = "|=" if want else "|/="
            st.record("satisfaction", "model-check", f"{name}, m, {h0} {rel} {to_text(f)}",
                      satisfies(model, "m", h0, f) == want)
    if st.failed:
        return cert

    v = validity_up_to(Implies(A, B), frame_bound)
    st.record("bounded-validity", "bounded-validity",
              f"{to_text(Implies(A, B))} has no countermodel with at most {frame_bound} histories",
              isinstance(v, ValidUpTo))
    return cert


# ---------------------------------------------------------------------------
# bounded interpolant and separator search

class InterpolationError(ValueError):
    """Search called outside its preconditions."""


@dataclass(frozen=True)
class Found:
    formula: Formula
    size: int
    kind = "found"

    def to_dict(self) -> dict:
        return {"verdict": self.kind, "formula": to_text(resugar(self.formula)), "size": self.size}


@dataclass(frozen=True)
class Separating(Found):
    kind = "separating"


@dataclass(frozen=True)
class NotFoundUpTo:
    size_bound: int
    frame_bound: int
    classes: int
    kind = "not-found"

    def to_dict(self) -> dict:
        return {"verdict": self.kind, "size_bound": self.size_bound,
                "frame_bound": self.frame_bound, "classes_explored": self.classes}


def _candidates(universe: FrameUniverse, variables: Sequence[str], agents: Sequence[int], max_size: int,
                accept: Callable[[np.ndarray], np.ndarray]):
    """Enumerate formulas by size, one per bounded-semantics class.

    ``accept`` maps a stack of vectors to a boolean mask; the first accepted
    candidate in canonical order is returned with its size, else ``None`` and
    the number of classes seen.
    """
    seen: set[bytes] = set()
    levels: list[tuple[list[Formula], np.ndarray]] = [([], np.zeros((0, universe.size), bool))]

    def admit(forms: list, vecs: np.ndarray):
        keep_f, keep_v = [], []
        if len(forms) == 0:
            return [], np.zeros((0, universe.size), bool)
        packed = np.packbits(vecs, axis=1)
        _, first = np.unique(packed, axis=0, return_index=True)
        for i in np.sort(first):
            key = packed[i].tobytes()
            if key not in seen:
                seen.add(key)
                keep_f.append(forms[i])
                keep_v.append(i)
        return keep_f, vecs[keep_v]

    for k in range(1, max_size + 1):
        forms: list[Formula] = []
        parts: list[np.ndarray] = []
        if k == 1:
            forms = [BOTTOM] + [Var(v) for v in variables]
            parts = [np.stack([universe.bottom()] + [universe.var(v) for v in variables])]
        else:
            pf, pv = levels[k - 1]
            if pf:
                forms += [Box(f) for f in pf]
                parts.append(universe.box(pv))
                for j in agents:
                    forms += [Stit(j, f) for f in pf]
                    parts.append(universe.stit(j, pv))
            for i in range(1, k - 1):
                lf, lv = levels[i]
                rf, rv = levels[k - 1 - i]
                if not lf or not rf:
                    continue
                forms += [Implies(a, b) for a in lf for b in rf]
                parts.append((~lv[:, None, :] | rv[None, :, :]).reshape(-1, universe.size))
        vecs = np.concatenate(parts) if parts else np.zeros((0, universe.size), bool)
        kf, kv = admit(forms, vecs)
        levels.append((kf, kv))
        if kf:
            hits = np.nonzero(accept(kv))[0]
            if len(hits):
                return kf[hits[0]], k, len(seen)
    return None, None, len(seen)


def interpolant_search(
    A: Formula,
    B: Formula,
    size_bound: int = 9,
    frame_bound: int = DEFAULT_BOUND,
    mode: str = "rcip",
) -> Found | NotFoundUpTo:
    """Smallest ``C`` over the shared vocabulary with ``A -> C`` and ``C -> B`` valid up to the bound.

    ``mode="rcip"`` allows the agents of both formulas in ``C`` (they must be
    disjoint); ``mode="srcip"`` allows no action modalities at all.
    Candidates that denote the same set of points as an earlier one are
    skipped, so the result is minimal in size but may be a different member
    of its class than plain enumeration would give.
    """
    if mode not in ("rcip", "srcip"):
        raise InterpolationError(f"unknown mode {mode!r}")
    va, vb = vocabulary(A), vocabulary(B)
    if va.agents & vb.agents:
        raise InterpolationError(f"antecedent and consequent share agents {sorted(va.agents & vb.agents)}")
    if not isinstance(validity_up_to(Implies(A, B), frame_bound), ValidUpTo):
        raise InterpolationError(f"{to_text(Implies(A, B))} has a countermodel within {frame_bound} histories")
    universe = FrameUniverse(va.agents | vb.agents, va.vars | vb.vars, frame_bound)
    fa, fb = universe.evaluate(A), universe.evaluate(B)
    shared = sorted(va.vars & vb.vars)
    agents = sorted(va.agents | vb.agents) if mode == "rcip" else []

    def accept(vs):
        return (~fa | vs).all(axis=1) & (~vs | fb).all(axis=1)

    c, k, classes = _candidates(universe, shared, agents, size_bound, accept)
    if c is None:
        return NotFoundUpTo(size_bound, frame_bound, classes)
    for f in (Implies(A, c), Implies(c, B)):
        if not isinstance(validity_up_to(f, frame_bound), ValidUpTo):
            raise AssertionError(f"interpolant {to_text(c)} failed re-verification on {to_text(f)}")
    return Found(c, size(c))


def is_separable_bounded(
    gamma: Iterable[Formula],
    delta: Iterable[Formula],
    size_bound: int = 9,
    frame_bound: int = DEFAULT_BOUND,
) -> Separating | NotFoundUpTo:
    """Search a shared-vocabulary ``A`` with ``Gamma -> A`` and ``Delta -> ~A`` valid up to the bound."""
    gamma, delta = list(gamma), list(delta)
    vg, vd = vocabulary(gamma), vocabulary(delta)
    if vg.agents & vd.agents:
        raise InterpolationError(f"the two sets share agents {sorted(vg.agents & vd.agents)}")
    universe = FrameUniverse(vg.agents | vd.agents, vg.vars | vd.vars, frame_bound)
    fg, fd = universe.evaluate(conj(gamma)), universe.evaluate(conj(delta))
    shared = sorted(vg.vars & vd.vars)

    def accept(vs):
        return (~fg | vs).all(axis=1) & (~fd | ~vs).all(axis=1)

    c, k, classes = _candidates(universe, shared, sorted(vg.agents | vd.agents), size_bound, accept)
    if c is None:
        return NotFoundUpTo(size_bound, frame_bound, classes)
    for f in (Implies(conj(gamma), c), Implies(conj(delta), Not(c))):
        if not isinstance(validity_up_to(f, frame_bound), ValidUpTo):
            raise AssertionError(f"separator {to_text(c)} failed re-verification on {to_text(f)}")
    return Separating(c, size(c))
