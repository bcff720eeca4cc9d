"""Programmatic construction of checked proof scripts.

:class:`ProofBuilder` appends lines and offers the derived rules the chains
need (monotonicity of a modality, the dual K law, axiom 4, propositional
steps).  Every line is checked as it is added, so a builder bug surfaces at
construction time rather than as a rejected script.
"""

from __future__ import annotations

from typing import Sequence

from .proof import (
    A3, BOX, TAUT, Axiom, MP, Modality, Nec, ProofLine, ProofScript, SchemeId,
    check_proof, is_tautology, match_axiom,
)
from .syntax import (
    And, Box, Diamond, Formula, Implies, Not, Stit, StitDual, Var, conj, desugar,
)

__all__ = [
    "ProofBuilder", "DerivationError",
    "derive_technical2", "derive_technical3", "derive_box_to_stit_box",
    "derive_counterexample", "derive_s_counterexample", "derive_axiom4",
]


class DerivationError(ValueError):
    """Bad input to a derivation builder (duplicate agents, broken premise...)."""


def mod(m: Modality, x: Formula) -> Formula:
    return Box(x) if m == BOX else Stit(m, x)


def dual(m: Modality, x: Formula) -> Formula:
    return Diamond(x) if m == BOX else StitDual(m, x)


def _imps(premises: Sequence[Formula], concl: Formula) -> Formula:
    out = concl
    for p in reversed(premises):
        out = Implies(p, out)
    return out


class ProofBuilder:
    def __init__(self):
        self.lines: list[ProofLine] = []
        self._by_formula: dict[Formula, int] = {}

    def __len__(self):
        return len(self.lines)

    def formula(self, i: int) -> Formula:
        return self.lines[i - 1].formula

    def _add(self, f: Formula, just) -> int:
        key = desugar(f)
        if key in self._by_formula:
            return self._by_formula[key]
        idx = len(self.lines) + 1
        self.lines.append(ProofLine(idx, f, just))
        self._by_formula[key] = idx
        return idx

    # primitive steps

    def axiom(self, f: Formula, scheme: SchemeId) -> int:
        inst = match_axiom(f, scheme)
        if inst is None:
            raise DerivationError(f"not an instance of {scheme}: {f}")
        return self._add(f, Axiom(scheme, inst))

    def taut(self, f: Formula) -> int:
        if not is_tautology(f):
            raise DerivationError(f"not a tautology: {f}")
        return self._add(f, Axiom(TAUT))

    def mp(self, minor: int, major: int) -> int:
        imp = desugar(self.formula(major))
        if not isinstance(imp, Implies) or imp.left != desugar(self.formula(minor)):
            raise DerivationError(f"mp {minor} {major}: shapes do not fit")
        f = self.formula(major)
        concl = f.right if isinstance(f, Implies) else imp.right
        return self._add(concl, MP(minor, major))

    def nec(self, i: int) -> int:
        return self._add(Box(self.formula(i)), Nec(i))

    def include(self, script: ProofScript) -> int:
        """Copy a checked script in; returns the line of its conclusion."""
        res = check_proof(script)
        if not res:
            raise DerivationError(f"premise script rejected at line {res.line}: {res.reason}")
        remap: dict[int, int] = {}
        for line in script.lines:
            j = line.justification
            if isinstance(j, Axiom):
                remap[line.index] = self._add(line.formula, j)
            elif isinstance(j, MP):
                remap[line.index] = self._add(line.formula, MP(remap[j.minor], remap[j.major]))
            else:
                remap[line.index] = self._add(line.formula, Nec(remap[j.premise]))
        return remap[script.lines[-1].index]

    # derived rules

    def by_taut(self, premises: Sequence[int], concl: Formula) -> int:
        """``concl`` from premise lines when ``p1 -> ... -> pn -> concl`` is a tautology."""
        i = self.taut(_imps([self.formula(p) for p in premises], concl))
        for p in premises:
            i = self.mp(p, i)
        return i

    def nec_mod(self, m: Modality, i: int) -> int:
        """From ``X`` infer ``M X`` (for ``[j]`` via ``[]X -> [j]X``)."""
        b = self.nec(i)
        if m == BOX:
            return b
        x = self.formula(i)
        return self.mp(b, self.axiom(Implies(Box(x), Stit(m, x)), SchemeId("A2", m)))

    def k_axiom(self, m: Modality, x: Formula, y: Formula) -> int:
        return self.axiom(Implies(mod(m, Implies(x, y)), Implies(mod(m, x), mod(m, y))), SchemeId("K", m))

    def k_step(self, m: Modality, i: int) -> int:
        """From ``M(X -> Y)`` infer ``MX -> MY``."""
        f = self.formula(i)
        inner = f.body if isinstance(f, (Box, Stit)) else desugar(f).body
        if not isinstance(inner, Implies):
            inner = desugar(inner)
        return self.mp(i, self.k_axiom(m, inner.left, inner.right))

    def mono(self, m: Modality, i: int) -> int:
        """From ``X -> Y`` infer ``MX -> MY``."""
        return self.k_step(m, self.nec_mod(m, i))

    def dual_mono(self, m: Modality, i: int) -> int:
        """From ``X -> Y`` infer ``<M>X -> <M>Y``."""
        f = self.formula(i)
        x, y = (f.left, f.right) if isinstance(f, Implies) else (desugar(f).left, desugar(f).right)
        contra = self.by_taut([i], Implies(Not(y), Not(x)))
        boxed = self.mono(m, contra)
        return self.by_taut([boxed], Implies(dual(m, x), dual(m, y)))

    def k_dual(self, m: Modality, x: Formula, y: Formula) -> int:
        """``M(X -> Y) -> (<M>X -> <M>Y)``."""
        t = self.taut(Implies(Implies(x, y), Implies(Not(y), Not(x))))
        a = self.mono(m, t)
        k = self.k_axiom(m, Not(y), Not(x))
        return self.by_taut([a, k], Implies(mod(m, Implies(x, y)), Implies(dual(m, x), dual(m, y))))

    def axiom4(self, m: Modality, a: Formula) -> int:
        """``MA -> MMA`` from K, T and 5."""
        nna = Not(Not(a))
        five = self.axiom(Implies(dual(m, Not(a)), mod(m, dual(m, Not(a)))), SchemeId("5", m))
        # <M>M~~A -> M~~A
        back = self.by_taut([five], Implies(dual(m, mod(m, nna)), mod(m, nna)))
        to_nn = self.mono(m, self.taut(Implies(a, nna)))
        from_nn = self.mono(m, self.taut(Implies(nna, a)))
        up = self.dual_mono(m, to_nn)
        d5 = self.by_taut([up, back, from_nn], Implies(dual(m, mod(m, a)), mod(m, a)))
        # MA -> M<M>MA
        t = self.axiom(Implies(mod(m, Not(mod(m, a))), Not(mod(m, a))), SchemeId("T", m))
        five2 = self.axiom(Implies(dual(m, mod(m, a)), mod(m, dual(m, mod(m, a)))), SchemeId("5", m))
        b = self.by_taut([t, five2], Implies(mod(m, a), mod(m, dual(m, mod(m, a)))))
        lift = self.mono(m, d5)
        return self.by_taut([b, lift], Implies(mod(m, a), mod(m, mod(m, a))))

    def box_and_dia(self, x: Formula, y: Formula) -> int:
        """``([]X & <>Y) -> <>(X & Y)``."""
        t = self.taut(Implies(x, Implies(y, And(x, y))))
        a = self.mono(BOX, t)
        kd = self.k_dual(BOX, y, And(x, y))
        return self.by_taut([a, kd], Implies(And(Box(x), Diamond(y)), Diamond(And(x, y))))

    def script(self) -> ProofScript:
        return ProofScript(tuple(self.lines))

    def finish(self, concl_line: int) -> ProofScript:
        """The checked script, with ``concl_line`` restated last if needed."""
        if concl_line != len(self.lines):
            # the conclusion was deduplicated onto an earlier line; restate it last
            f = self.formula(concl_line)
            t = self.taut(Implies(f, f))
            self.lines.append(ProofLine(len(self.lines) + 1, f, MP(concl_line, t)))
        ps = self.script()
        res = check_proof(ps)
        if not res:
            raise AssertionError(f"builder produced a rejected script: line {res.line}: {res.reason}")
        return ps


def _bridge(b: ProofBuilder, premise: ProofScript, target: Formula) -> int:
    i = b.include(premise)
    if desugar(b.formula(i)) == desugar(target):
        return i
    if not is_tautology(Implies(b.formula(i), target)):
        raise DerivationError(f"premise concludes {premise.conclusion}, expected {target}")
    return b.by_taut([i], target)


def _distinct(agents: Sequence[int], what: str) -> None:
    if len(set(agents)) != len(agents):
        raise DerivationError(f"{what} must be pairwise different, got {list(agents)}")


def _var(p) -> Var:
    return p if isinstance(p, Var) else Var(p)


def derive_box_to_stit_box(a: Formula, j: int) -> ProofScript:
    """``[]A -> [j][]A`` (axiom 4 for ``[]`` followed by A2)."""
    b = ProofBuilder()
    four = b.axiom4(BOX, a)
    a2 = b.axiom(Implies(Box(Box(a)), Stit(j, Box(a))), SchemeId("A2", j))
    return b.finish(b.by_taut([four, a2], Implies(Box(a), Stit(j, Box(a)))))


def derive_axiom4(m: Modality, a: Formula) -> ProofScript:
    b = ProofBuilder()
    return b.finish(b.axiom4(m, a))


def derive_technical3(a: Formula, bf: Formula, c: Formula, j: int, premise: ProofScript) -> ProofScript:
    """From a proof of ``([]A & [j]B) -> C`` build one of ``([]A & <>[j]B) -> <>[j]C``."""
    pb = ProofBuilder()
    ante = And(Box(a), Stit(j, bf))
    p1 = _bridge(pb, premise, Implies(ante, c))
    p2 = pb.nec_mod(j, p1)
    kj = pb.k_step(j, p2)  # [j](.) -> [j]C
    # [j][]A & [j][j]B -> [j]([]A & [j]B)
    t = pb.taut(Implies(Box(a), Implies(Stit(j, bf), ante)))
    kb = pb.k_axiom(j, Stit(j, bf), ante)
    dist = pb.by_taut([pb.mono(j, t), kb],
                      Implies(And(Stit(j, Box(a)), Stit(j, Stit(j, bf))), Stit(j, ante)))
    four_j = pb.axiom4(j, bf)
    p3 = pb.by_taut([dist, four_j, kj], Implies(And(Stit(j, Box(a)), Stit(j, bf)), Stit(j, c)))
    four = pb.axiom4(BOX, a)
    p5 = pb.axiom(Implies(Box(Box(a)), Stit(j, Box(a))), SchemeId("A2", j))
    p6 = pb.by_taut([four, p5], Implies(Box(a), Stit(j, Box(a))))
    p7 = pb.by_taut([p3, p6], Implies(ante, Stit(j, c)))
    curried = pb.by_taut([p7], Implies(Box(a), Implies(Stit(j, bf), Stit(j, c))))
    lifted = pb.mono(BOX, curried)
    kd = pb.k_dual(BOX, Stit(j, bf), Stit(j, c))
    p8 = pb.by_taut([four, lifted, kd],
                    Implies(And(Box(a), Diamond(Stit(j, bf))), Diamond(Stit(j, c))))
    return pb.finish(p8)


def derive_technical2(
    a: Formula, bs: Sequence[Formula], c: Formula, agents: Sequence[int], j: int,
    premise: ProofScript,
) -> ProofScript:
    """From a proof of ``([]A & [i1]B1 & ... & [in]Bn) -> ~C`` build one of
    ``([]A & <>[i1]B1 & ... & <>[in]Bn) -> ~<>[j]C``; the agents and ``j``
    must be pairwise different."""
    bs, agents = list(bs), list(agents)
    if len(bs) != len(agents):
        raise DerivationError("one agent per formula B_k is needed")
    _distinct(agents + [j], "the agents i1..in, j")
    stits = [Stit(i, bk) for i, bk in zip(agents, bs)]
    x = conj([Box(a)] + stits)
    pb = ProofBuilder()
    e1 = _bridge(pb, premise, Implies(x, Not(c)))
    e2 = pb.axiom(Implies(conj([Diamond(s) for s in stits] + [Diamond(Stit(j, c))]),
                          Diamond(conj(stits + [Stit(j, c)]))), A3)
    tj = pb.axiom(Implies(Stit(j, c), c), SchemeId("T", j))
    drop = pb.by_taut([tj], Implies(conj(stits + [Stit(j, c)]), conj(stits + [c])))
    e3 = pb.dual_mono(BOX, drop)
    y = conj(stits + [c])
    four = pb.axiom4(BOX, a)
    bd = pb.box_and_dia(Box(a), y)
    e4 = pb.by_taut([four, bd], Implies(And(Box(a), Diamond(y)), Diamond(And(Box(a), y))))
    z = And(Box(a), y)
    e6 = pb.nec(e1)
    t = pb.taut(Implies(Implies(x, Not(c)), Not(z)))
    boxed = pb.mp(e6, pb.mono(BOX, t))
    e7 = pb.by_taut([boxed], Not(Diamond(z)))
    concl = Implies(conj([Box(a)] + [Diamond(s) for s in stits]), Not(Diamond(Stit(j, c))))
    return pb.finish(pb.by_taut([e2, e3, e4, e7], concl))


def derive_counterexample(j1: int, j2: int, j3: int, j4: int, p="p", q="q", r="r") -> ProofScript:
    """``<>([j1]p & [j2](p -> q)) -> ~<>([j3]r & [j4](r -> ~q))``."""
    _distinct([j1, j2, j3, j4], "agents")
    p, q, r = _var(p), _var(q), _var(r)
    _distinct([p.name, q.name, r.name], "variables")
    s1, s2, s3, s4 = Stit(j1, p), Stit(j2, Implies(p, q)), Stit(j3, r), Stit(j4, Implies(r, Not(q)))
    pb = ProofBuilder()
    ce2 = [pb.dual_mono(BOX, pb.taut(Implies(And(s1, s2), s))) for s in (s1, s2)]
    ce3 = [pb.dual_mono(BOX, pb.taut(Implies(And(s3, s4), s))) for s in (s3, s4)]
    big = conj([s1, s2, s3, s4])
    ce5 = pb.axiom(Implies(conj([Diamond(s) for s in (s1, s2, s3, s4)]), Diamond(big)), A3)
    ts = [pb.axiom(Implies(s, s.body), SchemeId("T", s.agent)) for s in (s1, s2, s3, s4)]
    ce7 = pb.by_taut(ts, Not(big))
    ce8 = pb.by_taut([pb.nec(ce7)], Not(Diamond(big)))
    concl = Implies(Diamond(And(s1, s2)), Not(Diamond(And(s3, s4))))
    return pb.finish(pb.by_taut(ce2 + ce3 + [ce5, ce8], concl))


def derive_s_counterexample(j1: int, j2: int, p="p") -> ProofScript:
    """``<>[j1]p -> ~<>[j2]~p``."""
    _distinct([j1, j2], "agents")
    p = _var(p)
    s1, s2 = Stit(j1, p), Stit(j2, Not(p))
    pb = ProofBuilder()
    sce1 = pb.axiom(Implies(And(Diamond(s1), Diamond(s2)), Diamond(And(s1, s2))), A3)
    t1 = pb.axiom(Implies(s1, p), SchemeId("T", j1))
    t2 = pb.axiom(Implies(s2, Not(p)), SchemeId("T", j2))
    sce2 = pb.by_taut([t1, t2], Not(And(s1, s2)))
    sce3 = pb.by_taut([pb.nec(sce2)], Not(Diamond(And(s1, s2))))
    return pb.finish(pb.by_taut([sce1, sce3], Implies(Diamond(s1), Not(Diamond(s2)))))
