import itertools

import pytest

from stitlab.derivations import DerivationError
from stitlab.frames import FrameUniverse, ValidUpTo, validity_up_to
from stitlab.paperlab import (
    Found, FourTuple, InterpolationError, NotFoundUpTo, Separating, build_B, build_M, build_S,
    build_S_prime, certify_negative, certify_strong_negative, formula_A, formula_B, four_tuples,
    interpolant_search, is_separable_bounded, reduct,
)
from stitlab.semantics import ModelError, satisfies, truth_set, validate
from stitlab.syntax import Implies, Var, enumerate_formulas, parse, vocabulary

S, S2 = build_S(), build_S_prime()


def h(core, sign):
    return f"dag>t{core}{'p' if sign == '+' else 'm'}"


def g(core, sign):
    return f"ddag>t{core}{'p' if sign == '+' else 'm'}"


# --- four-tuples and models -------------------------------------------------

def test_four_tuples():
    ts = four_tuples()
    assert len(ts) == len(set(ts)) == 32
    cores = {t.core for t in ts}
    assert all(FourTuple(c, s) in ts for c in cores for s in "+-")
    t = FourTuple((0, 1, 1, 0), "-")
    assert [t.pr(j) for j in (1, 2, 3, 4)] == [0, 1, 1, 0]
    assert FourTuple.from_name(t.name) == t and str(t) == "(0,1,1,0)-"


def test_valuation_examples():
    assert S.true_at("q", "dag", h("0000", "+"))
    assert not S.true_at("q", "dag", h("0101", "-"))
    assert not S2.true_at("q", "ddag", g("0010", "+"))
    assert S2.true_at("q", "ddag", g("0000", "+"))


def test_valuation_class_sizes():
    assert len(truth_set(S, "dag", Var("q"))) == 23
    assert len(truth_set(S2, "ddag", Var("q"))) == 16
    assert len(truth_set(S, "dag", Var("p"))) == 16
    assert len(truth_set(S2, "ddag", Var("r"))) == 16


def test_languages_and_modelhood():
    assert S.variables == {"p", "q"} and S2.variables == {"q", "r"}
    assert validate(S) == [] and validate(S2) == []


def test_choice_cells_follow_projections():
    for model, root in ((S, "dag"), (S2, "ddag")):
        for t, j in itertools.product(four_tuples(), (1, 2, 3, 4)):
            expected = {f"{root}>{u.name}" for u in four_tuples() if u.pr(j) == t.pr(j)}
            assert model.cell(root, j, f"{root}>{t.name}") == expected


def test_left_and_right_facts_at_every_history():
    A_body = parse("<>([1]p & [2](p -> q))")
    B_body = parse("<>([3]r & [4](r -> ~q))")
    assert truth_set(S, "dag", A_body) == S.histories_through("dag")
    assert truth_set(S2, "ddag", B_body) == S2.histories_through("ddag")
    assert satisfies(S2, "ddag", g("0010", "+"), parse("[3]r"))


def test_reducts():
    Sq = reduct(S, ["q"])
    assert {v for v, _, _ in Sq.valuation} == {"q"}
    assert reduct(S, S.variables) == S
    assert reduct(S2, ["q"]).variables == {"q"}
    with pytest.raises(ModelError):
        reduct(S, ["r"])


def test_B_examples():
    B = build_B()
    assert (h("0000", "+"), g("0000", "+")) in B
    assert (h("0000", "+"), g("0010", "+")) not in B
    assert B.domain() == S.histories_through("dag")
    assert B.counterdomain() == S2.histories_through("ddag")
    assert len(B) == 512


def test_two_point_models():
    M1, M2 = build_M(1), build_M(2)
    assert validate(M1) == [] and validate(M2) == []
    assert {x.name for x in M1.histories} == {"m>m0", "m>m1"}
    assert satisfies(M1, "m", "m>m0", parse("<>[1]p"))
    assert satisfies(M2, "m", "m>m0", parse("<>[2]~p"))


# --- the case split behind the bisimulation, witness by witness -------------

def _cell_right(core, sign, j, target):
    return g(target[0], target[1]) in S2.cell("ddag", j, g(core, sign))


def _cell_left(core, sign, j, target):
    return h(target[0], target[1]) in S.cell("dag", j, h(core, sign))


def _core(bits):
    return "".join(map(str, bits))


@pytest.mark.parametrize("a, b", list(itertools.product((0, 1), repeat=2)))
def test_forth_witnesses_for_q_false_targets(a, b):
    # right partner in the cell whose last two coordinates are 00: q fails at the named witness
    for sign in "+-":
        src = (_core((a, b, 0, 0)), sign)
        for j in (1, 2, 3, 4):
            w = (_core((a, b, 1, 0)), "+") if j != 3 else (_core((a, b, 0, 1)), "-")
            assert _cell_right(*src, j, w)
            assert not S2.true_at("q", "ddag", g(*w))


@pytest.mark.parametrize("a, b", list(itertools.product((0, 1), repeat=2)))
def test_forth_witnesses_for_q_true_targets(a, b):
    for sign in "+-":
        src = (_core((a, b, 1, 0)), sign)
        for j in (1, 2, 3, 4):
            w = (_core((a, b, 0, 0)), "+") if j != 3 else (_core((a, b, 1, 1)), "+")
            assert _cell_right(*src, j, w)
            assert S2.true_at("q", "ddag", g(*w))


def test_back_witnesses_at_the_zero_core():
    for sign in "+-":
        for j in (1, 2, 3, 4):
            w = ("0101", "-") if j in (1, 3) else ("1010", "-")
            assert _cell_left("0000", sign, j, w)
            assert not S.true_at("q", "dag", h(*w))


@pytest.mark.parametrize("a, b", [(0, 1), (1, 0), (1, 1)])
def test_back_witnesses_off_the_zero_core(a, b):
    for sign in "+-":
        for j in (1, 2, 3, 4):
            w = (_core((0, 1, a, b)) if j == 1 else _core((1, 0, a, b)), "-")
            assert _cell_left(_core((0, 0, a, b)), sign, j, w)
            assert not S.true_at("q", "dag", h(*w))
            w = (_core((a, b, 0, 1)) if j != 4 else _core((a, b, 1, 0)), "-")
            assert _cell_left(_core((a, b, 0, 0)), sign, j, w)
            assert not S.true_at("q", "dag", h(*w))


# --- certificates -----------------------------------------------------------

def test_negative_certificate():
    cert = certify_negative()
    assert cert.verdict == "certified"
    steps = [f.step for f in cert.facts]
    assert steps.index("modelhood") < steps.index("satisfaction") < steps.index("proof") \
        < steps.index("bisimulation") < steps.index("bounded-validity")
    assert all(f.verdict for f in cert.facts)
    assert cert.bounds["frame_bound"] == 3


def test_certificates_are_reproducible():
    assert certify_negative().to_json() == certify_negative().to_json()
    assert certify_strong_negative().to_json() == certify_strong_negative().to_json()


def test_negative_certificate_fails_at_bisimulation_without_the_endpoint_pair():
    B = build_B().without((h("0000", "+"), g("0000", "+")))
    assert certify_negative(relation=B).verdict == "failed(bisimulation)"


def test_negative_certificate_fails_at_bisimulation_with_a_broken_relation():
    gone = [(h("0000", "+"), x) for x in S2.histories_through("ddag")
            if x[9] == "0" and (h("0000", "+"), x) in build_B()]
    assert certify_negative(relation=build_B().without(*gone)).verdict == "failed(bisimulation)"


def test_negative_certificate_with_swapped_formulas_fails_at_satisfaction():
    cert = certify_negative(antecedent=formula_B(), consequent=formula_A())
    assert cert.verdict == "failed(satisfaction)"
    assert cert.facts[-1].kind == "language"


def test_negative_certificate_detects_a_broken_model():
    bad = S.replace(valuation=[t for t in S.valuation if t[0] != "p"], variables=["p", "q"])
    assert certify_negative(left=bad).verdict == "failed(satisfaction)"
    broken = S.replace(choice={"dag": {1: [sorted(S.histories_through("dag"))[:3]]}})
    assert certify_negative(left=broken).verdict == "failed(modelhood)"


def test_strong_certificate():
    cert = certify_strong_negative()
    assert cert.verdict == "certified"
    assert [f.step for f in cert.facts][:3] == ["modelhood", "modelhood", "atoms"]


def test_strong_certificate_fails_at_atoms_when_p_moves():
    moved = build_M(2).replace(valuation=[("p", "m", "m>m1")])
    assert certify_strong_negative(right=moved).verdict == "failed(atoms)"
    moved = build_M(1).replace(valuation=[("p", "m", "m>m1")])
    assert certify_strong_negative(left=moved).verdict == "failed(atoms)"


def test_strong_certificate_with_equal_agents_raises():
    with pytest.raises(DerivationError):
        certify_strong_negative(1, 1)


# --- bounded searches -------------------------------------------------------

def test_rcip_interpolant_is_found_and_verified():
    A, B = parse("<>[1]p"), parse("~<>[2]~p")
    res = interpolant_search(A, B, 9, 3)
    assert isinstance(res, Found) and res.size <= 9
    assert vocabulary(res.formula).vars <= {"p"}
    for bound, large in ((3, False), (4, True)):
        for f in (Implies(A, res.formula), Implies(res.formula, B)):
            assert isinstance(validity_up_to(f, bound, allow_large=large), ValidUpTo)


def test_propositional_interpolant():
    assert interpolant_search(parse("p & q"), parse("q | r")).formula == Var("q")


def test_no_agent_free_interpolant_in_bounds():
    for sb, fb in ((5, 2), (9, 3)):
        res = interpolant_search(parse("<>[1]p"), parse("~<>[2]~p"), sb, fb, mode="srcip")
        assert isinstance(res, NotFoundUpTo) and res.size_bound == sb


def test_interpolation_preconditions():
    with pytest.raises(InterpolationError, match="share agents"):
        interpolant_search(parse("[1]p"), parse("<>[1]p"))
    with pytest.raises(InterpolationError, match="countermodel"):
        interpolant_search(parse("p"), parse("q"))
    with pytest.raises(InterpolationError):
        interpolant_search(parse("p"), parse("p"), mode="other")


def test_found_interpolant_is_minimal():
    res = interpolant_search(parse("<>[1]p"), parse("~<>[2]~p"))
    U = FrameUniverse((1, 2), ("p",), 3)
    fa, fb = U.evaluate(parse("<>[1]p")), U.evaluate(parse("~<>[2]~p"))
    for c in enumerate_formulas(["p"], [1, 2], res.size - 1):
        v = U.evaluate(c)
        assert not ((~fa | v).all() and (~v | fb).all())


def test_separability():
    assert is_separable_bounded([parse("p")], [parse("~p")]) == Separating(Var("p"), 1)
    res = is_separable_bounded([parse("<>[1]p")], [parse("<>[2]~p")])
    assert isinstance(res, Separating)
    assert isinstance(is_separable_bounded([parse("p")], [parse("q")]), NotFoundUpTo)
    with pytest.raises(InterpolationError):
        is_separable_bounded([parse("[1]p")], [parse("[1]q")])
