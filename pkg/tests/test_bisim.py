import numpy as np
import pytest
from hypothesis import given, strategies as st

from stitlab.bisim import (
    Agree, Disagree, HistoryRelation, PointedModel, TransferError, atoms_only_agreement, diagonal,
    is_bisimulation, load_relation, max_bisimulation, save_relation, transfer_check, transfer_suite,
)
from stitlab.paperlab import build_B, build_M, build_S, build_S_prime, reduct
from stitlab.semantics import StitModel, random_model
from stitlab.syntax import Var, parse, random_formula

H0, G0 = "dag>t0000p", "ddag>t0000p"


@pytest.fixture(scope="module")
def reducts():
    return (PointedModel(reduct(build_S(), ["q"]), "dag"),
            PointedModel(reduct(build_S_prime(), ["q"]), "ddag"))


def leaves(names, agents=(1,), choice=None, valuation=()):
    return StitModel(["r"] + names, [("r", x) for x in names], agents,
                     {"r": choice} if choice else None, valuation)


# --- checking ---------------------------------------------------------------

def test_B_is_a_bisimulation(reducts):
    left, right = reducts
    B = build_B()
    assert len(B) == 23 * 16 + 9 * 16
    assert is_bisimulation(left, right, B, ["q"]).ok


def test_diagonal_is_a_bisimulation(rng):
    for _ in range(10):
        M = random_model(rng, 6, (1, 2), ("p", "q"))
        pm = PointedModel(M, "m0")
        assert is_bisimulation(pm, pm, diagonal(pm), ["p", "q"]).ok


def test_missing_one_pair_is_still_a_bisimulation(reducts):
    # every history keeps other partners, so a single deletion is harmless
    left, right = reducts
    assert is_bisimulation(left, right, build_B().without((H0, G0)), ["q"]).ok


def test_removing_partners_inside_an_agent3_cell_breaks_forth(reducts):
    left, right = reducts
    gone = [(H0, g) for g in right.histories if (H0, g) in build_B() and g.split(">")[1][3] == "0"]
    res = is_bisimulation(left, right, build_B().without(*gone), ["q"])
    assert not res.ok
    v = res.first
    assert v.condition == "forth" and v.witness["agent"] == 3 and v.witness["history"] == H0


@pytest.mark.parametrize("agree", [True, False])
def test_removing_a_q_agreement_class_breaks_totality(reducts, agree):
    left, right = reducts
    B = build_B()
    block = [(a, b) for a, b in B if left.true_at("q", a) == agree]
    res = is_bisimulation(left, right, B.without(*block), ["q"])
    assert [v.condition for v in res.violations][:2] == ["domain", "counterdomain"]


def test_atoms_violation_is_named(reducts):
    left, right = reducts
    R = HistoryRelation(list(build_B()) + [("dag>t0101m", "ddag>t0000p")])
    res = is_bisimulation(left, right, R, ["q"])
    assert res.first.condition == "atoms"
    assert res.first.witness["pair"] == ["dag>t0101m", "ddag>t0000p"]


def test_pairs_outside_the_moment_are_rejected(reducts):
    left, right = reducts
    res = is_bisimulation(left, right, HistoryRelation([("nope", G0)]), ["q"])
    assert res.first.condition == "membership"


def test_relation_json_round_trip(tmp_path):
    save_relation(build_B(), tmp_path / "b.json")
    assert load_relation(tmp_path / "b.json") == build_B()


# --- maximal bisimulation ---------------------------------------------------

def test_max_bisimulation_contains_B(reducts):
    left, right = reducts
    R = max_bisimulation(left, right, ["q"])
    assert build_B() <= R
    assert R.domain() == left.histories and R.counterdomain() == right.histories
    assert is_bisimulation(left, right, R, ["q"]).ok


def test_max_bisimulation_of_disagreeing_models_is_empty():
    a = PointedModel(leaves(["x", "y"], valuation=[("p", "r", "r>x"), ("p", "r", "r>y")]), "r")
    b = PointedModel(leaves(["z"]), "r")
    assert len(max_bisimulation(a, b, ["p"])) == 0


def test_partial_max_bisimulation_is_returned():
    a = PointedModel(leaves(["x", "y"], (), valuation=[("p", "r", "r>x")]), "r")
    b = PointedModel(leaves(["z"], (), valuation=[("p", "r", "r>z")]), "r")
    R = max_bisimulation(a, b, ["p"])
    assert R == HistoryRelation([("r>x", "r>z")])
    # with a vacuous agent choice, forth also needs a partner for y
    a1 = PointedModel(leaves(["x", "y"], (1,), valuation=[("p", "r", "r>x")]), "r")
    b1 = PointedModel(leaves(["z"], (1,), valuation=[("p", "r", "r>z")]), "r")
    assert len(max_bisimulation(a1, b1, ["p"])) == 0
    assert [v.condition for v in is_bisimulation(a, b, R, ["p"]).violations] == ["domain"]


def _clauses(res):
    return [v for v in res.violations if v.condition in ("atoms", "forth", "back")]


@given(st.integers(0, 2**32 - 1))
def test_max_bisimulation_is_maximal(seed):
    rng = np.random.default_rng(seed)
    a = PointedModel(random_model(rng, 8, (1, 2), ("p",)), "m0")
    b = PointedModel(random_model(rng, 8, (1, 2), ("p",)), "m0")
    R = max_bisimulation(a, b, ["p"])
    assert not _clauses(is_bisimulation(a, b, R, ["p"], limit=10**6))
    for h in a.histories:
        for g in b.histories:
            if (h, g) in R or a.true_at("p", h) != b.true_at("p", g):
                continue
            bigger = HistoryRelation(list(R) + [(h, g)])
            assert _clauses(is_bisimulation(a, b, bigger, ["p"]))


def test_model_with_itself_contains_the_diagonal(rng):
    for _ in range(10):
        pm = PointedModel(random_model(rng, 6, (1, 2), ("p", "q")), "m0")
        assert diagonal(pm) <= max_bisimulation(pm, pm, ["p", "q"])


# --- transfer ---------------------------------------------------------------

def test_transfer_on_B(reducts, rng):
    left, right = reducts
    fs = [random_formula(rng, 3, ("q",), (1, 2, 3, 4)) for _ in range(200)]
    assert transfer_suite(left, right, build_B(), fs, ["q"]) == []


def test_transfer_check_single_pair(reducts):
    left, right = reducts
    assert transfer_check(left, right, build_B(), H0, G0, Var("q")) == Agree(True)
    with pytest.raises(TransferError):
        transfer_check(left, right, build_B(), H0, "ddag>t0010p", Var("q"))
    with pytest.raises(TransferError):
        transfer_check(left, right, build_B(), H0, G0, parse("p"), ["q"])


def test_corrupt_relation_is_rejected_before_transfer(reducts):
    left, right = reducts
    gone = [(H0, g) for g in right.histories if (H0, g) in build_B() and g.split(">")[1][3] == "0"]
    bad = build_B().without(*gone)
    f = parse("[3]~q")
    with pytest.raises(TransferError, match="not a bisimulation"):
        transfer_suite(left, right, bad, [f], ["q"])
    out = [transfer_check(left, right, bad, a, b, f, ["q"], require_bisimulation=False) for a, b in bad]
    assert all(isinstance(x, (Agree, Disagree)) for x in out)


@given(st.integers(0, 2**32 - 1))
def test_total_bisimulations_transfer(seed):
    rng = np.random.default_rng(seed)
    a = PointedModel(random_model(rng, 6, (1, 2), ("p",)), "m0")
    b = PointedModel(random_model(rng, 6, (1, 2), ("p",)), "m0")
    R = max_bisimulation(a, b, ["p"])
    if R.domain() != a.histories or R.counterdomain() != b.histories:
        return
    fs = [random_formula(rng, 3, ("p",), (1, 2)) for _ in range(20)]
    assert transfer_suite(a, b, R, fs, ["p"]) == []


# --- agreement without action modalities -----------------------------------

def test_diagonal_of_the_two_point_models():
    a, b = PointedModel(build_M(1), "m"), PointedModel(build_M(2), "m")
    rep = atoms_only_agreement(a, b, diagonal(a), ["p"], max_size=7, max_depth=2)
    assert rep.ok and rep.checked > 100
    assert rep.bounds == {"max_size": 7, "max_depth": 2}
    assert atoms_only_agreement(a, b, diagonal(a), ["p"], formulas=[Var("p")]).ok


def test_action_modalities_are_out_of_fragment():
    a, b = PointedModel(build_M(1), "m"), PointedModel(build_M(2), "m")
    with pytest.raises(TransferError, match="outside the fragment"):
        atoms_only_agreement(a, b, diagonal(a), ["p"], formulas=[parse("<>[1]p")])


def test_atoms_failure_is_a_precondition_error():
    a = PointedModel(build_M(1), "m")
    moved = build_M(2).replace(valuation=[("p", "m", "m>m1")])
    with pytest.raises(TransferError, match="atoms"):
        atoms_only_agreement(a, PointedModel(moved, "m"), diagonal(a), ["p"])


@given(st.integers(0, 2**32 - 1))
def test_any_total_atoms_relation_agrees_without_action_modalities(seed):
    rng = np.random.default_rng(seed)
    a = PointedModel(random_model(rng, 5, (1, 2), ("p",)), "m0")
    b = PointedModel(random_model(rng, 5, (3,), ("p",)), "m0")
    R = HistoryRelation((h, g) for h in a.histories for g in b.histories
                        if a.true_at("p", h) == b.true_at("p", g))
    if R.domain() != a.histories or R.counterdomain() != b.histories:
        return
    assert atoms_only_agreement(a, b, R, ["p"], max_size=6).ok
