import numpy as np
import pytest
from hypothesis import given, strategies as st

from stitlab.frames import (
    ChoiceFrame, Countermodel, FrameUniverse, NoModelUpTo, Satisfiable, ValidUpTo,
    _partition_tuples, check_independence, evaluate, frame_problems, load_frame, sat_search,
    save_frame, to_model, validity_up_to,
)
from stitlab.paperlab import build_S, four_tuples
from stitlab.semantics import satisfies, validate
from stitlab.syntax import BOTTOM, parse, random_formula


def tuple_frame():
    ts = [t.name for t in four_tuples()]
    parts = {j: [[t for t in ts if t[j] == v] for v in "01"] for j in (1, 2, 3, 4)}
    val = {t: [v for v, ok in (("p", t[1] == "0"),
                               ("q", t[1:3] == "00" or t[3:5] == "00" or t[5] == "p")) if ok]
           for t in ts}
    return ChoiceFrame.build(ts, parts, val)


# --- frames and reduction ---------------------------------------------------

def test_tuple_frame_becomes_the_first_witness_model():
    F = tuple_frame()
    assert check_independence(F) is None
    assert to_model(F, "dag") == build_S().replace(variables=None)


def test_crosswise_singletons_violate_independence():
    F = ChoiceFrame.build(["a", "b"], {1: [["a"], ["b"]], 2: [["b"], ["a"]]})
    sel = check_independence(F)
    assert sel is not None and not (sel[1] & sel[2])
    with pytest.raises(ValueError, match="independence"):
        to_model(F)


def test_single_agent_and_single_history_frames():
    F = ChoiceFrame.build(["a", "b", "c"], {1: [["a"], ["b", "c"]]})
    assert check_independence(F) is None
    M = to_model(ChoiceFrame.build(["h"], {1: [["h"]]}))
    assert validate(M) == [] and len(M.histories) == 1


def test_frame_problems():
    F = ChoiceFrame.build(["a", "b"], {1: [["a"], ["a", "c"]]}, {"z": ["p"]})
    probs = " ".join(frame_problems(F))
    assert "overlapping" in probs and "unknown" in probs and "miss" in probs


def test_frame_json_round_trip(tmp_path):
    F = tuple_frame()
    save_frame(F, tmp_path / "f.json")
    assert load_frame(tmp_path / "f.json") == F


@given(st.integers(0, 2**32 - 1))
def test_reduction_agrees_with_frame_evaluation(seed):
    rng = np.random.default_rng(seed)
    res = sat_search(random_formula(rng, 3, ("p",), (1, 2)), 3, agents=(1, 2), variables=("p", "q"))
    if not isinstance(res, Satisfiable):
        return
    F = res.frame
    M = to_model(F)
    assert validate(M) == []
    f = random_formula(rng, 4, ("p", "q"), (1, 2))
    for h in F.histories:
        assert satisfies(M, "dag", f"dag>{h}", f) == evaluate(F, h, f)


# --- search -----------------------------------------------------------------

def test_two_histories_separate_p_and_not_p():
    res = sat_search(parse("<>p & <>~p"), 2)
    assert isinstance(res, Satisfiable) and len(res.frame.histories) == 2


@pytest.mark.parametrize("text", ["<>[1]p & <>[2]~p", "false"])
def test_unsatisfiable_within_bound(text):
    assert sat_search(parse(text), 3) == NoModelUpTo(3)


@pytest.mark.parametrize("text", [
    "<>([1]p & [2](p -> q)) -> ~<>([3]r & [4](r -> ~q))",
    "<>[1]p -> ~<>[2]~p",
    "p -> p",
    "[]p -> [1]p",
])
def test_valid_up_to_three(text):
    assert validity_up_to(parse(text), 3) == ValidUpTo(3)


@pytest.mark.parametrize("text", ["p -> []p", "<>[1]p -> [][1]p", "[1]p -> []p"])
def test_countermodels_recheck(text):
    f = parse(text)
    res = validity_up_to(f, 2)
    assert isinstance(res, Countermodel)
    M = to_model(res.frame)
    assert validate(M) == []
    assert not satisfies(M, "dag", f"dag>{res.history}", f)


def test_witnesses_are_deterministic():
    f = parse("<>[1]p & <>[2]q & ~p")
    assert sat_search(f, 3) == sat_search(f, 3) == sat_search(f, 3, workers=3)


def test_large_bounds_need_the_flag():
    with pytest.raises(ValueError):
        sat_search(parse("p"), 4)
    assert isinstance(sat_search(parse("p"), 4, allow_large=True), Satisfiable)


def _brute_ia_tuples(n, k):
    """IA-respecting k-tuples of set partitions of range(n), counted from scratch."""
    import itertools

    def partitions(xs):
        if not xs:
            yield []
            return
        first, rest = xs[0], xs[1:]
        for sub in partitions(rest):
            yield [[first]] + sub
            for i in range(len(sub)):
                yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]

    parts = list(partitions(list(range(n))))
    return sum(all(set.intersection(*map(set, sel)) for sel in itertools.product(*tup))
               for tup in itertools.product(parts, repeat=k))


def test_canonical_tuple_counts():
    # with 3 histories IA lets at most one agent split them
    assert [len(_partition_tuples(n, 4, True)) for n in (1, 2, 3)] == [1, 5, 9]
    for n, k in [(1, 4), (2, 4), (3, 4), (3, 2), (4, 2)]:
        assert len(_partition_tuples(n, k, False)) == _brute_ia_tuples(n, k)


def test_pruning_keeps_verdicts(rng):
    for _ in range(50):
        f = random_formula(rng, 4, ("p",), (1, 2))
        a = sat_search(f, 3, agents=(1, 2), prune=True)
        b = sat_search(f, 3, agents=(1, 2), prune=False)
        assert type(a) is type(b)
        if isinstance(a, Satisfiable):
            assert len(a.frame.histories) == len(b.frame.histories)


def test_universe_matches_direct_evaluation(rng):
    U = FrameUniverse((1, 2), ("p",), 3)
    for _ in range(30):
        f = random_formula(rng, 4, ("p",), (1, 2))
        vec = U.evaluate(f)
        for i in rng.integers(0, U.size, 25):
            frame, h = U.locate(int(i))
            assert vec[i] == evaluate(frame, h, f)
    assert not U.bottom().any()
    assert np.array_equal(U.box(U.var("p")), U.evaluate(parse("[]p")))
    assert np.array_equal(U.stit(2, U.var("p")), U.evaluate(parse("[2]p")))


def test_proved_conclusions_have_no_countermodel(rng):
    from stitlab.derivations import derive_axiom4, derive_box_to_stit_box
    for _ in range(5):
        a = random_formula(rng, 2, ("p",), (1, 2))
        assert validity_up_to(derive_axiom4(2, a).conclusion, 3) == ValidUpTo(3)
        assert validity_up_to(derive_box_to_stit_box(a, 1).conclusion, 3) == ValidUpTo(3)


def test_bottom_has_no_model():
    assert sat_search(BOTTOM, 1) == NoModelUpTo(1)
