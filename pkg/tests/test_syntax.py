import numpy as np
import pytest
from hypothesis import given, strategies as st

from stitlab.semantics import random_model, truth_set
from stitlab.syntax import (
    BOTTOM, And, Box, DelibStit, Diamond, Implies, Not, Or, ParseError, Stit, StitDual, Top, Var,
    desugar, enumerate_formulas, modal_depth, parse, project_boxed, project_stit, random_formula,
    resugar, size, to_text, vocabulary,
)

p, q, r = Var("p"), Var("q"), Var("r")
CORE = (Var, type(BOTTOM), Implies, Box, Stit)


def is_core(f):
    if not isinstance(f, CORE):
        return False
    if isinstance(f, Implies):
        return is_core(f.left) and is_core(f.right)
    if isinstance(f, (Box, Stit)):
        return is_core(f.body)
    return True


@pytest.mark.parametrize("text, expected", [
    ("false", BOTTOM),
    ("true", Top()),
    ("<>([1]p & [2](p -> q))", Diamond(And(Stit(1, p), Stit(2, Implies(p, q))))),
    ("p -> q -> r", Implies(p, Implies(q, r))),
    ("p & q | r", Or(And(p, q), r)),
    ("p | q & r", Or(p, And(q, r))),
    ("p & q & r", And(And(p, q), r)),
    ("~p -> q", Implies(Not(p), q)),
    ("[][2]q", Box(Stit(2, q))),
    ("<3>~p", StitDual(3, Not(p))),
    ("[d:3]p", DelibStit(3, p)),
    ("[12]x_1", Stit(12, Var("x_1"))),
])
def test_parse_examples(text, expected):
    assert parse(text) == expected


def test_deliberative_stit_desugars_to_stit_and_not_settled():
    assert desugar(parse("[d:3]p")) == desugar(And(Stit(3, p), Not(Box(p))))


@pytest.mark.parametrize("f, text", [
    (BOTTOM, "false"),
    (Implies(p, Implies(q, p)), "p -> q -> p"),
    (Implies(Implies(p, q), p), "(p -> q) -> p"),
    (Box(Stit(2, q)), "[][2]q"),
    (Or(p, Or(q, r)), "p | (q | r)"),
    (And(Or(p, q), r), "(p | q) & r"),
])
def test_print_examples(f, text):
    assert to_text(f) == text


@pytest.mark.parametrize("text, pos", [
    ("", 0), ("p &", 3), ("(p", 2), ("p q", 2), ("[0]p", 0), ("[d:]p", 0), ("P", 0), ("p -> ", 5),
])
def test_parse_errors_carry_position(text, pos):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.pos == pos
    assert "position" in str(exc.value)


def test_error_message_names_expectation():
    with pytest.raises(ParseError, match="expected a formula, got end of input"):
        parse("p &")


def test_agent_ids_are_positive():
    with pytest.raises(ValueError):
        Stit(0, p)


def test_sugar_expands_exactly():
    assert desugar(Not(p)) == Implies(p, BOTTOM)
    assert desugar(Diamond(p)) == Implies(Box(Implies(p, BOTTOM)), BOTTOM)
    assert desugar(StitDual(2, p)) == Implies(Stit(2, Implies(p, BOTTOM)), BOTTOM)
    assert desugar(Top()) == Implies(BOTTOM, BOTTOM)


@pytest.mark.parametrize("text, vars_, agents", [
    ("<>([1]p & [2](p -> q))", {"p", "q"}, {1, 2}),
    ("[]p", {"p"}, set()),
    ("~<>([3]r & [4](r -> ~q))", {"q", "r"}, {3, 4}),
])
def test_vocabulary(text, vars_, agents):
    voc = vocabulary(parse(text))
    assert voc.vars == vars_ and voc.agents == agents


def test_projections():
    fs = {Box(p), Stit(1, q), p}
    assert project_boxed(fs) == {Box(p)}
    assert project_stit(fs, 1) == {Stit(1, q)}
    assert project_boxed(set()) == set() and project_stit(set(), 3) == set()


@pytest.mark.parametrize("text, depth", [("p -> q", 0), ("[][1]p", 2), ("<>([1]p & [2](p -> q))", 2)])
def test_modal_depth(text, depth):
    assert modal_depth(parse(text)) == depth


def test_size_counts_core_nodes():
    assert size(parse("<>[1]p")) == 7
    assert size(parse("~<>[2]~p")) == 11
    assert size(p) == 1 and size(Implies(p, q)) == 3


def test_random_round_trip_suite(rng):
    for _ in range(1000):
        f = random_formula(rng, 6, ("p", "q", "r"), (1, 2, 3))
        assert parse(to_text(f)) == f


@given(st.integers(0, 2**32 - 1), st.integers(0, 6), st.booleans())
def test_round_trip_property(seed, depth, sugar):
    f = random_formula(np.random.default_rng(seed), depth, ("p", "q"), (1, 2), sugar=sugar)
    assert parse(to_text(f)) == f


@given(st.integers(0, 2**32 - 1))
def test_desugar_is_core_idempotent_and_keeps_vocabulary(seed):
    f = random_formula(np.random.default_rng(seed), 5, ("p", "q"), (1, 2, 3))
    g = desugar(f)
    assert is_core(g)
    assert desugar(g) == g
    assert vocabulary(g) == vocabulary(f)
    assert desugar(resugar(g)) == g


@given(st.integers(0, 2**32 - 1))
def test_desugar_preserves_truth(seed):
    rng = np.random.default_rng(seed)
    model = random_model(rng, 5, (1, 2), ("p", "q"))
    f = random_formula(rng, 4, ("p", "q"), (1, 2))
    for m in model.moments:
        assert truth_set(model, m, f) == truth_set(model, m, desugar(f))


def test_enumeration_is_exhaustive_and_sized():
    fs = list(enumerate_formulas(["p"], [], 4))
    assert len(fs) == len(set(fs))
    assert all(size(f) <= 4 for f in fs)
    assert [size(f) for f in fs] == sorted(size(f) for f in fs)
    # by size: 2 leaves, 2 boxes, 2 boxes + 4 implications, ...
    counts = np.bincount([size(f) for f in fs])[1:]
    assert list(counts) == [2, 2, 6, 14]
    with_agents = list(enumerate_formulas(["p"], [1, 2], 2))
    assert Stit(2, p) in with_agents and len(with_agents) == 2 + 3 * 2
