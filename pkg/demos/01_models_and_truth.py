"""Build a small stit model by hand, validate it and evaluate formulas."""

from stitlab.semantics import StitModel, truth_set, validate
from stitlab.syntax import parse, to_text

# four histories through m; agent 1 picks the left or right pair, agent 2 the
# odd or even one, so every combination of choices meets in exactly one history
model = StitModel(
    moments=["m", "a", "b", "c", "d"],
    order=[("m", x) for x in "abcd"],
    agents=[1, 2],
    choice={"m": {1: [["m>a", "m>b"], ["m>c", "m>d"]], 2: [["m>a", "m>c"], ["m>b", "m>d"]]}},
    valuation=[("p", "m", "m>a"), ("p", "m", "m>b"), ("p", "m", "m>c"), ("q", "m", "m>a"), ("q", "m", "m>c")],
)
print("violations:", validate(model))

for text in ["p", "[1]p", "[2]p", "<>[1]p", "[d:2]p", "<>([1]p & [2]q)", "[1]p -> <1>p"]:
    f = parse(text)
    print(f"{to_text(f):22} true at {sorted(truth_set(model, 'm', f))}")

# breaking independence: agent 2 now has a cell that misses agent 1's left pair
broken = model.replace(choice={"m": {1: [["m>a", "m>b"], ["m>c", "m>d"]], 2: [["m>a", "m>b", "m>c"], ["m>d"]]}})
for v in validate(broken):
    print(v.constraint, v.message)
