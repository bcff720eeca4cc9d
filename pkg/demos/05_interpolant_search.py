"""Bottom-up interpolant and separator search with bounded verification."""

import time

from stitlab.paperlab import interpolant_search, is_separable_bounded
from stitlab.syntax import parse

cases = [
    ("p & q", "q | r", "rcip"),
    ("<>[1]p", "~<>[2]~p", "rcip"),
    ("<>[1]p", "~<>[2]~p", "srcip"),
    ("[1](p & q)", "<>(q | r)", "srcip"),
]
for a, b, mode in cases:
    t0 = time.perf_counter()
    res = interpolant_search(parse(a), parse(b), 9, 3, mode)
    print(f"{a:12} |- {b:12} {mode:6} {res.to_dict()}  ({time.perf_counter() - t0:.2f}s)")

print(is_separable_bounded([parse("<>[1]p")], [parse("<>[2]~p")]).to_dict())
print(is_separable_bounded([parse("p")], [parse("q")], 5).to_dict())
