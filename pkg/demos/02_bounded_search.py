"""Bounded satisfiability and validity over single-moment choice frames."""

import json
import time

from stitlab.frames import Countermodel, sat_search, validity_up_to
from stitlab.syntax import parse

for text in ["[1]p -> p", "p -> []p", "<>[1]p -> [][1]p", "<>[1]p -> ~<>[2]~p",
             "<>[1]p & <>[2]q -> <>([1]p & [2]q)"]:
    t0 = time.perf_counter()
    res = validity_up_to(parse(text), 3)
    dt = time.perf_counter() - t0
    print(f"{text:40} {res.kind:12} {dt*1000:7.1f} ms")
    if isinstance(res, Countermodel):
        print("   falsified at", res.history, json.dumps(res.frame.to_dict()))

# agents and variables can be added beyond the formula's own vocabulary
print(sat_search(parse("~[1]p & ~[2]~p"), 3, agents=[3]))
