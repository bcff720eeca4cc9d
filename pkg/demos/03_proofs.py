"""Hilbert derivations: build, print, check, and break them."""

from dataclasses import replace

from stitlab.derivations import derive_axiom4, derive_counterexample, derive_s_counterexample
from stitlab.proof import MP, check_proof, format_script
from stitlab.syntax import parse, to_text

ps = derive_s_counterexample(1, 2)
print(format_script(ps))
print("check:", check_proof(ps))

big = derive_counterexample(1, 2, 3, 4)
print(len(big.lines), "lines proving", to_text(big.conclusion), "->", check_proof(big).ok)
print("4 for [1]:", to_text(derive_axiom4(1, parse("p")).conclusion))

# point one modus ponens at a later line
lines = list(ps.lines)
k = next(i for i, ln in enumerate(lines) if isinstance(ln.justification, MP))
lines[k] = replace(lines[k], justification=MP(len(lines), lines[k].justification.major))
print("tampered:", check_proof(replace(ps, lines=tuple(lines))))
