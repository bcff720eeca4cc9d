"""The two 32-history witness models, the relation between them, and the certificates."""

from stitlab.bisim import PointedModel, is_bisimulation, max_bisimulation
from stitlab.paperlab import build_B, build_S, build_S_prime, certify_negative, certify_strong_negative, reduct

S, S2 = build_S(), build_S_prime()
left = PointedModel(reduct(S, ["q"]), "dag")
right = PointedModel(reduct(S2, ["q"]), "ddag")

B = build_B()
print(len(B), "pairs;", "bisimulation:", is_bisimulation(left, right, B, ["q"]).ok)
print("largest bisimulation has", len(max_bisimulation(left, right, ["q"])), "pairs")

# drop every partner of one history that lies in agent 3's lower cell
h0 = "dag>t0000p"
gone = [(h0, g) for g in right.histories if (h0, g) in B and g.split(">")[1][3] == "0"]
print(is_bisimulation(left, right, B.without(*gone), ["q"]).first)

for cert in (certify_negative(), certify_strong_negative()):
    print("==", cert.claim)
    for f in cert.facts:
        print(f"  {f.step:16} {'ok ' if f.verdict else 'BAD'} {f.statement}")
    print("  ->", cert.verdict)
