"""Search for a volume-changing function and compare against the defect form.

``witness_search`` picks u aligned with the density of ``i ddbar g`` and checks
the measured gap against the predicted one.  ``equivalence_report`` then
evaluates all six equivalent conditions together.
"""
import json

from hermvol import conformal, equivalence_report, gauduchon_surface, torus, witness_search

T2 = torus(2)

w = witness_search(conformal(T2))
print(f"witness via {w.method}: gap {w.gap:+.6f}, predicted {w.predicted_gap:+.6f}")
print(f"relative prediction error {w.prediction_error:.2e}")

# a Gauduchon surface metric is pluriclosed without being Kahler: no witness
print("gauduchon witness:", witness_search(gauduchon_surface(T2)))

for g in (conformal(T2), gauduchon_surface(T2)):
    rep = equivalence_report(g, family_size=2)
    print(g.name, rep.verdicts(), "consistent" if rep.consistent else rep.problems)

print(json.dumps(equivalence_report(gauduchon_surface(T2), family_size=2).to_json()["conditions"]["iii"],
                 indent=2))
