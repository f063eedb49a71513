"""Flat versus conformal metrics on the complex 2-torus.

For the flat metric every admissible perturbation ``g + i ddbar u`` has the
same Monge-Ampere volume.  Multiplying by a non-constant conformal factor
breaks pluriclosedness, and the volume starts to move.
"""
import numpy as np

from hermvol import conformal, flat, ma_volume, psh_epsilon0, torus
from hermvol.presets import mode_pool, random_real_field

T2 = torus(2)
rng = np.random.default_rng(0)

# draw u from the modes of g so that u and i ddbar g can interact
metrics = (flat(T2), conformal(T2, a=0.5))
pool = mode_pool(metrics[1])
us = [random_real_field(T2, rng, 2, 3, pool=pool) for _ in range(4)]

for g in metrics:
    base = ma_volume(g)
    print(f"{g.name}: int g^2 = {base:.12f}")
    for u in us:
        # stay inside the psh range, at 90% of the largest admissible scale
        u = u * (0.9 * psh_epsilon0(g, u).value)
        vol = ma_volume(g, u)
        print(f"   volume = {vol:.12f}   gap = {vol - base:+.3e}")

# On a surface the gap is linear in u
g = metrics[1]
u = us[0] * (0.9 * psh_epsilon0(g, us[0]).value)
for t in np.linspace(0.0, 1.0, 5):
    print(f"t = {t:.2f}   gap = {ma_volume(g, u * t) - ma_volume(g):+.6e}")
