"""Electromagnetic field of the sphere with the potential U^(1)_(1) = x2.

The potential produces a nonzero F; the three Maxwell groups hold at random points.
"""

from jetgeom.expr import VarRef
from jetgeom.fields import em_field
from jetgeom.space import load_space
from jetgeom.verify import SampleConfig, run_suite

sp = load_space("sphere2_u")
em = em_field(sp)

env = {v: 0.5 for v in sp.variables}
env[VarRef.x(1)] = 0.7
env[VarRef.x(2)] = 0.4
F = em.F.evaluate(env)
for (i, a, j), val in zip(((i, a, j) for i in range(2) for a in range(2) for j in range(2)), F.flat):
    if abs(val) > 1e-14:
        print(f"F^({a + 1})_({i + 1}){j + 1} = {val:.12f}")
print("f vanishes identically:", all(e.is_zero() for e in em.f.comps.flat))

print()
for r in run_suite(sp, "maxwell", SampleConfig(seed=7, count=100)):
    print(f"{r.identity:28s} max |residual| {r.max_abs_residual:.2e}  pass={r.passed}")
