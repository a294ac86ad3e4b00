"""A single-time space whose metric depends on the momenta.

With m = 1 the vertical Cartan coefficients C no longer vanish, and the
Christoffel oracle does not apply; the finite-difference audit still does.
"""

import numpy as np

from jetgeom.connections import cartan_connection
from jetgeom.space import load_space
from jetgeom.verify import SampleConfig, fd_check_all, run_suite

sp = load_space("m1finsler")
print("g^ij =", [[str(e) for e in row] for row in sp.g_inv])

C = cartan_connection(sp).C
env = sp.sample_envs(5, seed=1)
print("max |C| over 5 samples:", float(np.max(np.abs(C.evaluate(env)))))

for r in fd_check_all(sp):
    print(f"{r.identity:10s} {r.max_abs_residual:.2e}")

for r in run_suite(sp, "deflection", SampleConfig(seed=2, count=50)):
    tag = "report-only" if r.report_only else f"pass={r.passed}"
    print(f"{r.identity:45s} {r.max_abs_residual:.2e}  {tag}")
