"""Walk through the Cartan geometry of the unit sphere with two flat times.

Run with ``python demos/sphere_geometry.py``.
"""

import math

from jetgeom.connections import cartan_connection, nonlinear_connection
from jetgeom.curvature import curvature_components, ricci_and_scalar
from jetgeom.expr import VarRef
from jetgeom.space import load_space


def show(title, t, limit=6):
    print(f"-- {title}")
    nonzero = [line for line in t.lines() if not line.endswith("= 0")]
    for line in nonzero[:limit]:
        print("  ", line)
    if len(nonzero) > limit:
        print(f"   ... {len(nonzero) - limit} more")


sp = load_space("sphere2")
print(f"{sp.name}: m={sp.m}, n={sp.n}")
print("H =", sp.hamiltonian)

N = nonlinear_connection(sp)
show("spatial part of the nonlinear connection", N.N2)

cart = cartan_connection(sp)
show("H^i_jk, the Christoffel symbols of g", cart.H)

curv = curvature_components(sp)
show("R^l_ijk", curv["R^l_ijk"])

ric = ricci_and_scalar(sp)
show("Ricci R_ij", ric["R_ij"])

# the round sphere has Ricci = g, so Sc = 2 everywhere
x1 = 0.7
env = {v: 0.5 for v in sp.variables}
env[VarRef.x(1)] = x1
print("Sc at x1=0.7:", float(ric["Sc"].evaluate(env)))
print("H^1_22 at x1=0.7:", float(cart.H.evaluate(env)[0, 1, 1]), "expected", -math.sin(x1) * math.cos(x1))
