"""Run every verification suite on good spaces and on deliberately broken ones.

A broken space carries a ``corrupt`` entry that perturbs one computed object;
the suites listed in its ``detected_by`` field are the ones that must fail.
"""

from jetgeom.space import load_space
from jetgeom.verify import SUITES, SampleConfig, all_passed, run_suite

cfg = SampleConfig(seed=0, count=40)

for name in ("flat2x2", "sphere2_u", "m1finsler", "corrupt_gamma", "corrupt_cartan", "corrupt_m1"):
    sp = load_space(name)
    failing = [s for s in SUITES if not all_passed(run_suite(sp, s, cfg))]
    declared = sorted({s for c in sp.corrupt for s in c.get("detected_by", ())})
    verdict = "ok" if sorted(failing) == declared else "UNEXPECTED"
    print(f"{name:15s} failing suites {failing or '-'}  declared {declared or '-'}  [{verdict}]")
