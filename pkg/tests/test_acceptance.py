"""Acceptance criteria AC1-AC10 at their stated tolerances.

Each criterion is a function returning (passed, detail). Under pytest every
criterion is a test and a one-line verdict per criterion is printed in the
terminal summary; ``python tests/test_acceptance.py`` prints the same lines.
"""

from __future__ import annotations

import contextlib
import io
import json
import subprocess
import sys
import time

import numpy as np
import pytest

from jetgeom import cli
from jetgeom.curvature import ricci_and_scalar
from jetgeom.expr import Evaluator
from jetgeom.fields import deflection_tensors, einstein_blocks
from jetgeom.space import bundled_spaces, load_space
from jetgeom.verify import SUITES, SampleConfig, all_passed, run_suite, sample_points, points_env

VERDICTS: dict[str, str] = {}

SPACES = [s for s in bundled_spaces() if not s.startswith("corrupt")]
CORRUPT = [s for s in bundled_spaces() if s.startswith("corrupt")]
MULTI_TIME = [s for s in SPACES if load_space(s).m >= 2]


def _results(name, suite, count=100, seed=0, **cfg):
    return {r.identity: r for r in run_suite(load_space(name), suite, SampleConfig(seed=seed, count=count, **cfg))}


def _below(results: dict, keys, tol) -> tuple[bool, float]:
    worst = max(results[k].max_abs_residual for k in keys)
    return worst < tol, worst


def _numeric(t, env, count):
    ev = Evaluator(env)
    vals = [np.broadcast_to(np.asarray(ev(e), float), (count,)) for e in t.comps.flat]
    return np.array(vals).reshape(t.shape + (count,))


def _matrix(mat, env, count):
    ev = Evaluator(env)
    return np.array([[np.broadcast_to(np.asarray(ev(e), float), (count,)) for e in row] for row in mat])


def capture(argv):
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = cli.main(argv)
    return code, buf.getvalue()


def ac1():
    worst_all, bad = 0.0, []
    for name in SPACES:
        res = _results(name, "metricity")
        assert len(res) == 6
        ok, worst = _below(res, res, 1e-9)
        worst_all = max(worst_all, worst)
        if not ok:
            bad.append(name)
    return not bad, f"6 metricity identities on {len(SPACES)} spaces, max |residual| {worst_all:.2e}" + (
        f"; failing {bad}" if bad else ""
    )


def ac2():
    worst_all = 0.0
    for name in MULTI_TIME:
        _, worst = _below(_results(name, "tables"), ["connection.N2_corollary"], 1e-9)
        worst_all = max(worst_all, worst)
    return worst_all < 1e-9, f"general vs corollary N2 on {len(MULTI_TIME)} spaces, max {worst_all:.2e}"


def ac3():
    worst_closed, worst_c = 0.0, 0.0
    for name in MULTI_TIME:
        res = _results(name, "tables")
        worst_closed = max(worst_closed, _below(res, [f"connection.cartan_closed.{k}" for k in "AHC"], 1e-10)[1])
        worst_c = max(worst_c, res["connection.C_vanishes"].max_abs_residual)
    ok = worst_closed < 1e-10 and worst_c < 1e-12
    return ok, f"closed vs delta forms max {worst_closed:.2e}; max |C| {worst_c:.2e}"


def ac4():
    worst = 0.0
    for name in ("sphere2", "sphere2_u"):
        res = _results(name, "oracle", count=50)
        worst = max(worst, res["oracle.gamma"].max_abs_residual, res["oracle.riemann"].max_abs_residual)
    sp = load_space("sphere2")
    pts = sample_points(sp, SampleConfig(seed=0, count=100))
    env = points_env(pts)
    ric = ricci_and_scalar(sp)
    ricci_dev = float(np.max(np.abs(_numeric(ric["R_ij"], env, 100) - _matrix(sp.g, env, 100))))
    sc_dev = float(np.max(np.abs(_numeric(ric["Sc"], env, 100) - 2.0)))
    ok = worst < 1e-6 and ricci_dev < 1e-6 and sc_dev < 1e-6
    return ok, f"oracle max {worst:.2e}; |R_ij - g_ij| {ricci_dev:.2e}; |Sc - 2| {sc_dev:.2e}"


def ac5():
    worst = 0.0
    for name in ("m1sphere", "m1finsler", "sphere2_u", "timewarp"):
        res = _results(name, "deflection")
        keys = [k for k in res if k.startswith("deflection.closed_form")]
        worst = max(worst, _below(res, keys, 1e-9)[1])
    exact = True
    for name in MULTI_TIME:
        sp = load_space(name)
        theta = deflection_tensors(sp).metrical["theta"]
        exact &= all((e - sp.h[a, b] * sp.g_inv[i, j]).is_zero() for (i, j, a, b), e in theta.entries())
    return worst < 1e-9 and exact, f"closed forms max {worst:.2e} (m=1 and m>=2); theta = h g exactly: {exact}"


def ac6():
    worst, worst_f = 0.0, 0.0
    for name in ("sphere2_u", "m1sphere"):
        res = _results(name, "maxwell")
        assert len(res) == 3
        worst = max(worst, _below(res, res, 1e-8)[1])
        worst_f = max(worst_f, _results(name, "deflection")["em.f_vanishes"].max_abs_residual)
    return worst < 1e-8 and worst_f < 1e-12, f"three groups max {worst:.2e}; max |f| {worst_f:.2e}"


def ac7():
    sp = load_space("sphere2")
    pts = sample_points(sp, SampleConfig(seed=0, count=100))
    env = points_env(pts)
    T = {k: _numeric(t, env, 100) for k, t in einstein_blocks(sp, 1.0).stress_energy.items()}
    h, ginv = _matrix(sp.h, env, 100), _matrix(sp.g_inv, env, 100)
    d_ij = float(np.max(np.abs(T["T_ij"])))
    d_ab = float(np.max(np.abs(T["T_ab"] + h)))
    d_v = float(np.max(np.abs(T["T^(i)(j)_(a)(b)"] + np.einsum("abs,ijs->ijabs", h, ginv))))
    tw = load_space("timewarp")
    tw_env = points_env(sample_points(tw, SampleConfig(seed=0, count=100)))
    compat = max(float(np.max(np.abs(_numeric(t, tw_env, 100)))) for t in einstein_blocks(tw).compatibility.values())
    ok = d_ij < 1e-8 and d_ab < 1e-10 and d_v < 1e-10 and compat < 1e-10
    return ok, f"T_ij {d_ij:.2e}; T_ab + h {d_ab:.2e}; T_vv + h g {d_v:.2e}; timewarp compatibility {compat:.2e}"


def ac8():
    worst = 0.0
    for name in ("flat2x2", "sphere2"):
        res = _results(name, "conservation")
        assert len(res) == 2 and not any(r.report_only for r in res.values())
        worst = max(worst, _below(res, res, 1e-8)[1])
    tw = _results("timewarp", "conservation")
    report_only = all(r.report_only and r.max_abs_residual is not None for r in tw.values())
    code, _ = capture(["verify", "timewarp", "--suite", "conservation", "--samples", "20"])
    return worst < 1e-8 and report_only and code == 0, (
        f"flat2x2/sphere2 max {worst:.2e}; timewarp report-only {report_only}, exit code {code}"
    )


def ac9():
    bad_fd = []
    for name in SPACES:
        fd = [r for r in run_suite(load_space(name), "oracle", SampleConfig(seed=0, count=20)) if r.identity.startswith("fd.")]
        if not all(r.passed for r in fd):
            bad_fd.append(name)
    missed = []
    for name in CORRUPT:
        sp = load_space(name)
        expected = {s for c in sp.corrupt for s in c.get("detected_by", ())}
        failing = {s for s in SUITES if not all_passed(run_suite(sp, s, SampleConfig(seed=0, count=100)))}
        if not expected or expected != failing:
            missed.append(f"{name}: expected {sorted(expected)} failing {sorted(failing)}")
    ok = not bad_fd and not missed
    detail = f"fd audit on {len(SPACES)} spaces; {len(CORRUPT)} negative controls fail exactly their declared suites"
    if not ok:
        detail += f"; fd failures {bad_fd}; control mismatches {missed}"
    return ok, detail


def ac10():
    # separate processes, so no in-memory cache is shared between the runs
    argv = [sys.executable, "-m", "jetgeom", "verify", "sphere2_u", "--seed", "9", "--samples", "30"]
    runs = [subprocess.run(argv, capture_output=True, check=False).stdout for _ in range(2)]
    same = runs[0] == runs[1] and bool(runs[0])
    json.loads(runs[0])
    comp = [capture(["compute", "timewarp", "--object", "curvature", "--format", "json"]) for _ in range(2)]
    doc = json.loads(comp[0][1])
    ordered = all(
        [c["index"] for c in t["components"]] == sorted(c["index"] for c in t["components"]) for t in doc["tensors"]
    )
    return same and comp[0] == comp[1] and ordered, f"verify byte-identical {same}; compute stable and lexicographic {ordered}"


CRITERIA = {f"AC{k}": fn for k, fn in enumerate((ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9, ac10), start=1)}


def _judge(key):
    start = time.perf_counter()
    ok, detail = CRITERIA[key]()
    elapsed = time.perf_counter() - start
    line = f"{key} {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s) {detail}"
    VERDICTS[key] = line
    return ok, elapsed, line


@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key):
    ok, elapsed, line = _judge(key)
    print(line)
    assert elapsed < 60, line
    assert ok, line


if __name__ == "__main__":
    failures = 0
    for key in CRITERIA:
        ok, _, line = _judge(key)
        print(line, flush=True)
        failures += not ok
    sys.exit(1 if failures else 0)
