"""Command-line entry points: ``check``, ``compute`` and ``verify``.

Exit codes: 0 success, 1 input or validation error, 2 identity failure,
3 internal error. Indices are printed 1-based.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from fractions import Fraction
from typing import Callable

import numpy as np

from .connections import cartan_connection, nonlinear_connection, spatial_christoffel, temporal_christoffel
from .connections import vertical_metric
from .curvature import curvature_components, ricci_and_scalar, torsion_components
from .expr import Const, DomainError, ExprError, Point, VarRef, simplify, to_text
from .fields import deflection_tensors, einstein_blocks, em_field
from .space import HamiltonSpace, SpaceError, load_space
from .tensor import DTensor
from .verify import SUITES, SampleConfig, all_passed, run_suite

EXIT_OK, EXIT_INPUT, EXIT_IDENTITY, EXIT_INTERNAL = 0, 1, 2, 3


def _visible(cells: dict) -> list[DTensor]:
    # "-v" cells are internal negated mirrors of other cells
    return [t for key, t in cells.items() if not key.startswith("-v")]


def _torsion(space, kappa):
    return _visible(torsion_components(space).cells)


def _curvature(space, kappa):
    return _visible(curvature_components(space).cells)


def _ricci(space, kappa):
    return [t for t in ricci_and_scalar(space).cells.values() if t.rank > 0]


def _scalar(space, kappa):
    ric = ricci_and_scalar(space)
    keys = ("chi", "R", "Sc") if space.m >= 2 else ("R", "S", "Sc")
    return [ric[k] for k in keys]


def _deflection(space, kappa):
    d = deflection_tensors(space)
    return [t.renamed(key) for key, t in d.metrical.items()]


def _em(space, kappa):
    em = em_field(space)
    return [em.F.renamed("F"), em.f.renamed("f")]


def _einstein(space, kappa):
    rep = einstein_blocks(space, kappa)
    return [t.renamed(key) for key, t in rep.stress_energy.items()]


def _cartan(space, kappa):
    c = cartan_connection(space)
    return [c.chi, c.A, c.H, c.C]


OBJECTS: dict[str, tuple[Callable[[HamiltonSpace, float], list[DTensor]], str]] = {
    "chi": (lambda s, k: [temporal_christoffel(s)], "temporal Christoffel symbols chi^a_bc of h_ab"),
    "gamma": (lambda s, k: [spatial_christoffel(s)], "spatial Christoffel symbols Gamma^k_ij of g_ij"),
    "G": (lambda s, k: [vertical_metric(s)], "vertical fundamental metrical d-tensor G^(i)(j)_(a)(b) = h_ab g^ij"),
    "N": (
        lambda s, k: [nonlinear_connection(s).N1, nonlinear_connection(s).N2],
        "canonical nonlinear connection N1^(a)_(i)b, N2^(a)_(i)j",
    ),
    "cartan": (_cartan, "Cartan canonical connection coefficients chi^a_bc, A^i_jc, H^i_jk, C^i(k)_j(c)"),
    "torsion": (_torsion, "nonzero d-torsion cells of the Cartan connection"),
    "curvature": (_curvature, "d-curvature cells of the Cartan connection"),
    "ricci": (_ricci, "Ricci d-tensor blocks, including the raised vertical blocks"),
    "scalar": (_scalar, "scalar curvature and its temporal, horizontal and vertical parts"),
    "deflection": (_deflection, "metrical deflection d-tensors Delta^(i)_(a)b, Delta^(i)_(a)j, theta^(i)(j)_(a)(b)"),
    "em": (_em, "electromagnetic components F^(i)_(a)j and f^(i)(j)_(a)(b)"),
    "einstein": (_einstein, "stress-energy d-tensor blocks of the polymomenta, lhs of the Einstein-like equations / kappa"),
}


class InputError(Exception):
    def __init__(self, errors: list[dict]):
        self.errors = errors
        super().__init__("; ".join(e["message"] for e in errors))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=True)


def _load(path: str) -> HamiltonSpace:
    try:
        return load_space(path)
    except SpaceError as err:
        raise InputError([err.as_dict()]) from None
    except ExprError as err:
        raise InputError([{"code": "parse_error", "message": str(err), "field": None}]) from None


def parse_point(space: HamiltonSpace, spec: str | None) -> Point:
    """``k=v,...`` over jet coordinate names. Unlisted coordinates sit at the
    midpoint of the sampling box."""
    by_name = {v.name: v for v in space.variables}
    values = {v: 0.5 * (space.domain[v][0] + space.domain[v][1]) for v in space.variables}
    for item in filter(None, (s.strip() for s in (spec or "").split(","))):
        key, sep, raw = item.partition("=")
        key = key.strip()
        if not sep or key not in by_name:
            raise InputError([{"code": "invalid_point", "message": f"bad coordinate assignment {item!r}", "field": "at"}])
        try:
            values[by_name[key]] = float(raw)
        except ValueError:
            raise InputError([{"code": "invalid_point", "message": f"bad value in {item!r}", "field": "at"}]) from None
    m, n = space.dims
    return Point(
        [values[VarRef.t(a + 1)] for a in range(m)],
        [values[VarRef.x(i + 1)] for i in range(n)],
        [[values[VarRef.p(i + 1, a + 1)] for a in range(m)] for i in range(n)],
    )


def _outside(space: HamiltonSpace, pt: Point) -> list[str]:
    return [
        v.name for v, val in pt.env().items() if not (space.domain[v][0] <= val <= space.domain[v][1])
    ]


def _json_value(e):
    if isinstance(e, (float, np.floating)):
        return float(e)
    e = simplify(e)
    if isinstance(e, Const):
        v = e.value
        return int(v) if v.is_integer() else v
    return to_text(e)


def _signature(t: DTensor) -> list[str]:
    return [str(s) for s in t.signature]


def _tensor_values(t: DTensor, pt: Point | None):
    if pt is None:
        return {idx: simplify(e) for idx, e in t.entries()}
    arr = t.evaluate(pt.env())
    return {idx: float(arr[idx]) for idx in t.indices()}


def _render_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return to_text(v)


def cmd_check(args) -> int:
    space = _load(args.file)
    report = {"ok": True, "space": space.name, "m": space.m, "n": space.n}
    if args.format == "json":
        print(_dump(report))
    else:
        print(f"{space.name}: valid (m={space.m}, n={space.n})")
    return EXIT_OK


def list_objects() -> str:
    width = max(len(k) for k in OBJECTS)
    return "\n".join(f"{k:<{width}}  {desc}" for k, (_, desc) in OBJECTS.items())


def cmd_compute(args) -> int:
    if args.list_objects:
        print(list_objects())
        return EXIT_OK
    if args.file is None or args.object is None:
        raise InputError([{"code": "missing_argument", "message": "compute needs a space file and --object", "field": None}])
    if args.object not in OBJECTS:
        raise InputError([{"code": "unknown_object", "message": f"unknown object {args.object!r}", "field": "object"}])
    space = _load(args.file)
    kappa = _kappa(args.kappa)
    pt = parse_point(space, args.at) if args.at is not None else None
    if pt is not None:
        out = _outside(space, pt)
        if out:
            print(f"warning: point outside the sampling box in {', '.join(out)}", file=sys.stderr)
    build, _ = OBJECTS[args.object]
    try:
        tensors = build(space, kappa)
        values = [(t, _tensor_values(t, pt)) for t in tensors]
    except SpaceError as err:
        raise InputError([err.as_dict()]) from None
    except DomainError as err:
        raise InputError([{"code": "domain_error", "message": str(err), "field": "at"}]) from None
    if args.format == "json":
        doc = {
            "space": space.name,
            "object": args.object,
            "at": pt.as_dict() if pt is not None else None,
        }
        if args.object == "scalar":
            doc["values"] = {t.name: _json_value(vals[()]) for t, vals in values}
        else:
            doc["tensors"] = [
                {
                    "name": t.name,
                    "signature": _signature(t),
                    "components": [
                        {"index": [k + 1 for k in idx], "value": _json_value(v)} for idx, v in vals.items()
                    ],
                }
                for t, vals in values
            ]
        print(_dump(doc))
    else:
        for t, vals in values:
            for idx, v in vals.items():
                label = ",".join(str(k + 1) for k in idx)
                print(f"{t.name}[{label}] = {_render_value(v)}" if idx else f"{t.name} = {_render_value(v)}")
    return EXIT_OK


def _kappa(value: str | None) -> float:
    if value is None:
        return 1.0
    try:
        k = float(Fraction(value))
    except (ValueError, ZeroDivisionError):
        raise InputError([{"code": "invalid_field", "message": f"bad kappa {value!r}", "field": "kappa"}]) from None
    if k == 0:
        raise InputError([{"code": "invalid_field", "message": "kappa must be nonzero", "field": "kappa"}])
    return k


def verify_report(space: HamiltonSpace, suite: str, cfg: SampleConfig, kappa: float):
    results = run_suite(space, suite, cfg, kappa)
    report = {
        "space": space.name,
        "suite": suite,
        "seed": cfg.seed,
        "samples": cfg.count,
        "tolerances": {"abs": cfg.tol_abs, "rel": cfg.tol_rel},
        "kappa": kappa,
        "results": [r.as_dict() for r in results],
    }
    return report, results


def cmd_verify(args) -> int:
    space = _load(args.file)
    kappa = _kappa(args.kappa)
    try:
        cfg = SampleConfig(seed=args.seed, count=args.samples, tol_abs=args.tol_abs, tol_rel=args.tol_rel)
    except ValueError as err:
        raise InputError([{"code": "invalid_field", "message": str(err), "field": "sampling"}]) from None
    try:
        report, results = verify_report(space, args.suite, cfg, kappa)
    except SpaceError as err:
        raise InputError([err.as_dict()]) from None
    if args.format == "json":
        print(_dump(report))
    else:
        for r in results:
            status = "report" if r.report_only else ("pass" if r.passed else "FAIL")
            print(f"{status:6s} {r.identity}  abs={r.max_abs_residual!r} rel={r.max_rel_residual!r}")
    failed = [r.identity for r in results if not r.report_only and not r.passed]
    if failed:
        print("failing identities: " + ", ".join(failed), file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jetgeom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("check", help="load and validate a space file")
    p.add_argument("file", help="space file path or bundled space name")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(run=cmd_check)

    p = sub.add_parser("compute", help="print the components of a geometric object")
    p.add_argument("file", nargs="?", help="space file path or bundled space name")
    p.add_argument("--object", choices=tuple(OBJECTS), metavar="SEL")
    p.add_argument("--at", help="evaluate at k=v,... (e.g. x1=0.7); other coordinates at the box midpoint")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--kappa", help="Einstein constant (default 1)")
    p.add_argument("--list-objects", action="store_true", help="list object selectors and exit")
    p.set_defaults(run=cmd_compute)

    p = sub.add_parser("verify", help="sample identity residuals and report")
    p.add_argument("file", help="space file path or bundled space name")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--tol-abs", type=float, default=1e-8)
    p.add_argument("--tol-rel", type=float, default=1e-6)
    p.add_argument("--kappa", help="Einstein constant (default 1)")
    p.add_argument("--format", choices=("text", "json"), default="json")
    p.set_defaults(run=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.run(args)
    except InputError as err:
        print(_dump({"ok": False, "errors": err.errors}))
        return EXIT_INPUT
    except Exception:  # noqa: BLE001 - anything else is a bug
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
