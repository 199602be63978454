"""Command-line front end and the sweep harness.

Every report is a JSON object carrying the tool version, the full run
configuration, the bound constants and the matrix-norm convention.
Exit codes: 0 success, 2 input error, 3 numerical failure, 4 a measured
count exceeded a bound during a sweep.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__
from .contour import (
    BoundaryAmbiguous,
    IntegrationFailed,
    PoleOnPath,
    count_zeros_disk,
    disk_path,
    integrate,
    oracle_count,
    residual_check,
)
from .family import (
    DiffOpFamily,
    EpsVector,
    Series,
    annihilating_operator,
    check_smith,
    constant_rank_span,
    smith_local_form,
    vanishing_orders,
)
from .models import (
    CLEARANCE_FACTOR,
    NORMS,
    FuchsSystem,
    HypergeomSystem,
    PolySystem,
    RationalSystem,
    fuchs_reduce,
    hypergeom_reduce,
    magnitude,
    random_poly_system,
    singularity_clearance,
    system_from_json,
    universal_matrix,
)
from .oscbound import (
    BoundConstants,
    fuchsian_bound,
    hypergeometric_bound,
    main_theorem_bound,
    meander_bound,
    ratio_bound,
    vallee_poussin_disconjugate,
    zero_bound_unit_disk,
)
from .poly import ExactMPoly, UniPolyC, certified_min_modulus
from .reduce import (
    DEFAULT_TAU,
    DegenerateChain,
    PrincipalEquation,
    detect_degeneracy,
    principal_equation,
    verify_iter_certificates,
    xi_chain,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4


class InputError(ValueError):
    pass


# -- helpers -------------------------------------------------------------------

def _constants(args) -> BoundConstants:
    return BoundConstants(c_main=args.c_main, c_levin=args.c_levin, c_var=args.c_var,
                          c_ratio=args.c_ratio, c_tower=args.c_tower)


def _config(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args, result) -> dict:
    return {
        "tool": "zerobound",
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "constants": _constants(args).to_json(),
        "norm": args.norm,
        "result": result,
    }


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _finite(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def _read_input(args) -> dict:
    if not args.input:
        raise InputError("--input is required for this command")
    try:
        with open(args.input) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(str(exc)) from exc


def _complex(obj) -> complex:
    if isinstance(obj, dict):
        return complex(float(Fraction(str(obj["re"]))), float(Fraction(str(obj.get("im", 0)))))
    return complex(obj)


def _exact_or_complex(obj):
    if isinstance(obj, dict):
        re, im = obj["re"], obj.get("im", 0)
        if isinstance(re, str) and isinstance(im, str) and Fraction(im) == 0:
            return Fraction(re)
        return _complex(obj)
    if isinstance(obj, str):
        return Fraction(obj)
    return obj


def _load_system(obj):
    if obj.get("kind") == "universal":
        return "universal", int(obj["n"]), int(obj["m"])
    return system_from_json(obj)


def _derive(system, start=None, tau=DEFAULT_TAU) -> dict:
    """Principal equation of y = start . x (first coordinate by default)."""
    out = {}
    if isinstance(system, tuple):
        _, n, m = system
        chain = xi_chain(universal_matrix(n, m), start=start)
        eq = principal_equation(chain, tau=tau)
        out["equation"] = eq.to_json()
        out["certificates"] = _cert_json(verify_iter_certificates(chain, eq))
        out["status"] = "generic"
        return out
    if isinstance(system, PolySystem):
        A = system.matrix()
        chain = xi_chain(A, start=start)
        try:
            eq = principal_equation(chain, tau=tau)
            out["status"] = "generic"
        except DegenerateChain:
            rep = detect_degeneracy(A, tau, start=start)
            eq = rep.equation
            out["status"] = rep.status
            out["degeneracy"] = rep.to_json()
        out["equation"] = eq.to_json()
        if chain.exact:
            out["certificates"] = _cert_json(verify_iter_certificates(chain))
        out["_eq"] = eq
        return out
    if isinstance(system, FuchsSystem):
        eq = fuchs_reduce(system, tau)
    elif isinstance(system, HypergeomSystem):
        eq = hypergeom_reduce(system, tau)
    else:
        raise InputError("unsupported system")
    out["status"] = "generic" if eq.n == system.n else "degenerate"
    out["equation"] = eq.to_json()
    out["_eq"] = eq
    return out


def _cert_json(c: dict) -> dict:
    return json.loads(json.dumps(c, default=_default))


def _strip_private(d: dict) -> dict:
    return {k: v for k, v in d.items() if not k.startswith("_")}


# -- commands -------------------------------------------------------------------

def cmd_derive(args) -> tuple:
    obj = _read_input(args)
    system = _load_system(obj)
    start = obj.get("start")
    if start is not None:
        start = [_exact_or_complex(x) for x in start]
    res = _derive(system, start, args.tau)
    return EXIT_OK, _strip_private(res)


def _bounds_for_equation(eq: PrincipalEquation, constants, length=None, interval=None):
    eqn = eq.as_unipoly() if eq.exact else eq
    a = [p for p in eqn.a]
    rep = {}
    db = zero_bound_unit_disk(eqn, constants=constants)
    rep["unit_disk"] = db.to_json()
    if length is not None:
        lo, hi = interval if interval is not None else (-length / 2, length / 2)
        pts = np.linspace(lo, hi, 257).astype(complex)
        half = (hi - lo) / 512
        m0 = certified_min_modulus(a[0], pts, half)
        if m0 > 0:
            b = [float(p.l1_norm()) / m0 for p in a[1:]]
            vp = vallee_poussin_disconjugate(b, hi - lo)
            rep["vallee_poussin"] = {"interval": [lo, hi], "b": b, "sum": vp.total,
                                     "disconjugate": vp.disconjugate}
        else:
            rep["vallee_poussin"] = {"interval": [lo, hi], "b": None, "sum": None,
                                     "disconjugate": False,
                                     "reason": "leading coefficient not bounded below"}
    return rep


def _towers(system, constants, norm) -> dict:
    out = {}
    if isinstance(system, tuple):
        return out
    M = float(magnitude(system, norm))
    n = system.n
    if isinstance(system, PolySystem):
        m = system.m
        out["main"] = main_theorem_bound(n, m, M, constants).to_json()
        out["ratio"] = ratio_bound(n, m, M, constants).to_json()
    elif isinstance(system, FuchsSystem):
        m = system.m
        out["fuchsian"] = fuchsian_bound(n, m, M, constants).to_json()
    else:
        m = n
        out["hypergeometric"] = hypergeometric_bound(n, M, constants).to_json()
        # the same system read as Fuchsian with n poles (eigenvalues of B)
        out["fuchsian_equivalent"] = fuchsian_bound(n, n, M, constants).to_json()
    if M > 2 and m >= 2:
        out["meander"] = meander_bound(n, m, M, constants).to_json()
    else:
        out["meander"] = None
    out["M"] = M
    return out


def cmd_bound(args) -> tuple:
    obj = _read_input(args)
    system = _load_system(obj)
    constants = _constants(args)
    res = _derive(system, None, args.tau)
    eq = res["_eq"]
    rep = {"status": res["status"], "equation": res["equation"]}
    length = args.length if args.length is not None else obj.get("interval_length")
    rep.update(_bounds_for_equation(eq, constants, length))
    rep["towers"] = _towers(system, constants, args.norm)
    return EXIT_OK, rep


def _count_one(target, x0, c, center, r, args):
    rep = count_zeros_disk(target, x0=x0, c=c, center=center, r=r, rel_tol=args.rel_tol,
                           delta=args.delta)
    return rep.to_json()


def cmd_count(args) -> tuple:
    obj = _read_input(args)
    disks = obj.get("disks") or [{"center": 0, "r": 1}]
    reports = []
    if "polynomial" in obj:
        p = UniPolyC.from_json(obj["polynomial"])
        for d in disks:
            rep = _count_one(p, None, None, _complex(d.get("center", 0)), float(d["r"]), args)
            try:
                rep["oracle_count"] = oracle_count(p, _complex(d.get("center", 0)),
                                                   rep["radius"])
            except BoundaryAmbiguous:
                rep["oracle_count"] = "boundary-ambiguous"
            reports.append(rep)
    else:
        system = system_from_json(obj["system"])
        x0 = [_complex(v) for v in obj["x0"]]
        combos = obj.get("combinations") or [[1] + [0] * (system.n - 1)]
        for c in combos:
            cv = [_complex(v) for v in c]
            for d in disks:
                center = _complex(d.get("center", 0))
                reports.append(_count_one(system, x0, cv, center, float(d["r"]), args))
    code = EXIT_OK
    if any(r["status"] == "integration-failed" for r in reports):
        code = EXIT_NUMERIC
    return code, {"reports": reports}


def _residual(system, eq, center, r, rel_tol, start=None) -> float:
    sysr = system.numeric() if hasattr(system, "numeric") else system
    n = sysr.n
    sol = integrate(sysr, np.eye(n), disk_path(center, r), rel_tol, estimate_error=False)
    c = np.eye(n)[0] if start is None else np.array([complex(x) for x in start])
    return residual_check(eq, sol, c)


_CERTS = ("integrality", "xi_degree", "wedge_degree", "wedge_norm")


def cmd_certify(args) -> tuple:
    obj = _read_input(args)
    system = _load_system(obj)
    start = obj.get("start")
    if start is not None:
        start = [_exact_or_complex(x) for x in start]
    res = _derive(system, start, args.tau)
    out = _strip_private(res)
    code = EXIT_OK
    if isinstance(system, tuple):
        cert = res["certificates"]
        ok = all(cert[k] for k in _CERTS)
        out["ok"] = ok
        return (EXIT_OK if ok else EXIT_VIOLATION), out
    eq = res["_eq"]
    center = _complex(obj.get("center", 0))
    r = float(obj.get("radius", 0.5))
    if not isinstance(system, PolySystem):
        clear = singularity_clearance(system, center, r, args.clearance_factor)
        out["clearance"] = clear
        if clear["status"] != "clear":
            raise InputError("residual disk is too close to a singular point")
    resid = _residual(system, eq, center, r, args.rel_tol, start)
    out["residual"] = resid
    out["residual_ok"] = resid <= 1e-8
    if "certificates" in out:
        cert = out["certificates"]
        out["ok"] = bool(out["residual_ok"] and all(cert[k] for k in _CERTS))
    else:
        out["ok"] = bool(out["residual_ok"])
    if not out["ok"]:
        code = EXIT_VIOLATION
    return code, out


# -- sweep ----------------------------------------------------------------------------

def _sweep_row(job) -> dict:
    kind, index, params = job
    if kind == "omega":
        return _omega_row(index, params)
    return _random_row(index, params)


def _omega_row(index, params) -> dict:
    w = params["omega"]
    N = np.zeros((1, 2, 2), dtype=complex)
    N[0, 0, 1] = 1
    N[0, 1, 0] = -w * w
    rep = count_zeros_disk(RationalSystem(N, np.array([1.0 + 0j])), x0=[1, 0], c=[1, 0],
                           rel_tol=params["rel_tol"], delta=params["delta"])
    expected = 2 * sum(1 for k in range(int(w) + 2) if math.pi / 2 + k * math.pi < w)
    return {"index": index, "omega": w, "measured": rep.zero_count, "status": rep.status,
            "closed_form": expected, "violation": rep.zero_count != expected}


def _random_row(index, params) -> dict:
    rng = random.Random(params["seed"] * 1_000_003 + index)
    n, m, M = params["n"], params["m"], params["M"]
    constants = BoundConstants(**params["constants"])
    system = random_poly_system(rng, n, m, M)
    c = [rng.randint(-M, M) for _ in range(n)]
    if all(x == 0 for x in c):
        c[rng.randrange(n)] = 1
    x0 = [complex(rng.randint(-3, 3), rng.randint(-3, 3)) for _ in range(n)]
    if all(x == 0 for x in x0):
        x0[0] = 1
    row = {"index": index, "n": n, "m": m, "M": M,
           "matrices": [[[int(x) for x in r] for r in A] for A in system.matrices],
           "combination": c, "x0": [[z.real, z.imag] for z in x0]}
    res = _derive(system, [Fraction(x) for x in c], params["tau"])
    eq = res["_eq"]
    row["sigma"] = res["status"] != "generic"
    row["order"] = eq.n
    rep = count_zeros_disk(system, x0=x0, c=c, rel_tol=params["rel_tol"],
                           delta=params["delta"])
    row["status"] = rep.status
    row["measured"] = rep.zero_count
    row["radius"] = rep.radius
    tower = main_theorem_bound(n, m, max(float(magnitude(system, params["norm"])), 1.0),
                               constants)
    row["tower_log10_log10"] = _finite(tower.log10_log10_value)
    db = zero_bound_unit_disk(eq.as_unipoly(), constants=constants)
    row["constructive"] = db.constructive
    row["formula"] = db.formula
    a = eq.as_unipoly().a
    m0 = certified_min_modulus(a[0], np.linspace(-0.5, 0.5, 257).astype(complex), 1 / 512)
    if m0 > 0:
        b = [float(p.l1_norm()) / m0 for p in a[1:]]
        row["vallee_poussin"] = vallee_poussin_disconjugate(b, 1.0).disconjugate
    else:
        row["vallee_poussin"] = False
    viol = []
    k = rep.zero_count
    if k is not None:
        if row["constructive"] is not None and k > row["constructive"]:
            viol.append("constructive")
        if not tower.admits(k):
            viol.append("tower")
    row["violation"] = viol
    return row


def cmd_sweep(args) -> tuple:
    constants = _constants(args)
    if args.omega_max is not None:
        jobs = [("omega", i, {"omega": float(w), "rel_tol": args.rel_tol, "delta": args.delta})
                for i, w in enumerate(range(args.omega_min, args.omega_max + 1))]
    else:
        params = {"seed": args.seed, "n": args.n, "m": args.m, "M": args.M,
                  "constants": constants.to_json(), "rel_tol": args.rel_tol,
                  "delta": args.delta, "tau": args.tau, "norm": args.norm}
        jobs = [("random", i, params) for i in range(args.draws)]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    violations = [r["index"] for r in rows if r["violation"]]
    if args.csv:
        _write_csv(args.csv, rows)
    code = EXIT_VIOLATION if violations else EXIT_OK
    return code, {"rows": rows, "violations": violations}


def _write_csv(path, rows):
    cols = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: json.dumps(v, sort_keys=True, default=_default)
                    if isinstance(v, (list, dict)) else v for k, v in r.items()})
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


# -- family / smith -------------------------------------------------------------------

def cmd_family(args) -> tuple:
    obj = _read_input(args)
    out = {}
    N = obj.get("eps_order", args.trunc if obj.get("truncated") else None)
    if "functions" in obj:
        fs = [ExactMPoly.from_json(f) for f in obj["functions"]]
        op = annihilating_operator(fs, N)
        out["operator"] = op.to_json()
        out["annihilates"] = all(op.apply(f).is_zero() for f in fs) if N is None else None
        out["leading_at_zero_nonzero"] = not op.leading_at_zero().is_zero()
        out["vanishing"] = vanishing_orders(op).to_json()
    if "operator" in obj:
        op = DiffOpFamily.from_json(obj["operator"])
        out["vanishing"] = vanishing_orders(op).to_json()
    if "vectors" in obj:
        vs = [EpsVector.from_json(v) for v in obj["vectors"]]
        span = constant_rank_span(vs, seed=args.seed)
        out["span"] = {"rank": span.rank, "orders": span.orders, "pivots": span.pivots,
                       "vectors": [w.to_json() for w in span.vectors],
                       "verified": span.verified}
    if not out:
        raise InputError("expected 'functions', 'operator' or 'vectors'")
    code = EXIT_OK
    if "vanishing" in out and not out["vanishing"]["verdict"]:
        code = EXIT_VIOLATION
    return code, out


def _series_matrix(rows):
    return [[Series.from_json(e) if isinstance(e, dict) else Series.coerce(e) for e in r]
            for r in rows]


def cmd_smith(args) -> tuple:
    obj = _read_input(args)
    N = int(obj.get("N", args.trunc))
    X = _series_matrix(obj["matrix"])
    form = smith_local_form(X, N)
    checks = check_smith(X, form)
    ok = all(checks[k] for k in ("reconstruction", "U0_invertible", "V0_invertible",
                                 "divisor_orders"))
    return (EXIT_OK if ok else EXIT_VIOLATION), {"form": form.to_json(), "checks": checks}


# -- parser -------------------------------------------------------------------------

def _range(lo, hi, name):
    def check(s):
        v = float(s)
        if not (lo < v < hi):
            raise argparse.ArgumentTypeError(f"{name} must lie in ({lo:g}, {hi:g})")
        return v
    return check


def _positive(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input JSON file")
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--rel-tol", type=_range(1e-14, 1e-4, "rel-tol"), default=1e-12)
    common.add_argument("--tau", type=_range(0, 1e-2, "tau"), default=DEFAULT_TAU)
    common.add_argument("--delta", type=_range(0, 1e-1, "delta"), default=1e-6)
    common.add_argument("--trunc", type=int, default=32)
    common.add_argument("--c-main", type=_positive, default=1.0)
    common.add_argument("--c-levin", type=_positive, default=1.0)
    common.add_argument("--c-var", type=_positive, default=1.0)
    common.add_argument("--c-ratio", type=_positive, default=1.0)
    common.add_argument("--c-tower", type=float, default=0.0)
    common.add_argument("--norm", choices=NORMS, default="rowsum")
    common.add_argument("--clearance-factor", type=_positive, default=float(CLEARANCE_FACTOR))

    p = argparse.ArgumentParser(prog="zerobound", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"zerobound {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("derive", parents=[common], help="principal equation of a system")
    b = sub.add_parser("bound", parents=[common], help="all applicable bounds")
    b.add_argument("--length", type=_positive, default=None,
                   help="interval length for the disconjugacy test")
    sub.add_parser("count", parents=[common], help="zero counts in disks")
    s = sub.add_parser("sweep", parents=[common], help="random or frequency sweeps")
    s.add_argument("--draws", type=int, default=50)
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--m", type=int, default=2)
    s.add_argument("--M", type=int, default=1)
    s.add_argument("--omega-min", type=int, default=1)
    s.add_argument("--omega-max", type=int, default=None)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--csv", help="also write the table as CSV")
    sub.add_parser("family", parents=[common], help="operator families in eps")
    sub.add_parser("smith", parents=[common], help="local Smith form of a series matrix")
    sub.add_parser("certify", parents=[common],
                   help="derive, check certificates and the residual in one pass")
    return p


COMMANDS = {
    "derive": cmd_derive,
    "bound": cmd_bound,
    "count": cmd_count,
    "sweep": cmd_sweep,
    "family": cmd_family,
    "smith": cmd_smith,
    "certify": cmd_certify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code, result = COMMANDS[args.command](args)
    except (InputError, KeyError, TypeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ArithmeticError, IntegrationFailed, PoleOnPath) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = dumps(_envelope(args, result))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
