"""One check per acceptance criterion; each prints a PASS/FAIL line.

The lines are also repeated in the terminal summary under
"acceptance criteria".
"""
import json
import math
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from zerobound.cli import main as cli_main
from zerobound.contour import (
    BoundaryAmbiguous,
    count_zeros_disk,
    disk_path,
    integrate,
    line,
    oracle_count,
    residual_check,
)
from zerobound.family import (
    EPS_VARS,
    check_smith,
    restrict_to_arc,
    smith_local_form,
    vanishing_orders,
)
from zerobound.models import (
    PolySystem,
    RationalSystem,
    random_integer_family,
    random_poly_system,
    universal_matrix,
)
from zerobound.oscbound import (
    BoundConstants,
    fuchsian_bound,
    hypergeometric_bound,
    vallee_poussin_disconjugate,
)
from zerobound.poly import ExactMPoly, UniPolyC, certified_min_modulus
from zerobound.reduce import (
    DegenerateChain,
    detect_degeneracy,
    equation_from_rows,
    principal_equation,
    verify_iter_certificates,
    xi_chain,
)

from conftest import ACCEPTANCE_LINES
from fixture_io import fixture_paths, load, roundtrip
from generators import coeff_lists, random_series_matrix
from oracles import charpoly, determinantal_orders, poly_divides, proportional


def report(k, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)


def oscillator(w):
    N = np.zeros((1, 2, 2), dtype=complex)
    N[0, 0, 1] = 1
    N[0, 1, 0] = -w * w
    return RationalSystem(N, np.array([1.0 + 0j]))


def cos_zeros(w):
    return 2 * sum(1 for k in range(int(w) + 2) if math.pi / 2 + k * math.pi < w)


def const_of(p):
    return p.terms.get((0,), Fraction(0))


# -- 1 ---------------------------------------------------------------------------

def test_criterion_1_constant_matrix_charpoly():
    rng = random.Random(1)
    t0 = time.time()
    generic = degenerate = bad = 0
    for _ in range(100):
        n = rng.randint(1, 5)
        A = [[rng.randint(-5, 5) for _ in range(n)] for _ in range(n)]
        M = PolySystem([A]).matrix()
        p = charpoly(A)
        try:
            eq = principal_equation(xi_chain(M))
            generic += 1
            bad += not proportional([const_of(c) for c in eq.a], p)
        except DegenerateChain:
            # e_1 is not cyclic: the order-k relation must divide det(x - A)
            degenerate += 1
            rep = detect_degeneracy(M)
            bad += not poly_divides([const_of(c) for c in rep.equation.a], p)
    dt = time.time() - t0
    ok = bad == 0 and dt <= 30
    report(1, ok, f"{generic} generic proportional to det(x-A), {degenerate} degenerate "
                  f"dividing it, {bad} mismatches, {dt:.1f}s (limit 30s)")
    assert ok


# -- 2, 3 --------------------------------------------------------------------------

def _families(count=200, seed=2):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        n, m = rng.randint(1, 4), rng.randint(1, 4)
        out.append((n, m, random_integer_family(rng, n, m)))
    return out


FAMILIES = None


def families():
    global FAMILIES
    if FAMILIES is None:
        FAMILIES = [(n, m, A, xi_chain(A, m=m)) for n, m, A in _families()]
    return FAMILIES


def test_criterion_2_iteration_certificates():
    # prints the full verdict; asserts only the certificates that are true,
    # the stated wedge-degree bound is asserted by the strict xfail below
    t0 = time.time()
    counts = {"integrality": 0, "xi_degree": 0, "wedge_norm": 0, "wedge_degree": 0,
              "leading_wedge_degree_ok": 0, "rowsum_degree_ok": 0}
    worst = None
    for n, m, A, ch in families():
        rep = verify_iter_certificates(ch)
        for k in counts:
            counts[k] += not rep[k]
        if not rep["wedge_degree"] and worst is None:
            worst = (n, m, rep["wedge_degrees"], rep["wedge_degree_bound"])
    dt = time.time() - t0
    sound = counts["integrality"] + counts["xi_degree"] + counts["wedge_norm"]
    ok = sound == 0 and counts["wedge_degree"] == 0 and dt <= 120
    detail = (f"200 systems: integrality {counts['integrality']} fails, deg xi_k <= km "
              f"{counts['xi_degree']} fails, l1 <= n!(2nm)^(n^2) {counts['wedge_norm']} fails, "
              f"wedge degree <= n(n-1)m/2 {counts['wedge_degree']} fails "
              f"(leading wedge {counts['leading_wedge_degree_ok']} fails, row-sum bound "
              f"{counts['rowsum_degree_ok']} fails), {dt:.1f}s (limit 120s)")
    if worst:
        detail += f"; first counterexample n={worst[0]} m={worst[1]} wedge degrees " \
                  f"{worst[2]} vs bound {worst[3]}"
    report(2, ok, detail)
    # the three certificates that hold must hold everywhere
    assert sound == 0 and counts["leading_wedge_degree_ok"] == 0 \
        and counts["rowsum_degree_ok"] == 0 and dt <= 120


@pytest.mark.xfail(strict=True, reason="the stated degree bound only holds for the "
                                       "leading wedge; see the decisions ledger")
def test_criterion_2_wedge_degree_as_stated():
    assert all(verify_iter_certificates(ch)["wedge_degree"] for *_, ch in families())


def _specialize_matrix(A, lam):
    names = [v for v in A[0][0].vars if v != "t"]
    images = {v: ExactMPoly.constant(("t",), x) for v, x in zip(names, lam)}
    return [[e.compose(images, ("t",)) for e in row] for row in A]


def _poly_system(At):
    n = len(At)
    deg = max(max(e.degree(), 0) for row in At for e in row)
    mats = [[[0] * n for _ in range(n)] for _ in range(deg + 1)]
    for i in range(n):
        for j in range(n):
            for k, c in enumerate(At[i][j].univariate_coeffs() if not At[i][j].is_zero()
                                  else []):
                mats[k][i][j] = c
    return PolySystem(mats)


def test_criterion_3_annihilation_and_residual():
    exact_bad = 0
    for n, m, A, ch in families():
        a = equation_from_rows(ch.xi)
        for col in range(n):
            acc = a[0].zero_like()
            for j in range(n + 1):
                acc = acc + a[j] * ch.xi[n - j][col]
            exact_bad += not acc.is_zero()
    rng = random.Random(3)
    worst, used, skipped = 0.0, 0, 0
    for n, m, A, ch in families():
        if used == 30:
            break
        try:
            eq = principal_equation(ch, normalize=False, check=False)
        except DegenerateChain:
            skipped += 1
            continue
        lam = [rng.randint(-2, 2) for _ in range(len(A[0][0].vars) - 1)]
        sp = eq.specialize(lam)
        if sp.a[0].is_zero():
            skipped += 1
            continue
        sysp = _poly_system(_specialize_matrix(A, lam))
        sol = integrate(sysp, np.eye(n), disk_path(0, 0.5))
        worst = max(worst, residual_check(sp, sol))
        used += 1
    ok = exact_bad == 0 and used == 30 and worst <= 1e-8
    report(3, ok, f"exact identity failed on {exact_bad}/200; {used} specialized instances "
                  f"({skipped} skipped in Sigma), max relative residual {worst:.2e} "
                  f"(limit 1e-8)")
    assert ok


# -- 4 ---------------------------------------------------------------------------

def test_criterion_4_zero_counts():
    t0 = time.time()
    rep = count_zeros_disk(oscillator(10), x0=[1, 0], c=[1, 0])
    osc_ok = rep.zero_count == 6
    sweep = [(w, count_zeros_disk(oscillator(w), x0=[1, 0], c=[1, 0]).zero_count, cos_zeros(w))
             for w in range(1, 21)]
    sweep_bad = [s for s in sweep if s[1] != s[2]]
    rng = np.random.default_rng(4)
    mismatch = ambiguous = 0
    for _ in range(500):
        d = int(rng.integers(1, 13))
        c = rng.standard_normal(d + 1) + 1j * rng.standard_normal(d + 1)
        p = UniPolyC(c)
        r = count_zeros_disk(p)
        if r.zero_count is None:
            ambiguous += 1
            continue
        try:
            expected = oracle_count(p, 0, r.radius)
        except BoundaryAmbiguous:
            ambiguous += 1
            continue
        mismatch += r.zero_count != expected
    dt = time.time() - t0
    ok = osc_ok and not sweep_bad and mismatch == 0 and dt <= 120
    report(4, ok, f"omega=10 count {rep.zero_count} (expected 6); omega 1..20 mismatches "
                  f"{len(sweep_bad)}; 500 polynomials: {mismatch} mismatches vs companion "
                  f"oracle, {ambiguous} boundary-ambiguous; {dt:.1f}s (limit 120s)")
    assert ok


# -- 5 ---------------------------------------------------------------------------

def _derive(system):
    A = system.matrix()
    try:
        return principal_equation(xi_chain(A))
    except DegenerateChain:
        return detect_degeneracy(A).equation


def _vp_interval(eq, c0):
    a = eq.as_unipoly().a
    for L in (1.0, 0.5, 0.25, 0.125, 0.0625):
        lo, hi = c0 - L / 2, c0 + L / 2
        if hi >= 1 or lo <= -1:
            continue
        m0 = certified_min_modulus(a[0], np.linspace(lo, hi, 257).astype(complex),
                                   (hi - lo) / 512)
        if m0 <= 0:
            continue
        b = [float(p.l1_norm()) / m0 for p in a[1:]]
        if vallee_poussin_disconjugate(b, L).disconjugate:
            return lo, hi
    return None


def _real_zeros(system, xmid, mid, lo, hi, depth=0):
    """Real zeros of x_1 on [lo, hi] from disks centred on the axis.

    The system and data are real, so non-real zeros come in conjugate pairs
    and a disk on the axis with count 1 holds exactly one real zero.  Disks
    with a larger count are split in three (the centre stays a centre).
    """
    total = 0
    w = (hi - lo) / 3
    for k in range(3):
        a, b = lo + k * w, lo + (k + 1) * w
        c = 0.5 * (a + b)
        if c == mid:
            x = np.asarray(xmid, dtype=complex)
        else:
            x = integrate(system, xmid, [line(mid, c)], estimate_error=False).endpoint()[:, 0]
        rep = count_zeros_disk(system, x0=x, center=c, r=w / 2)
        if rep.zero_count is None:
            raise AssertionError(f"count failed: {rep.status}")
        if rep.zero_count >= 2 and depth < 6:
            total += _real_zeros(system, xmid, mid, a, b, depth + 1)
        else:
            total += rep.zero_count
    return total


def test_criterion_5_vallee_poussin():
    rng = random.Random(5)
    done = tried = violations = solutions = most = 0
    while done < 50:
        tried += 1
        n, m = rng.choice([2, 3]), rng.choice([1, 2])
        system = random_poly_system(rng, n, m, 2)
        eq = _derive(system)
        if eq.n < 2:
            continue
        iv = _vp_interval(eq, rng.uniform(-0.5, 0.5))
        if iv is None:
            continue
        lo, hi = iv
        mid = 0.5 * (lo + hi)
        xs = [[rng.uniform(-1, 1) for _ in range(n)] for _ in range(2)]
        # one solution vanishing at the midpoint, so the interval holds a zero
        xs.append([0.0] + [rng.uniform(-1, 1) for _ in range(n - 1)])
        for x in xs:
            z = _real_zeros(system, x, mid, lo, hi)
            most = max(most, z)
            violations += z > eq.n - 1
            solutions += 1
        done += 1
    ok = violations == 0
    report(5, ok, f"{done} disconjugate equations ({tried} drawn), {solutions} solutions, "
                  f"{violations} with more than n-1 real zeros (max seen {most})")
    assert ok


# -- 6 ---------------------------------------------------------------------------

def test_criterion_6_bound_dominance(tmp_path):
    out = tmp_path / "sweep.json"
    t0 = time.time()
    code = cli_main(["sweep", "--draws", "200", "--n", "2", "--m", "2", "--M", "1",
                     "--seed", "6", "--output", str(out)])
    rows = json.loads(out.read_text())["result"]["rows"]
    counted = [r for r in rows if r["measured"] is not None]
    viol = [r["index"] for r in rows if r["violation"]]
    ok = code == 0 and not viol and len(rows) == 200
    report(6, ok, f"200 draws (n=2, m=2, M=1, c=1), {len(counted)} counted, {len(viol)} "
                  f"exceed the constructive or tower bound, {time.time() - t0:.1f}s")
    assert ok


# -- 7 ---------------------------------------------------------------------------

def test_criterion_7_smith_oracle():
    rng = random.Random(7)
    N = 32
    bad = 0
    ranks = []
    for _ in range(200):
        X = random_series_matrix(rng, N)
        form = smith_local_form(X, N)
        chk = check_smith(X, form)
        brute = determinantal_orders(coeff_lists(X, N), N)
        sums = [s if s < N else None for s in chk["partial_sums"]]
        sums += [None] * (len(brute) - len(sums))
        ok_one = chk["reconstruction"] and chk["U0_invertible"] and chk["V0_invertible"] \
            and chk["divisor_orders"] and sums == brute
        bad += not ok_one
        ranks.append(form.rank)
    ok = bad == 0
    report(7, ok, f"200 series matrices up to 4x4, N=32: {bad} failures of U D V = X, "
                  f"U(0)/V(0) invertible or partial sums = brute-force minor orders; "
                  f"ranks seen {sorted(set(ranks))}")
    assert ok


# -- 8 ---------------------------------------------------------------------------

def test_criterion_8_principal_lemma_probe():
    rng = random.Random(8)
    eps = ExactMPoly.variable(EPS_VARS, "eps")
    shapes = [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)]
    eqs = {nm: principal_equation(xi_chain(universal_matrix(*nm)), normalize=False)
           for nm in shapes}
    done = failed = infinite = 0
    while done < 50:
        nm = shapes[done % len(shapes)]
        eq = eqs[nm]
        names = [v for v in eq.a[0].vars if v != "t"]
        arc = {}
        for v in names:
            arc[v] = eps * rng.randint(-3, 3)
            if rng.random() < 0.5:
                arc[v] = arc[v] + eps * eps * rng.randint(-2, 2)
        try:
            op = restrict_to_arc(eq, arc)
        except ValueError:
            continue  # lambda_0 itself lies in Sigma
        v = vanishing_orders(op)
        failed += not v.verdict
        infinite += any(r == math.inf for r in v.ratios)
        done += 1
    ok = failed == 0 and infinite == 0
    report(8, ok, f"50 arcs eps*lambda_0 (+eps^2 lambda_1) through A = 0: {failed} with "
                  f"nu_j < nu_0, {infinite} with an infinite limit ratio")
    assert ok


# -- 9 ---------------------------------------------------------------------------

def test_criterion_9_hypergeometric_economy():
    c = BoundConstants()
    bad = [(n, m) for n in range(1, 7) for m in range(2, 7)
           if not hypergeometric_bound(n, 1, c).exponent_log2
           < fuchsian_bound(n, m, 1, c).exponent_log2]
    ok = not bad
    report(9, ok, f"hypergeometric exponent < Fuchsian exponent on n<=6, 2<=m<=6: "
                  f"{len(bad)} exceptions")
    assert ok


# -- 10 --------------------------------------------------------------------------

def test_criterion_10_determinism_and_roundtrip(tmp_path):
    runs = []
    for cmd in (["sweep", "--draws", "20", "--seed", "10"],
                ["derive", "--input", str(fixture_paths()[0])]):
        outs = []
        for _ in range(2):
            out = tmp_path / "o.json"
            subprocess.run([sys.executable, "-m", "zerobound", *cmd, "--output", str(out)],
                           check=True)
            outs.append(out.read_bytes())
        runs.append(outs[0] == outs[1])
    trips = [roundtrip(load(p)) for p in fixture_paths()]
    rt_bad = sum(a != b for a, b in trips)
    ok = all(runs) and rt_bad == 0
    report(10, ok, f"repeated runs byte-identical: {sum(runs)}/{len(runs)}; exact JSON "
                   f"round-trip failures {rt_bad}/{len(trips)} fixtures")
    assert ok
