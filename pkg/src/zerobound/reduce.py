"""Reduction of a linear system x' = A(t) x to a scalar equation for y = x_1.

The row vectors xi_k with y^(k) = xi_k . x obey xi_{k+1} = d(xi_k)/dt + xi_k A.
Since n + 1 vectors in an n-dimensional space are dependent, the signed
n x n wedge determinants give a_0 y^(n) + ... + a_n y = 0.

Everything here is written against the small ring interface shared by
``ExactMPoly`` (universal or exact specialized mode) and ``UniPolyC``
(floating specialized mode).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.linalg

from .poly import ExactMPoly, UniPolyC, specialize

__all__ = [
    "DegenerateChain",
    "BudgetExceeded",
    "XiChain",
    "PrincipalEquation",
    "NormProfile",
    "DegeneracyReport",
    "xi_chain",
    "wedge",
    "principal_equation",
    "verify_iter_certificates",
    "detect_degeneracy",
    "norm_profile",
    "rational_chain",
    "equation_from_rows",
    "UNIVERSAL_PARAM_BUDGET",
    "DEFAULT_TAU",
]

UNIVERSAL_PARAM_BUDGET = 40
DEFAULT_TAU = 1e-10


class DegenerateChain(ArithmeticError):
    """xi_0 ^ ... ^ xi_{n-1} vanishes identically in the given mode."""


class BudgetExceeded(ValueError):
    """Universal computation requested over too many parameters."""


def _mode_of(entry) -> str:
    if isinstance(entry, UniPolyC):
        return "specialized"
    if isinstance(entry, ExactMPoly):
        return "universal" if len(entry.vars) > 1 else "specialized"
    raise TypeError(f"unsupported coefficient type {type(entry).__name__}")


def _is_exact(entry) -> bool:
    return isinstance(entry, ExactMPoly)


def _deg_t(p) -> int:
    return p.degree if isinstance(p, UniPolyC) else p.degree_in(0)


def _total_deg(p) -> int:
    return p.degree if isinstance(p, UniPolyC) else p.degree()


@dataclass
class XiChain:
    n: int
    m: int
    xi: list
    mode: str

    @property
    def exact(self) -> bool:
        return _is_exact(self.xi[0][0])


def xi_chain(A: Sequence[Sequence], n: int | None = None, m: int | None = None,
             start: Sequence | None = None) -> XiChain:
    """Run xi_{k+1} = d/dt xi_k + xi_k A for k = 0..n-1.

    ``A`` is an n x n nested list of ring elements.  ``m`` defaults to
    1 + max deg_t of the entries.  ``start`` overrides xi_0 = (1, 0, ..., 0)
    so that y = start . x can be reduced directly.
    """
    rows = [list(r) for r in A]
    if n is None:
        n = len(rows)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError(f"A must be {n}x{n}")
    proto = rows[0][0]
    mode = _mode_of(proto)
    if mode == "universal" and len(proto.vars) - 1 > UNIVERSAL_PARAM_BUDGET:
        raise BudgetExceeded(
            f"{len(proto.vars) - 1} parameters exceed the universal budget "
            f"of {UNIVERSAL_PARAM_BUDGET}")
    if m is None:
        m = 1 + max((_deg_t(e) for r in rows for e in r), default=0)
        m = max(m, 1)
    zero = proto.zero_like()
    if start is None:
        xi0 = [proto.const_like(1)] + [zero] * (n - 1)
    else:
        xi0 = [s if not isinstance(s, (int, float, complex, Fraction)) else
               (proto.const_like(s) if s != 0 else zero) for s in start]
        if len(xi0) != n:
            raise ValueError("start vector has wrong length")
    xi = [xi0]
    for _ in range(n):
        prev = xi[-1]
        nxt = []
        for j in range(n):
            acc = prev[j].partial_t()
            for i in range(n):
                if not prev[i].is_zero() and not rows[i][j].is_zero():
                    acc = acc + prev[i] * rows[i][j]
            nxt.append(acc)
        xi.append(nxt)
    return XiChain(n=n, m=m, xi=xi, mode=mode)


def wedge(rows: Sequence[Sequence], cols: Sequence[int] | None = None):
    """Determinant of a square block of ring elements by memoized Laplace expansion."""
    k = len(rows)
    if cols is None:
        cols = list(range(k))
    if len(cols) != k:
        raise ValueError("wedge needs as many rows as columns")
    proto = rows[0][cols[0]] if k else None
    memo: dict = {}

    def det(i: int, avail: tuple):
        if i == k:
            return proto.const_like(1)
        key = (i, avail)
        hit = memo.get(key)
        if hit is not None:
            return hit
        acc = proto.zero_like()
        sign = 1
        for pos, c in enumerate(avail):
            e = rows[i][c]
            if not e.is_zero():
                sub = det(i + 1, avail[:pos] + avail[pos + 1:])
                if not sub.is_zero():
                    term = e * sub
                    acc = acc + term if sign > 0 else acc - term
            sign = -sign
        memo[key] = acc
        return acc

    return det(0, tuple(cols))


@dataclass
class PrincipalEquation:
    """a_0 y^(n) + a_1 y^(n-1) + ... + a_n y = 0; ``a[j]`` multiplies y^(n-j)."""

    n: int
    a: list
    mode: str
    content_removed: int = 1
    common_factor: object = None

    @property
    def exact(self) -> bool:
        return _is_exact(self.a[0])

    def degree(self) -> int:
        return max(_total_deg(c) for c in self.a)

    def specialize(self, lam: Sequence[complex]) -> "PrincipalEquation":
        if self.mode != "universal":
            raise ValueError("equation is already specialized")
        return PrincipalEquation(self.n, [specialize(c, lam) for c in self.a], "specialized")

    def as_unipoly(self) -> "PrincipalEquation":
        if not self.exact:
            return self
        if self.mode == "universal":
            raise ValueError("universal equation must be specialized first")
        return PrincipalEquation(self.n, [c.to_unipoly() for c in self.a], "specialized")

    def to_json(self) -> dict:
        out = {"n": self.n, "mode": self.mode,
               "a": [c.to_json() for c in self.a],
               "content_removed": str(self.content_removed)}
        return out

    @classmethod
    def from_json(cls, obj) -> "PrincipalEquation":
        a = []
        for c in obj["a"]:
            a.append(ExactMPoly.from_json(c) if "terms" in c else UniPolyC.from_json(c))
        return cls(int(obj["n"]), a, obj["mode"], int(obj.get("content_removed", "1")))


def equation_from_rows(rows: Sequence[Sequence], cols: Sequence[int] | None = None) -> list:
    """Coefficients of the dependence among k + 1 rows restricted to k columns.

    With rows r_0..r_k, returns a_0..a_k where a_j = (-1)^(k-j) det(rows
    without r_{k-j}), so that sum_j a_j r_{k-j} = 0 on the chosen columns.
    """
    k = len(rows) - 1
    out = []
    for j in range(k + 1):
        omit = k - j
        sub = [rows[i] for i in range(k + 1) if i != omit]
        d = wedge(sub, cols)
        out.append(d if (k - j) % 2 == 0 else -d)
    return out


def _annihilates(a, rows) -> bool:
    k = len(a) - 1
    n = len(rows[0])
    for col in range(n):
        acc = rows[0][col].zero_like()
        for j in range(k + 1):
            acc = acc + a[j] * rows[k - j][col]
        if not acc.is_zero():
            return False
    return True


def _remove_content(a):
    g = 0
    for c in a:
        if not c.is_zero():
            g = math.gcd(g, c.content())
    if g > 1:
        a = [c.scale(Fraction(1, g)) for c in a]
    return a, max(g, 1)


def principal_equation(chain: XiChain, normalize: bool = True, tau: float = DEFAULT_TAU,
                       check: bool = True) -> PrincipalEquation:
    """Order-n equation from the full chain via signed wedges (Cramer rule).

    In exact mode the annihilation identity is asserted by exact expansion
    and integer content is divided out when ``normalize`` is set.
    """
    a = equation_from_rows(chain.xi)
    if chain.exact:
        if a[0].is_zero():
            raise DegenerateChain("xi_0 ^ ... ^ xi_{n-1} vanishes identically")
        if check and not _annihilates(a, chain.xi):
            raise AssertionError("annihilation identity failed")
        content = 1
        if normalize and all(c.integral for c in a):
            a, content = _remove_content(a)
        return PrincipalEquation(chain.n, a, chain.mode, content)
    scale = max((c.l1_norm() for c in a), default=0.0)
    if a[0].is_zero() or a[0].l1_norm() <= tau * scale:
        raise DegenerateChain("xi_0 ^ ... ^ xi_{n-1} vanishes numerically")
    return PrincipalEquation(chain.n, a, chain.mode)


def verify_iter_certificates(chain: XiChain, eq: PrincipalEquation | None = None) -> dict:
    """Exact check of the integrality, degree and norm certificates.

    The wedge checks run on the coefficients before content removal.
    Besides the four stated booleans the report carries the largest
    observed values and, for reference, the degree count obtained by
    summing deg xi_k over the rows actually used in each wedge.
    """
    if not chain.exact:
        raise ValueError("certificates need exact mode")
    n, m = chain.n, chain.m
    if eq is None:
        # wedges are defined even when the leading one vanishes
        raw = equation_from_rows(chain.xi)
        content = 1
    else:
        raw = [c.scale(eq.content_removed) for c in eq.a]
        content = eq.content_removed

    integral = all(e.integral for row in chain.xi for e in row)
    xi_deg = [max((e.degree() for e in row), default=-1) for row in chain.xi]
    degrees_ok = all(d <= k * m for k, d in enumerate(xi_deg))

    deg_bound = n * (n - 1) * m // 2
    norm_bound = math.factorial(n) * (2 * n * m) ** (n * n)
    wedge_deg = [c.degree() for c in raw]
    wedge_norm = [c.l1_norm() for c in raw]
    wedge_integral = all(c.integral for c in raw)
    # row-sum degree count: wedge omitting xi_{n-j} uses rows of degree <= k m
    rowsum_bound = [m * (n * (n + 1) // 2 - (n - j)) for j in range(n + 1)]

    return {
        "n": n,
        "m": m,
        "integrality": bool(integral and wedge_integral),
        "xi_degree": bool(degrees_ok),
        "wedge_degree": bool(all(d <= deg_bound for d in wedge_deg)),
        "wedge_norm": bool(all(v <= norm_bound for v in wedge_norm)),
        "xi_degrees": xi_deg,
        "wedge_degrees": wedge_deg,
        "wedge_degree_bound": deg_bound,
        "leading_wedge_degree_ok": bool(wedge_deg[0] <= deg_bound),
        "rowsum_degree_bounds": rowsum_bound,
        "rowsum_degree_ok": bool(all(d <= b for d, b in zip(wedge_deg, rowsum_bound))),
        "wedge_norms": [str(v) for v in wedge_norm],
        "wedge_norm_bound": str(norm_bound),
        "content_removed": str(content),
    }


# -- rank over the coefficient field --------------------------------------

def _exact_pivots(M) -> list[int]:
    M = [[Fraction(x) for x in row] for row in M]
    pivots = []
    rank = 0
    for c in range(len(M[0])):
        piv = next((r for r in range(rank, len(M)) if M[r][c] != 0), None)
        if piv is None:
            continue
        M[rank], M[piv] = M[piv], M[rank]
        for r in range(len(M)):
            if r != rank and M[r][c] != 0:
                f = M[r][c] / M[rank][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[rank])]
        pivots.append(c)
        rank += 1
    return pivots


def _exact_rank(M) -> int:
    return len(_exact_pivots(M))


def _float_rank(M: np.ndarray, tau: float) -> int:
    if M.size == 0:
        return 0
    norms = np.linalg.norm(M, axis=1)
    keep = norms > 0
    if not keep.any():
        return 0
    s = np.linalg.svd(M[keep] / norms[keep, None], compute_uv=False)
    return int(np.sum(s > tau * s[0]))


def _float_pivots(M: np.ndarray, tau: float) -> list[int]:
    k = M.shape[0]
    norms = np.linalg.norm(M, axis=1)
    Mn = M / np.where(norms > 0, norms, 1)[:, None]
    _, _, piv = scipy.linalg.qr(Mn, pivoting=True, mode="economic")
    return sorted(int(p) for p in piv[:k])


def _sample_points(exact: bool, count: int):
    if exact:
        return [Fraction(i) for i in range(count)]
    # deterministic points in the disk of radius 1/2, off the real axis
    return [0.5 * np.exp(2j * np.pi * (i + 0.37) / count) * (0.6 + 0.4 * ((i * 7) % 5) / 5)
            for i in range(count)]


def _evaluate(p, t):
    if isinstance(p, UniPolyC):
        return complex(p(t))
    return p.evaluate((t,))


@dataclass
class DegeneracyReport:
    status: str  # "generic" or "degenerate"
    order: int
    equation: PrincipalEquation
    columns: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"status": self.status, "order": self.order, "columns": list(self.columns),
                "equation": self.equation.to_json()}


def _rank_profile(xi, tau, exact):
    """Ranks over the rational-function field of xi_0..xi_k for k = 0..n."""
    n = len(xi[0])
    total = sum(max(_deg_t(e) for e in row) if any(not e.is_zero() for e in row) else 0
                for row in xi)
    count = total + 1 if exact else max(8, min(total + 1, 24))
    pts = _sample_points(exact, count)
    evals = [[[_evaluate(e, t) for e in row] for row in xi] for t in pts]
    ranks, best_pts = [], []
    for k in range(len(xi)):
        best, arg = -1, None
        for idx, ev in enumerate(evals):
            block = ev[: k + 1]
            r = _exact_rank(block) if exact else _float_rank(np.array(block, dtype=complex), tau)
            if r > best:
                best, arg = r, idx
            if best == min(k + 1, n):
                break
        ranks.append(best)
        best_pts.append(arg)
    return ranks, best_pts, evals


def detect_degeneracy(A: Sequence[Sequence], tau: float = DEFAULT_TAU,
                      start: Sequence | None = None) -> DegeneracyReport:
    """Smallest k such that xi_0..xi_k are dependent over C(t), and its equation.

    Rank over C(t) is decided by evaluation: in exact mode at more distinct
    rational points than the degree of any minor, so the answer is exact;
    in floating mode at a fixed set of points with relative threshold ``tau``.
    """
    chain = xi_chain(A, start=start)
    if chain.mode != "specialized":
        raise ValueError("detect_degeneracy expects a specialized matrix")
    exact = chain.exact
    return _degeneracy_from_rows(chain.xi, chain.n, tau, exact, chain.mode)


def _degeneracy_from_rows(xi, n, tau, exact, mode) -> DegeneracyReport:
    ranks, best_pts, evals = _rank_profile(xi, tau, exact)
    k = next(i for i in range(1, len(xi)) if ranks[i] < i + 1)
    rows = xi[: k + 1]
    if ranks[k - 1] < k:
        raise DegenerateChain("xi_0 vanishes")
    block = evals[best_pts[k - 1]][:k]
    if exact:
        cols = _exact_pivots(block)
    else:
        cols = _float_pivots(np.array(block, dtype=complex), tau)
    a = equation_from_rows(rows, cols)
    content = 1
    if exact:
        if not _annihilates(a, rows):
            raise AssertionError("order-k relation does not annihilate the chain")
        if all(c.integral for c in a):
            a, content = _remove_content(a)
    status = "generic" if k == n else "degenerate"
    return DegeneracyReport(status, k, PrincipalEquation(k, a, mode, content), cols)


@dataclass
class NormProfile:
    b: list
    c: list
    in_sigma: bool

    def to_json(self) -> dict:
        return {"b": [str(x) if isinstance(x, Fraction) else x for x in self.b],
                "c": [str(x) if isinstance(x, Fraction) else x for x in self.c],
                "in_sigma": self.in_sigma}


def norm_profile(eq: PrincipalEquation, tau: float = DEFAULT_TAU) -> NormProfile:
    """l1 norms b_j and squared-modulus sums c_j of the specialized a_j."""
    if eq.mode == "universal":
        raise ValueError("specialize the equation first")
    b = [c.l1_norm() for c in eq.a]
    c = [p.sum_sq() for p in eq.a]
    if eq.exact:
        sigma = b[0] == 0
    else:
        top = max(b) if b else 0.0
        sigma = b[0] == 0 or b[0] < tau * top
    return NormProfile(b, c, bool(sigma))


# -- rational systems: A = N / chi ----------------------------------------

def rational_chain(N: Sequence[Sequence], chi, n: int | None = None,
                   start: Sequence | None = None) -> list:
    """Numerators eta_k of xi_k = eta_k / chi^k for x' = (N / chi) x.

    eta_{k+1} = chi eta_k' - k chi' eta_k + eta_k N, which stays polynomial.
    """
    rows = [list(r) for r in N]
    if n is None:
        n = len(rows)
    zero = chi.zero_like()
    eta0 = [chi.const_like(1)] + [zero] * (n - 1) if start is None else list(start)
    eta = [eta0]
    dchi = chi.partial_t()
    for k in range(n):
        prev = eta[-1]
        nxt = []
        for j in range(n):
            acc = chi * prev[j].partial_t()
            if k:
                acc = acc - dchi * prev[j] * chi.const_like(k)
            for i in range(n):
                if not prev[i].is_zero() and not rows[i][j].is_zero():
                    acc = acc + prev[i] * rows[i][j]
            nxt.append(acc)
        eta.append(nxt)
    return eta
