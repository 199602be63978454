"""Input system classes: polynomial, Fuchsian and hypergeometric.

Entries are exact rationals (``Fraction``) or Python complex numbers; a
single system never mixes the two.  Exact systems are real-rational.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .poly import ExactMPoly, UniPolyC, univariate_divmod, univariate_gcd
from .reduce import (
    DEFAULT_TAU,
    PrincipalEquation,
    _degeneracy_from_rows,
    rational_chain,
    wedge,
)

__all__ = [
    "PolySystem",
    "FuchsSystem",
    "HypergeomSystem",
    "RationalSystem",
    "lambda_vector",
    "magnitude",
    "matrix_norm",
    "universal_matrix",
    "hypergeom_to_rational",
    "fuchs_to_rational",
    "rational_reduce",
    "fuchs_reduce",
    "hypergeom_reduce",
    "singularity_clearance",
    "singular_points",
    "system_from_json",
    "system_to_json",
    "random_poly_system",
    "random_integer_family",
    "NORMS",
    "CLEARANCE_FACTOR",
]

NORMS = ("rowsum", "maxentry", "frobenius")
CLEARANCE_FACTOR = 6
POLE_TOL = 1e-9


def _as_matrix(M, exact: bool):
    rows = [list(r) for r in M]
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise ValueError("matrix must be square")
    conv = Fraction if exact else complex
    return [[conv(x) for x in r] for r in rows]


def _is_exact_entry(x) -> bool:
    return isinstance(x, (int, Fraction))


@dataclass
class PolySystem:
    """x' = (A_0 + A_1 t + ... + A_{m-1} t^{m-1}) x."""

    matrices: list
    exact: bool = True

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("need at least one coefficient matrix")
        self.matrices = [_as_matrix(M, self.exact) for M in self.matrices]
        n = len(self.matrices[0])
        if any(len(M) != n for M in self.matrices):
            raise ValueError("all coefficient matrices must be n x n")

    @property
    def n(self) -> int:
        return len(self.matrices[0])

    @property
    def m(self) -> int:
        return len(self.matrices)

    kind = "poly"

    def matrix(self):
        """A(t) as nested lists of ExactMPoly (exact) or UniPolyC entries."""
        n = self.n
        if self.exact:
            return [[ExactMPoly.from_coeffs([M[i][j] for M in self.matrices])
                     for j in range(n)] for i in range(n)]
        return [[UniPolyC([M[i][j] for M in self.matrices]) for j in range(n)]
                for i in range(n)]

    def numeric(self) -> "RationalSystem":
        numer = np.array([[[complex(x) for x in r] for r in M] for M in self.matrices])
        return RationalSystem(numer, np.array([1.0 + 0j]))

    def infinity_singular(self) -> bool:
        return True


@dataclass
class FuchsSystem:
    """x' = sum_j A_j / (t - t_j) x with distinct poles t_j."""

    residues: list
    poles: list
    exact: bool = True

    kind = "fuchs"

    def __post_init__(self):
        if len(self.residues) != len(self.poles) or not self.poles:
            raise ValueError("need one residue matrix per pole")
        self.residues = [_as_matrix(M, self.exact) for M in self.residues]
        conv = Fraction if self.exact else complex
        self.poles = [conv(p) for p in self.poles]
        scale = 1 + max(abs(p) for p in self.poles)
        for i in range(len(self.poles)):
            for j in range(i):
                d = abs(self.poles[i] - self.poles[j])
                if d == 0 or (not self.exact and d < POLE_TOL * scale):
                    raise ValueError(f"repeated pole {self.poles[i]}")

    @property
    def n(self) -> int:
        return len(self.residues[0])

    @property
    def m(self) -> int:
        return len(self.poles)

    def min_pole_distance(self) -> float:
        ps = self.poles
        return min((abs(complex(a) - complex(b)) for i, a in enumerate(ps) for b in ps[:i]),
                   default=float("inf"))

    def infinity_singular(self) -> bool:
        """t = infinity is singular iff the residues do not sum to zero."""
        n = self.n
        return any(sum(R[i][j] for R in self.residues) != 0
                   for i in range(n) for j in range(n))

    def numeric(self) -> "RationalSystem":
        numer, chi = fuchs_to_rational(self)
        return RationalSystem.from_ring(numer, chi)


@dataclass
class HypergeomSystem:
    """(t E - B) x' = C x."""

    B: list
    C: list
    exact: bool = True

    kind = "hypergeom"

    def __post_init__(self):
        self.B = _as_matrix(self.B, self.exact)
        self.C = _as_matrix(self.C, self.exact)
        if len(self.B) != len(self.C):
            raise ValueError("B and C must have the same size")

    @property
    def n(self) -> int:
        return len(self.B)

    def numeric(self) -> "RationalSystem":
        numer, chi = hypergeom_to_rational(self)
        return RationalSystem.from_ring(numer, chi)


@dataclass
class RationalSystem:
    """Numeric x' = N(t)/chi(t) x, the form consumed by the integrator.

    ``numer`` has shape (d + 1, n, n) with ``numer[k]`` the t^k coefficient;
    ``denom`` holds chi's coefficients low to high.
    """

    numer: np.ndarray
    denom: np.ndarray

    def __post_init__(self):
        self.numer = np.asarray(self.numer, dtype=complex)
        self.denom = np.asarray(self.denom, dtype=complex)
        if self.numer.ndim != 3 or self.numer.shape[1] != self.numer.shape[2]:
            raise ValueError("numer must have shape (d+1, n, n)")

    @property
    def n(self) -> int:
        return self.numer.shape[1]

    def poles(self) -> np.ndarray:
        c = np.trim_zeros(self.denom, "b")
        if len(c) <= 1:
            return np.zeros(0, dtype=complex)
        return np.roots(c[::-1])

    @classmethod
    def from_ring(cls, numer, chi) -> "RationalSystem":
        def coeffs(p):
            if isinstance(p, UniPolyC):
                return p.coeffs
            return np.array([complex(c) for c in p.univariate_coeffs()]) if not p.is_zero() \
                else np.zeros(0, dtype=complex)

        n = len(numer)
        d = max(len(coeffs(e)) for r in numer for e in r)
        arr = np.zeros((max(d, 1), n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                c = coeffs(numer[i][j])
                arr[: len(c), i, j] = c
        return cls(arr, coeffs(chi))


# -- parameter vectors and magnitudes ------------------------------------

def lambda_vector(system) -> list:
    """Ordered parameters: k-major, then row, then column."""
    if isinstance(system, PolySystem):
        return [x for M in system.matrices for r in M for x in r]
    if isinstance(system, FuchsSystem):
        return [x for M in system.residues for r in M for x in r] + list(system.poles)
    if isinstance(system, HypergeomSystem):
        return [x for r in system.B for x in r] + [x for r in system.C for x in r]
    raise TypeError(f"unknown system type {type(system).__name__}")


def matrix_norm(M, norm: str = "rowsum"):
    if norm == "rowsum":
        return max(sum(abs(x) for x in r) for r in M)
    if norm == "maxentry":
        return max(abs(x) for r in M for x in r)
    if norm == "frobenius":
        return float(np.sqrt(sum(abs(complex(x)) ** 2 for r in M for x in r)))
    raise ValueError(f"unknown norm {norm!r}; choose from {NORMS}")


def magnitude(system, norm: str = "rowsum"):
    if isinstance(system, PolySystem):
        return max(matrix_norm(M, norm) for M in system.matrices)
    if isinstance(system, FuchsSystem):
        return max(max(matrix_norm(M, norm) for M in system.residues),
                   max(abs(p) for p in system.poles))
    if isinstance(system, HypergeomSystem):
        return max(matrix_norm(system.B, norm), matrix_norm(system.C, norm))
    raise TypeError(f"unknown system type {type(system).__name__}")


def universal_matrix(n: int, m: int):
    """A(t, lambda) = sum_k (lambda_{ijk}) t^k over Z[t, l_1, ..., l_{n^2 m}]."""
    names = ("t",) + tuple(f"l_{i + 1}" for i in range(n * n * m))
    A = [[ExactMPoly.zero(names) for _ in range(n)] for _ in range(n)]
    for k in range(m):
        tk = ExactMPoly.variable(names, "t", k) if k else ExactMPoly.constant(names, 1)
        for i in range(n):
            for j in range(n):
                lam = ExactMPoly.variable(names, f"l_{k * n * n + i * n + j + 1}")
                A[i][j] = A[i][j] + lam * tk
    return A


# -- rational forms --------------------------------------------------------

def _ring_const(proto, c):
    return proto.const_like(c) if c != 0 else proto.zero_like()


def _t_linear(exact: bool, root):
    """t - root in the requested ring."""
    if exact:
        return ExactMPoly.from_coeffs([-Fraction(root), 1])
    return UniPolyC([-complex(root), 1.0])


def fuchs_to_rational(f: FuchsSystem):
    """(N, chi) with chi = prod (t - t_j), N = sum_j A_j prod_{i != j} (t - t_i)."""
    n = f.n
    lin = [_t_linear(f.exact, p) for p in f.poles]
    chi = lin[0].const_like(1)
    for l in lin:
        chi = chi * l
    zero = chi.zero_like()
    N = [[zero for _ in range(n)] for _ in range(n)]
    for j, R in enumerate(f.residues):
        others = chi.const_like(1)
        for i, l in enumerate(lin):
            if i != j:
                others = others * l
        for a in range(n):
            for b in range(n):
                if R[a][b] != 0:
                    N[a][b] = N[a][b] + others * _ring_const(chi, R[a][b])
    return N, chi


def _t_minus_B(h: HypergeomSystem):
    n = h.n
    t = _t_linear(h.exact, 0)
    return [[(t if i == j else t.zero_like()) - _ring_const(t, h.B[i][j])
             for j in range(n)] for i in range(n)]


def _adjugate(M):
    n = len(M)
    if n == 1:
        return [[M[0][0].const_like(1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            d = wedge(minor)
            adj[j][i] = d if (i + j) % 2 == 0 else -d
    return adj


def _matmul_const(P, C):
    """Polynomial matrix times constant matrix."""
    n = len(P)
    zero = P[0][0].zero_like()
    out = [[zero for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            acc = zero
            for k in range(n):
                if C[k][j] != 0 and not P[i][k].is_zero():
                    acc = acc + P[i][k] * _ring_const(zero, C[k][j])
            out[i][j] = acc
    return out


def hypergeom_to_rational(h: HypergeomSystem):
    """(adj(tE - B) C, det(tE - B)) with the adjugate identity checked exactly."""
    T = _t_minus_B(h)
    chi = wedge(T)
    adj = _adjugate(T)
    if h.exact:
        n = h.n
        for i in range(n):
            for j in range(n):
                acc = chi.zero_like()
                for k in range(n):
                    acc = acc + adj[i][k] * T[k][j]
                if acc != (chi if i == j else chi.zero_like()):
                    raise AssertionError("adjugate identity failed")
    return _matmul_const(adj, h.C), chi


def _clear_common_factor(a, chi, exact: bool, tol: float = 1e-9):
    """Divide the coefficients by their common factor.

    Exact: the monic gcd over Q[t], followed by clearing denominators and
    integer content.  Floating: the largest power of chi dividing every
    coefficient within ``tol``.
    """
    if exact:
        g = a[0].zero_like()
        for c in a:
            g = univariate_gcd(g, c)
        out = [univariate_divmod(c, g)[0] if not c.is_zero() else c for c in a]
        den = 1
        for c in out:
            for v in c.terms.values():
                den = den * Fraction(v).denominator // math.gcd(den, Fraction(v).denominator)
        out = [c.scale(den) for c in out]
        content = 0
        for c in out:
            if not c.is_zero():
                content = math.gcd(content, c.content())
        if content > 1:
            out = [c.scale(Fraction(1, content)) for c in out]
        return out, g
    factor = chi.const_like(1)
    if chi.degree < 1:
        return a, factor
    cur = list(a)
    while True:
        nxt = []
        for c in cur:
            if c.is_zero():
                nxt.append(c)
                continue
            q, r = np.polydiv(c.coeffs[::-1], chi.coeffs[::-1])
            if np.abs(r).sum() > tol * c.l1_norm():
                return cur, factor
            nxt.append(UniPolyC(np.atleast_1d(q)[::-1]))
        if all(c.is_zero() for c in nxt):
            return cur, factor
        cur = nxt
        factor = factor * chi


def _finish_rational(eta, chi, exact: bool, tau: float) -> PrincipalEquation:
    n = len(eta[0])
    rep = _degeneracy_from_rows(eta, n, tau, exact, "specialized")
    k = rep.order
    # xi_j = eta_j / chi^j, so sum a_j xi_{k-j} = 0 with a_j = atilde_j chi^(k-j)
    a = [c * chi ** (k - j) for j, c in enumerate(rep.equation.a)]
    a, factor = _clear_common_factor(a, chi, exact)
    return PrincipalEquation(k, a, "specialized", 1, factor)


def rational_reduce(N, chi, tau: float = DEFAULT_TAU) -> PrincipalEquation:
    """Scalar equation for x_1 of x' = N/chi x with polynomial coefficients."""
    exact = isinstance(chi, ExactMPoly)
    eta = rational_chain(N, chi)
    return _finish_rational(eta, chi, exact, tau)


def fuchs_reduce(f: FuchsSystem, tau: float = DEFAULT_TAU) -> PrincipalEquation:
    N, chi = fuchs_to_rational(f)
    return rational_reduce(N, chi, tau)


def hypergeom_reduce(h: HypergeomSystem, tau: float = DEFAULT_TAU) -> PrincipalEquation:
    """Chain run on the pair (tE - B, C) without forming adj(tE - B) C.

    eta_{k+1} = chi eta_k' - k chi' eta_k + (eta_k adj(tE - B)) C.
    """
    T = _t_minus_B(h)
    chi = wedge(T)
    adj = _adjugate(T)
    n = h.n
    zero = chi.zero_like()
    dchi = chi.partial_t()
    eta = [[chi.const_like(1)] + [zero] * (n - 1)]
    for k in range(n):
        prev = eta[-1]
        row = [zero] * n
        for j in range(n):
            for i in range(n):
                if not prev[i].is_zero() and not adj[i][j].is_zero():
                    row[j] = row[j] + prev[i] * adj[i][j]
        mixed = [zero] * n
        for j in range(n):
            for i in range(n):
                if h.C[i][j] != 0 and not row[i].is_zero():
                    mixed[j] = mixed[j] + row[i] * _ring_const(chi, h.C[i][j])
        nxt = []
        for j in range(n):
            acc = chi * prev[j].partial_t()
            if k:
                acc = acc - dchi * prev[j] * chi.const_like(k)
            nxt.append(acc + mixed[j])
        eta.append(nxt)
    exact = h.exact
    return _finish_rational(eta, chi, exact, tau)


# -- singular points -------------------------------------------------------

def singular_points(system) -> np.ndarray:
    if isinstance(system, FuchsSystem):
        return np.array([complex(p) for p in system.poles])
    if isinstance(system, HypergeomSystem):
        return np.linalg.eigvals(np.array([[complex(x) for x in r] for r in system.B]))
    if isinstance(system, PolySystem):
        return np.zeros(0, dtype=complex)
    raise TypeError(f"unknown system type {type(system).__name__}")


def singularity_clearance(system, center: complex, r: float,
                          factor: float = CLEARANCE_FACTOR) -> dict:
    """Clear iff no singular point lies in the closed disk of radius factor * r."""
    if r <= 0:
        raise ValueError("radius must be positive")
    pts = singular_points(system)
    if pts.size == 0:
        return {"status": "clear", "factor": factor}
    dist = np.abs(pts - complex(center))
    dmin = float(dist.min())
    if dmin > factor * r:
        return {"status": "clear", "factor": factor, "distance": dmin}
    return {"status": "blocked", "factor": factor, "distance": dmin}


# -- serialization ---------------------------------------------------------

def _entry_to_json(x, exact: bool):
    if exact:
        return {"re": str(Fraction(x)), "im": "0"}
    x = complex(x)
    return {"re": x.real, "im": x.imag}


def _entry_from_json(obj):
    """Return (value, is_exact) for one serialized entry."""
    if isinstance(obj, dict):
        re, im = obj.get("re", None), obj.get("im", None)
    else:
        re, im = obj, None
    if isinstance(re, str):
        if im is not None and not isinstance(im, str):
            raise ValueError("exact and float fields cannot be mixed")
        if im is not None and Fraction(im) != 0:
            raise ValueError("exact entries must be real rationals")
        return Fraction(re), True
    if isinstance(im, str) or isinstance(re, bool) or isinstance(im, bool) or re is None:
        raise ValueError(f"malformed entry {obj!r}")
    return complex(float(re), float(im or 0.0)), False


def _parse_all(values):
    parsed = [_entry_from_json(v) for v in values]
    kinds = {e for _, e in parsed}
    if len(kinds) > 1:
        raise ValueError("exact and float fields are mutually exclusive in one document")
    return [v for v, _ in parsed], (kinds.pop() if kinds else True)


def system_to_json(system) -> dict:
    ex = system.exact
    mat = lambda M: [[_entry_to_json(x, ex) for x in r] for r in M]  # noqa: E731
    if isinstance(system, PolySystem):
        return {"kind": "poly", "n": system.n, "m": system.m,
                "matrices": [mat(M) for M in system.matrices]}
    if isinstance(system, FuchsSystem):
        return {"kind": "fuchs", "n": system.n, "m": system.m,
                "residues": [mat(M) for M in system.residues],
                "poles": [_entry_to_json(p, ex) for p in system.poles]}
    if isinstance(system, HypergeomSystem):
        return {"kind": "hypergeom", "n": system.n, "B": mat(system.B), "C": mat(system.C)}
    raise TypeError(f"unknown system type {type(system).__name__}")


def system_from_json(obj: dict):
    kind = obj.get("kind")
    n = obj.get("n")

    def grab(mats):
        flat = [x for M in mats for r in M for x in r]
        vals, exact = _parse_all(flat)
        out, it = [], iter(vals)
        for M in mats:
            out.append([[next(it) for _ in r] for r in M])
        return out, exact

    if kind == "poly":
        mats, exact = grab(obj["matrices"])
        sys_ = PolySystem(mats, exact)
        if "m" in obj and obj["m"] != sys_.m:
            raise ValueError("m does not match the number of matrices")
    elif kind == "fuchs":
        mats, e1 = grab(obj["residues"])
        poles, e2 = _parse_all(obj["poles"])
        if e1 != e2:
            raise ValueError("exact and float fields are mutually exclusive in one document")
        sys_ = FuchsSystem(mats, poles, e1)
    elif kind == "hypergeom":
        (B, C), exact = grab([obj["B"], obj["C"]])
        sys_ = HypergeomSystem(B, C, exact)
    else:
        raise ValueError(f"unknown system kind {kind!r}")
    if n is not None and n != sys_.n:
        raise ValueError("n does not match the matrix size")
    return sys_


# -- random instances ------------------------------------------------------

def random_poly_system(rng: random.Random, n: int, m: int, M: int = 1) -> PolySystem:
    """Integer coefficient matrices with entries drawn uniformly from [-M, M]."""
    return PolySystem([[[rng.randint(-M, M) for _ in range(n)] for _ in range(n)]
                       for _ in range(m)], exact=True)


def random_integer_family(rng: random.Random, n: int, m: int, n_symbols: int = 3):
    """Random sub-family of the universal system.

    A few coefficient slots lambda_{ijk} stay symbolic, the rest are fixed to
    integers in {-1, 0, 1}.  Such a specialization cannot increase the l1
    norm or the degree of anything derived from the universal system, so the
    universal certificates apply to it verbatim.
    """
    slots = [(k, i, j) for k in range(m) for i in range(n) for j in range(n)]
    n_symbols = min(n_symbols, len(slots))
    chosen = rng.sample(slots, n_symbols)
    names = ("t",) + tuple(f"l_{k * n * n + i * n + j + 1}" for (k, i, j) in sorted(chosen))
    sym = {s: f"l_{s[0] * n * n + s[1] * n + s[2] + 1}" for s in chosen}
    A = [[ExactMPoly.zero(names) for _ in range(n)] for _ in range(n)]
    for (k, i, j) in slots:
        tk = ExactMPoly.variable(names, "t", k) if k else ExactMPoly.constant(names, 1)
        if (k, i, j) in sym:
            c = ExactMPoly.variable(names, sym[(k, i, j)])
        else:
            c = ExactMPoly.constant(names, rng.choice((-1, 0, 0, 1)))
        A[i][j] = A[i][j] + c * tk
    return A
