"""One-parameter families: truncated series, local Smith form, annihilators.

Series carry an absolute precision: ``prec = N`` means the coefficients of
z^0..z^(N-1) are known and everything from z^N on is unknown.  ``prec=None``
marks an exact polynomial.  Precision is propagated the p-adic way, so a
quantity is never reported beyond what its inputs determine.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Mapping, Sequence

from .poly import ExactMPoly
from .reduce import _exact_pivots

__all__ = [
    "TruncationInsufficient",
    "DependentInputs",
    "Series",
    "EpsVector",
    "SpanResult",
    "SmithLocalForm",
    "DiffOpFamily",
    "VanishingOrders",
    "constant_rank_span",
    "smith_local_form",
    "check_smith",
    "minor_orders",
    "first_order_annihilator",
    "annihilating_operator",
    "wronskian_operator",
    "vanishing_orders",
    "restrict_to_arc",
    "EPS_VARS",
]

EPS_VARS = ("t", "eps")
_INF = float("inf")


class TruncationInsufficient(ArithmeticError):
    pass


class DependentInputs(ValueError):
    pass


class Series:
    """Power series in one variable with exact rational coefficients."""

    __slots__ = ("c", "prec")

    def __init__(self, coeffs: Sequence = (), prec: int | None = None):
        c = [Fraction(x) for x in coeffs]
        if prec is not None:
            if prec < 0:
                raise ValueError("precision must be nonnegative")
            c = c[:prec]
        while c and c[-1] == 0:
            c.pop()
        self.c = c
        self.prec = prec

    @classmethod
    def coerce(cls, x, prec: int | None = None) -> "Series":
        if isinstance(x, Series):
            if prec is None or (x.prec is not None and x.prec <= prec):
                return x
            return cls(x.c, prec)
        if isinstance(x, (list, tuple)):
            return cls(x, prec)
        return cls([x], prec)

    # -- measures
    @property
    def exact(self) -> bool:
        return self.prec is None

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient; None if none is known."""
        for i, x in enumerate(self.c):
            if x != 0:
                return i
        return None

    def _vfloor(self) -> float:
        v = self.valuation()
        if v is not None:
            return v
        return _INF if self.prec is None else self.prec

    def is_exact_zero(self) -> bool:
        return self.prec is None and not self.c

    def is_zero_to_prec(self) -> bool:
        return not self.c

    def const(self) -> Fraction:
        return self.c[0] if self.c else Fraction(0)

    # -- arithmetic
    @staticmethod
    def _pmin(a, b):
        if a is None:
            return b
        if b is None:
            return a
        return min(a, b)

    def __add__(self, other):
        other = Series.coerce(other)
        prec = self._pmin(self.prec, other.prec)
        n = max(len(self.c), len(other.c))
        if prec is not None:
            n = min(n, prec)
        out = [(self.c[i] if i < len(self.c) else 0) + (other.c[i] if i < len(other.c) else 0)
               for i in range(n)]
        return Series(out, prec)

    __radd__ = __add__

    def __neg__(self):
        return Series([-x for x in self.c], self.prec)

    def __sub__(self, other):
        return self + (-Series.coerce(other))

    def __rsub__(self, other):
        return Series.coerce(other) - self

    def __mul__(self, other):
        other = Series.coerce(other)
        if self.prec is None and other.prec is None:
            prec = None
        else:
            cands = []
            if self.prec is not None:
                cands.append(self.prec + other._vfloor())
            if other.prec is not None:
                cands.append(other.prec + self._vfloor())
            prec = min(cands)
            prec = None if prec == _INF else int(prec)
        a, b = self.c, other.c
        if not a or not b:
            return Series([], prec)
        n = len(a) + len(b) - 1
        if prec is not None:
            n = min(n, prec)
        out = [Fraction(0)] * max(n, 0)
        for i, x in enumerate(a):
            if x == 0 or i >= n:
                continue
            for j in range(min(len(b), n - i)):
                out[i + j] += x * b[j]
        return Series(out, prec)

    __rmul__ = __mul__

    def shift_down(self, k: int) -> "Series":
        """Divide by z^k; the first k coefficients must be known zeros."""
        if k == 0:
            return self
        if any(x != 0 for x in self.c[:k]):
            raise ArithmeticError("series not divisible by the requested power")
        return Series(self.c[k:], None if self.prec is None else self.prec - k)

    def inverse(self, N: int) -> "Series":
        """Reciprocal of a unit, to precision min(N, own precision)."""
        if not self.c or self.c[0] == 0:
            raise ZeroDivisionError("not a unit")
        prec = N if self.prec is None else min(N, self.prec)
        inv0 = 1 / self.c[0]
        out = [inv0]
        for k in range(1, prec):
            s = sum(self.c[i] * out[k - i] for i in range(1, min(k, len(self.c) - 1) + 1))
            out.append(-s * inv0)
        return Series(out, prec)

    def truncate(self, N: int) -> "Series":
        return Series(self.c, N if self.prec is None else min(N, self.prec))

    def at(self, z) -> Fraction:
        """Value of the known part at z (exact only for exact series)."""
        acc = Fraction(0)
        for x in reversed(self.c):
            acc = acc * z + x
        return acc

    def __eq__(self, other):
        other = Series.coerce(other)
        return self.c == other.c and self.prec == other.prec

    def __hash__(self):
        return hash((tuple(self.c), self.prec))

    def __repr__(self):
        tail = "" if self.prec is None else f" + O(z^{self.prec})"
        return f"Series({[str(x) for x in self.c]}{tail})"

    def to_json(self) -> dict:
        return {"coeffs": [str(x) for x in self.c], "eps_order": self.prec}

    @classmethod
    def from_json(cls, obj) -> "Series":
        return cls([Fraction(x) for x in obj["coeffs"]], obj.get("eps_order"))


def _det(M: list) -> Series:
    """Determinant by cofactor expansion with memoized minors."""
    n = len(M)
    if n == 0:
        return Series([1])
    memo: dict = {}

    def rec(row: int, cols: tuple) -> Series:
        if row == n:
            return Series([1])
        key = cols
        if key in memo:
            return memo[key]
        acc = Series([])
        for idx, c in enumerate(cols):
            e = M[row][c]
            if e.is_exact_zero():
                continue
            sub = rec(row + 1, cols[:idx] + cols[idx + 1:])
            term = e * sub
            acc = acc - term if idx % 2 else acc + term
        memo[key] = acc
        return acc

    return rec(0, tuple(range(n)))


def _adjugate(M: list) -> list:
    n = len(M)
    if n == 1:
        return [[Series([1])]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[M[r][c] for c in range(n) if c != j] for r in range(n) if r != i]
            d = _det(minor)
            adj[j][i] = -d if (i + j) % 2 else d
    return adj


# -- constant-rank span -----------------------------------------------------------

@dataclass
class EpsVector:
    entries: tuple

    def __init__(self, entries, prec: int | None = None):
        self.entries = tuple(Series.coerce(e, prec) for e in entries)

    @property
    def prec(self) -> int | None:
        ps = [e.prec for e in self.entries if e.prec is not None]
        return min(ps) if ps else None

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def at(self, z) -> list:
        return [e.at(z) for e in self.entries]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries], "eps_order": self.prec}

    @classmethod
    def from_json(cls, obj) -> "EpsVector":
        return cls([Series.from_json(e) for e in obj["entries"]])


@dataclass
class SpanResult:
    vectors: list
    rank: int
    orders: list
    pivots: list
    verified: bool | None


def constant_rank_span(vectors: Sequence, samples: int = 20, seed: int = 0) -> SpanResult:
    """Vectors w_1..w_k spanning span{v_j(eps)} for eps != 0, independent at eps = 0.

    Each new v is projected onto the current span along the coordinate
    complement of the pivot coordinates; the remainder, multiplied by the
    determinant of the pivot block (a unit) to stay polynomial, is divided by
    its largest power of eps.
    """
    vs = [v if isinstance(v, EpsVector) else EpsVector(v) for v in vectors]
    ws: list = []
    piv: list = []
    orders: list = []
    for v in vs:
        if not ws:
            r = list(v.entries)
        else:
            WP = [[w[p] for w in ws] for p in piv]
            det = _det(WP)
            adj = _adjugate(WP)
            vp = [v[p] for p in piv]
            coef = [sum((adj[j][i] * vp[i] for i in range(len(piv))), Series([]))
                    for j in range(len(ws))]
            r = [det * v[i] - sum((ws[j][i] * coef[j] for j in range(len(ws))), Series([]))
                 for i in range(len(v))]
        if all(e.is_exact_zero() for e in r):
            continue
        vals = [e.valuation() for e in r if e.valuation() is not None]
        if not vals:
            raise TruncationInsufficient("remainder vanishes to the full truncation order")
        nu = min(vals)
        w = EpsVector([e.shift_down(nu) for e in r])
        lead = next(i for i, e in enumerate(w.entries) if e.const() != 0)
        ws.append(w)
        piv.append(lead)
        orders.append(nu)
    verified = None
    if all(v.prec is None for v in vs):
        verified = _verify_span(vs, ws, samples, seed)
    return SpanResult(ws, len(ws), orders, piv, verified)


def _rank(rows: list) -> int:
    if not rows or not rows[0]:
        return 0
    return len(_exact_pivots(rows))


def _verify_span(vs, ws, samples, seed) -> bool:
    rng = random.Random(seed)
    k = len(ws)
    if k and _rank([w.at(0) for w in ws]) != k:
        return False
    for _ in range(samples):
        z = Fraction(rng.choice([-1, 1]) * rng.randint(1, 997), rng.randint(1, 997))
        V = [v.at(z) for v in vs]
        W = [w.at(z) for w in ws]
        rv, rw = _rank(V), _rank(W)
        if rv != rw or (W and _rank(V + W) != rv):
            return False
    return True


# -- local Smith form ---------------------------------------------------------------

@dataclass
class SmithLocalForm:
    U: list
    V: list
    orders: list
    shape: tuple
    N: int

    @property
    def rank(self) -> int:
        return len(self.orders)

    def D(self) -> list:
        n, m = self.shape
        out = [[Series([], self.N) for _ in range(m)] for _ in range(n)]
        for i, nu in enumerate(self.orders):
            out[i][i] = Series([0] * nu + [1], self.N)
        return out

    def to_json(self) -> dict:
        return {
            "shape": list(self.shape), "N": self.N, "rank": self.rank,
            "orders": list(self.orders),
            "U": [[e.to_json() for e in row] for row in self.U],
            "V": [[e.to_json() for e in row] for row in self.V],
        }

    @classmethod
    def from_json(cls, obj) -> "SmithLocalForm":
        return cls([[Series.from_json(e) for e in row] for row in obj["U"]],
                   [[Series.from_json(e) for e in row] for row in obj["V"]],
                   list(obj["orders"]), tuple(obj["shape"]), obj["N"])


def _matrix(X, N: int | None) -> list:
    return [[Series.coerce(e, N) for e in row] for row in X]


def _poly_rank(X: list) -> int:
    """Rank over Q(z) of a matrix of exact polynomials (enough evaluation points)."""
    n = len(X)
    m = len(X[0]) if n else 0
    if not n or not m:
        return 0
    bound = sum(max((len(e.c) for e in row), default=0) for row in X) + 1
    best = 0
    for z in range(bound + 1):
        best = max(best, _rank([[e.at(Fraction(z)) for e in row] for row in X]))
        if best == min(n, m):
            break
    return best


def smith_local_form(X, N: int = 32) -> SmithLocalForm:
    """X = U D V to order N with U(0), V(0) invertible and D = diag(z^nu_j)."""
    exact_input = all(Series.coerce(e).exact for row in X for e in row)
    orig = _matrix(X, None)
    W = _matrix(X, N)
    n = len(W)
    m = len(W[0]) if n else 0
    U = [[Series([1] if i == j else [], N) for j in range(n)] for i in range(n)]
    V = [[Series([1] if i == j else [], N) for j in range(m)] for i in range(m)]
    orders: list = []
    for s in range(min(n, m)):
        best = None
        for i in range(s, n):
            for j in range(s, m):
                v = W[i][j].valuation()
                if v is not None and (best is None or v < best[0]):
                    best = (v, i, j)
        if best is None:
            # the remaining block vanishes to order N; for exact input that
            # is only acceptable when the true rank is s
            if exact_input and _poly_rank(orig) > s:
                raise TruncationInsufficient("pivot order reaches the truncation order")
            break
        nu, pi, pj = best
        if pi != s:
            W[s], W[pi] = W[pi], W[s]
            for row in U:
                row[s], row[pi] = row[pi], row[s]
        if pj != s:
            for row in W:
                row[s], row[pj] = row[pj], row[s]
            V[s], V[pj] = V[pj], V[s]
        unit = W[s][s].shift_down(nu)
        uinv = unit.inverse(N)
        for i in range(s + 1, n):
            if W[i][s].is_zero_to_prec():
                continue
            c = W[i][s].shift_down(nu) * uinv
            W[i] = [W[i][j] - c * W[s][j] for j in range(m)]
            for row in U:
                row[s] = row[s] + c * row[i]
        for j in range(s + 1, m):
            if W[s][j].is_zero_to_prec():
                continue
            c = W[s][j].shift_down(nu) * uinv
            for i in range(n):
                W[i][j] = W[i][j] - c * W[i][s]
            V[s] = [V[s][k] + c * V[j][k] for k in range(m)]
        W[s][s] = Series([0] * nu + [1], N)
        V[s] = [unit * e for e in V[s]]
        orders.append(nu)
    return SmithLocalForm(U, V, orders, (n, m), N)


def _matmul(A: list, B: list) -> list:
    return [[sum((A[i][k] * B[k][j] for k in range(len(B))), Series([]))
             for j in range(len(B[0]))] for i in range(len(A))]


def minor_orders(X, N: int) -> list:
    """For j = 1..min(n,m), the least z-order among all j x j minors (None if >= N)."""
    M = _matrix(X, N)
    n = len(M)
    m = len(M[0]) if n else 0
    out = []
    for j in range(1, min(n, m) + 1):
        best = None
        for rows in combinations(range(n), j):
            for cols in combinations(range(m), j):
                d = _det([[M[r][c] for c in cols] for r in rows])
                v = d.valuation()
                if v is not None and v < N and (best is None or v < best):
                    best = v
        out.append(best)
    return out


def check_smith(X, form: SmithLocalForm) -> dict:
    """The three defining properties, each checked exactly to order N."""
    N = form.N
    Xs = _matrix(X, N)
    n, m = form.shape
    R = _matmul(_matmul(form.U, form.D()), form.V)
    recon = all((R[i][j] - Xs[i][j]).truncate(N).is_zero_to_prec()
                for i in range(n) for j in range(m))
    U0 = [[e.const() for e in row] for row in form.U]
    V0 = [[e.const() for e in row] for row in form.V]
    u_ok = _rank(U0) == n if n else True
    v_ok = _rank(V0) == m if m else True
    mins = minor_orders(X, N)
    sums = []
    acc = 0
    for nu in form.orders:
        acc += nu
        sums.append(acc)
    # minors are only known mod z^N, so orders >= N read as None
    expected = [s if s < N else None for s in sums] + [None] * (len(mins) - len(sums))
    return {
        "reconstruction": recon,
        "U0_invertible": u_ok,
        "V0_invertible": v_ok,
        "divisor_orders": mins == expected,
        "minor_orders": mins,
        "partial_sums": sums,
    }


# -- operator families -----------------------------------------------------------------

def _as_family_poly(f) -> ExactMPoly:
    if isinstance(f, ExactMPoly):
        if f.vars == EPS_VARS:
            return f
        if f.vars == ("t",):
            return f.compose({}, EPS_VARS)
        if f.vars == ("eps",):
            return f.compose({}, EPS_VARS)
        raise ValueError(f"expected a polynomial in t and eps, got {f.vars}")
    return ExactMPoly.constant(EPS_VARS, f)


def _trunc_eps(p: ExactMPoly, N: int | None) -> ExactMPoly:
    if N is None:
        return p
    return ExactMPoly(p.vars, {e: c for e, c in p.terms.items() if e[1] < N})


@dataclass
class DiffOpFamily:
    """L = a_0 d^n + ... + a_n with a_j polynomial in (t, eps)."""

    coeffs: list
    eps_order: int | None = None
    factors: list = field(default_factory=list)

    def __post_init__(self):
        self.coeffs = [_trunc_eps(_as_family_poly(a), self.eps_order) for a in self.coeffs]
        if not self.coeffs or self.coeffs[0].is_zero():
            raise ValueError("leading coefficient vanishes identically")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def apply(self, f) -> ExactMPoly:
        f = _as_family_poly(f)
        n = self.order
        out = f.zero_like()
        d = f
        for k in range(n + 1):
            out = out + self.coeffs[n - k] * d
            d = d.partial("t")
        return _trunc_eps(out, self.eps_order)

    def compose_left(self, g: ExactMPoly, eps_order: int | None = None) -> "DiffOpFamily":
        """(g d - g') o L."""
        g = _as_family_poly(g)
        dg = g.partial("t")
        a = self.coeffs + [g.zero_like()]
        b = []
        for i in range(len(a)):
            term = g * a[i]
            if i >= 1:
                term = term + g * a[i - 1].partial("t") - dg * a[i - 1]
            b.append(term)
        return DiffOpFamily(b, eps_order, self.factors + [g])

    def leading_at_zero(self) -> ExactMPoly:
        return self.coeffs[0].substitute({"eps": 0})

    def to_json(self) -> dict:
        return {"order": self.order, "eps_order": self.eps_order,
                "coeffs": [a.to_json() for a in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "DiffOpFamily":
        return cls([ExactMPoly.from_json(a) for a in obj["coeffs"]], obj.get("eps_order"))


def first_order_annihilator(g, eps_order: int | None = None) -> DiffOpFamily:
    """g d - g', which kills g."""
    g = _trunc_eps(_as_family_poly(g), eps_order)
    if g.is_zero():
        raise ValueError("cannot annihilate the zero function")
    return DiffOpFamily([g, -g.partial("t")], eps_order, [g])


def _eps_split(p: ExactMPoly):
    nu = p.valuation_in("eps")
    if nu is None:
        return None, None
    return nu, p.shift_down("eps", nu)


def annihilating_operator(fs: Sequence, eps_order: int | None = None) -> DiffOpFamily:
    """Operator killing f_1..f_n, with leading coefficient nonzero at eps = 0.

    Inductive: write L_k f_{k+1} = eps^nu g with g(., 0) != 0 and set
    L_{k+1} = (g d - g') o L_k.  With ``eps_order`` = N every coefficient is
    reduced mod eps^N and the usable precision drops by nu at each division.
    """
    fs = [_as_family_poly(f) for f in fs]
    if not fs:
        raise ValueError("need at least one function")
    prec = eps_order
    L = None
    for k, f in enumerate(fs):
        h = _trunc_eps(f, prec) if L is None else L.apply(f)
        h = _trunc_eps(h, prec)
        nu, g = _eps_split(h)
        if nu is None:
            if prec is None:
                raise DependentInputs(f"function {k + 1} depends on the previous ones")
            raise TruncationInsufficient("remainder vanishes to the truncation order")
        if prec is not None:
            prec -= nu
            if prec <= 0:
                raise TruncationInsufficient("precision exhausted")
            g = _trunc_eps(g, prec)
        if L is None:
            L = first_order_annihilator(g, prec)
        else:
            L = DiffOpFamily(L.coeffs, prec, L.factors).compose_left(g, prec)
    return L


def wronskian_operator(fs: Sequence) -> list:
    """Coefficients (of y^(n), ..., y) of det[y, f_1..f_n] over derivative rows."""
    fs = [_as_family_poly(f) for f in fs]
    n = len(fs)
    rows = []
    cur = list(fs)
    for _ in range(n + 1):
        rows.append(cur)
        cur = [p.partial("t") for p in cur]
    coeffs = []
    for k in range(n, -1, -1):
        minor = [rows[r] for r in range(n + 1) if r != k]
        d = _poly_det(minor)
        coeffs.append(-d if k % 2 else d)
    return coeffs


def _poly_det(M: list) -> ExactMPoly:
    n = len(M)
    if n == 0:
        return ExactMPoly.constant(EPS_VARS, 1)
    memo: dict = {}

    def rec(row, cols):
        if row == n:
            return ExactMPoly.constant(EPS_VARS, 1)
        if cols in memo:
            return memo[cols]
        acc = ExactMPoly.zero(EPS_VARS)
        for idx, c in enumerate(cols):
            e = M[row][c]
            if e.is_zero():
                continue
            term = e * rec(row + 1, cols[:idx] + cols[idx + 1:])
            acc = acc - term if idx % 2 else acc + term
        memo[cols] = acc
        return acc

    return rec(0, tuple(range(n)))


# -- vanishing orders -----------------------------------------------------------------

@dataclass
class VanishingOrders:
    orders: list
    ratios: list
    verdict: bool

    def to_json(self) -> dict:
        def enc(x):
            if x is None:
                return "inf"
            return x

        def rat(x):
            if x == _INF:
                return "inf"
            return str(x)

        return {"orders": [enc(x) for x in self.orders],
                "ratios": [rat(x) for x in self.ratios], "verdict": self.verdict}


def vanishing_orders(op: DiffOpFamily) -> VanishingOrders:
    """eps-orders nu_j of each coefficient and the limits of b_j / b_0 as eps -> 0.

    ``None`` stands for an identically vanishing coefficient (infinite order).
    """
    orders = []
    lead_norms = []
    for p in op.coeffs:
        nu = p.valuation_in("eps")
        if nu is None:
            if op.eps_order is not None:
                raise TruncationInsufficient("coefficient vanishes to the truncation order")
            orders.append(None)
            lead_norms.append(Fraction(0))
            continue
        orders.append(nu)
        lead_norms.append(Fraction(p.coefficient_in("eps", nu).l1_norm()))
    nu0 = orders[0]
    ratios = []
    for nu, b in zip(orders, lead_norms):
        if nu is None or nu > nu0:
            ratios.append(Fraction(0))
        elif nu == nu0:
            ratios.append(b / lead_norms[0])
        else:
            ratios.append(_INF)
    verdict = all(nu is None or nu >= nu0 for nu in orders)
    return VanishingOrders(orders, ratios, verdict)


def restrict_to_arc(eq, arc: Mapping[str, ExactMPoly]) -> DiffOpFamily:
    """Substitute lambda = lambda(eps) into an equation with parameters.

    ``arc`` maps parameter names to polynomials over (t, eps) or (eps,).
    """
    images = {k: _as_family_poly(v) for k, v in arc.items()}
    params = [v for v in eq.a[0].vars if v != "t"]
    missing = [v for v in params if v not in images]
    if missing:
        raise ValueError(f"arc does not cover parameters {missing}")
    coeffs = [p.compose(images, EPS_VARS) for p in eq.a]
    return DiffOpFamily(coeffs)
