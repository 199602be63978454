"""Exact multivariate and complex univariate polynomials with the l1 norm.

Two concrete rings share one duck-typed interface (``+``, ``-``, ``*``,
``partial_t``, ``is_zero``, ``zero_like``, ``const_like``) so that the
reduction code can run unchanged over Z[t, lambda] or C[t].
"""
from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "ExactMPoly",
    "UniPolyC",
    "VariableMismatch",
    "l1_norm",
    "mul",
    "add",
    "partial_t",
    "specialize",
    "eval_circle",
    "certified_min_modulus",
    "univariate_gcd",
]


class VariableMismatch(ValueError):
    """Raised when two exact polynomials live over different variable lists."""


def _norm_coeff(c):
    if isinstance(c, Fraction):
        return c.numerator if c.denominator == 1 else c
    if isinstance(c, int):
        return c
    if isinstance(c, Rational):
        return _norm_coeff(Fraction(c))
    raise TypeError(f"exact coefficient expected, got {type(c).__name__}")


def _grlex_key(exp):
    # graded lex with t (index 0) heaviest; higher monomials first
    return (-sum(exp), tuple(-e for e in exp))


class ExactMPoly:
    """Polynomial over Q in an ordered variable list, ``t`` first.

    Terms are kept in a dict ``{exponent tuple: coefficient}`` where each
    coefficient is an ``int`` when integral and a ``Fraction`` otherwise.
    Zero coefficients are never stored.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Sequence[str], terms: Mapping[tuple, object] | None = None):
        self.vars = tuple(vars)
        nv = len(self.vars)
        clean = {}
        if terms:
            for exp, c in terms.items():
                exp = tuple(int(e) for e in exp)
                if len(exp) != nv:
                    raise ValueError(f"exponent {exp} does not match {nv} variables")
                if any(e < 0 for e in exp):
                    raise ValueError(f"negative exponent {exp}")
                c = _norm_coeff(c)
                if c != 0:
                    clean[exp] = c
        self.terms = clean

    # -- constructors -------------------------------------------------
    @classmethod
    def _raw(cls, vars, terms):
        obj = cls.__new__(cls)
        obj.vars = vars
        obj.terms = terms
        return obj

    @classmethod
    def zero(cls, vars):
        return cls._raw(tuple(vars), {})

    @classmethod
    def constant(cls, vars, c):
        vars = tuple(vars)
        return cls(vars, {(0,) * len(vars): c})

    @classmethod
    def variable(cls, vars, name, power=1):
        vars = tuple(vars)
        exp = [0] * len(vars)
        exp[vars.index(name)] = power
        return cls(vars, {tuple(exp): 1})

    @classmethod
    def from_coeffs(cls, coeffs, vars=("t",)):
        """Univariate polynomial in ``vars[0]`` from a low-to-high coefficient list."""
        vars = tuple(vars)
        pad = (0,) * (len(vars) - 1)
        return cls(vars, {(k,) + pad: c for k, c in enumerate(coeffs)})

    def zero_like(self):
        return ExactMPoly._raw(self.vars, {})

    def const_like(self, c):
        return ExactMPoly.constant(self.vars, c)

    # -- predicates and measures --------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def integral(self) -> bool:
        return all(isinstance(c, int) for c in self.terms.values())

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def degree_in(self, var) -> int:
        i = var if isinstance(var, int) else self.vars.index(var)
        return max((e[i] for e in self.terms), default=-1)

    def valuation_in(self, var) -> int | None:
        """Lowest power of ``var`` dividing every term; None for zero."""
        i = var if isinstance(var, int) else self.vars.index(var)
        return min((e[i] for e in self.terms), default=None)

    def l1_norm(self):
        return sum((abs(c) for c in self.terms.values()), 0)

    def sum_sq(self):
        return sum((c * c for c in self.terms.values()), 0)

    def content(self) -> int:
        """gcd of the coefficients (integral polynomials only); 0 for zero."""
        if not self.integral:
            raise ValueError("content is defined for integral polynomials only")
        g = 0
        for c in self.terms.values():
            g = math.gcd(g, c)
        return g

    # -- arithmetic ----------------------------------------------------
    def _check(self, other):
        if self.vars != other.vars:
            raise VariableMismatch(f"{self.vars} != {other.vars}")

    def _coerce(self, other):
        if isinstance(other, ExactMPoly):
            self._check(other)
            return other
        if isinstance(other, (int, Fraction)):
            return self.const_like(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e, 0) + c
            if s:
                out[e] = _norm_coeff(s)
            else:
                out.pop(e, None)
        return ExactMPoly._raw(self.vars, out)

    __radd__ = __add__

    def __neg__(self):
        return ExactMPoly._raw(self.vars, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self.terms or not other.terms:
            return self.zero_like()
        out: dict = {}
        get = out.get
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = get(e, 0) + c1 * c2
        return ExactMPoly._raw(
            self.vars, {e: _norm_coeff(c) for e, c in out.items() if c}
        )

    __rmul__ = __mul__

    def scale(self, c):
        c = _norm_coeff(c)
        if c == 0:
            return self.zero_like()
        return ExactMPoly._raw(self.vars, {e: _norm_coeff(v * c) for e, v in self.terms.items()})

    def __pow__(self, k: int):
        out = self.const_like(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def partial(self, var):
        i = var if isinstance(var, int) else self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = e[:i] + (e[i] - 1,) + e[i + 1:]
                out[ne] = c * e[i]
        return ExactMPoly._raw(self.vars, out)

    def partial_t(self):
        return self.partial(0)

    def shift_down(self, var, k: int):
        """Divide by ``var**k``; every term must be divisible."""
        i = var if isinstance(var, int) else self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i] < k:
                raise ValueError(f"term {e} not divisible by {self.vars[i]}^{k}")
            out[e[:i] + (e[i] - k,) + e[i + 1:]] = c
        return ExactMPoly._raw(self.vars, out)

    def __eq__(self, other):
        if isinstance(other, ExactMPoly):
            return self.vars == other.vars and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == self.const_like(other)
        return NotImplemented

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # -- substitution --------------------------------------------------
    def coefficient_in(self, var, k: int) -> "ExactMPoly":
        """Coefficient of ``var**k`` as a polynomial over the same variables."""
        i = var if isinstance(var, int) else self.vars.index(var)
        out = {}
        for e, c in self.terms.items():
            if e[i] == k:
                out[e[:i] + (0,) + e[i + 1:]] = c
        return ExactMPoly._raw(self.vars, out)

    def substitute(self, values: Mapping[str, object]) -> "ExactMPoly":
        """Substitute exact rationals for some variables, dropping them."""
        idx = [self.vars.index(v) for v in values]
        keep = [i for i in range(len(self.vars)) if i not in idx]
        vals = [_norm_coeff(values[self.vars[i]]) for i in idx]
        out: dict = {}
        for e, c in self.terms.items():
            for i, v in zip(idx, vals):
                if e[i]:
                    c = c * v ** e[i]
            if c:
                ne = tuple(e[i] for i in keep)
                out[ne] = out.get(ne, 0) + c
        return ExactMPoly(tuple(self.vars[i] for i in keep), out)

    def compose(self, images: Mapping[str, "ExactMPoly"], new_vars: Sequence[str]) -> "ExactMPoly":
        """Replace each variable by a polynomial over ``new_vars``.

        Variables missing from ``images`` must also appear in ``new_vars``
        and are carried over unchanged.
        """
        new_vars = tuple(new_vars)
        imgs = []
        for v in self.vars:
            if v in images:
                img = images[v]
                if img.vars != new_vars:
                    raise VariableMismatch(f"image of {v} lives over {img.vars}")
                imgs.append(img)
            else:
                imgs.append(ExactMPoly.variable(new_vars, v))
        powers: list[dict] = [{} for _ in self.vars]
        out = ExactMPoly.zero(new_vars)
        for e, c in self.terms.items():
            term = ExactMPoly.constant(new_vars, c)
            for i, k in enumerate(e):
                if k:
                    p = powers[i].get(k)
                    if p is None:
                        p = imgs[i] ** k
                        powers[i][k] = p
                    term = term * p
            out = out + term
        return out

    def evaluate(self, point: Sequence):
        """Evaluate at a point (exact when every entry is rational)."""
        total = 0
        for e, c in self.terms.items():
            v = c
            for x, k in zip(point, e):
                if k:
                    v = v * x ** k
            total = total + v
        return total

    def univariate_coeffs(self) -> list:
        """Low-to-high coefficients; only for polynomials in ``t`` alone."""
        if any(any(e[1:]) for e in self.terms):
            raise ValueError("polynomial depends on more than t")
        d = self.degree_in(0)
        out = [0] * (d + 1)
        for e, c in self.terms.items():
            out[e[0]] = c
        return out

    def to_unipoly(self) -> "UniPolyC":
        return UniPolyC([complex(c) for c in self.univariate_coeffs()])

    # -- presentation ---------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def to_json(self) -> dict:
        terms = []
        for e, c in self.sorted_terms():
            f = Fraction(c)
            terms.append({"exp": list(e), "num": str(f.numerator), "den": str(f.denominator)})
        return {"vars": list(self.vars), "terms": terms}

    @classmethod
    def from_json(cls, obj: Mapping) -> "ExactMPoly":
        vars = tuple(obj["vars"])
        terms = {}
        for term in obj["terms"]:
            exp = tuple(term["exp"])
            if exp in terms:
                raise ValueError(f"duplicate exponent {exp}")
            terms[exp] = Fraction(int(term["num"]), int(term.get("den", "1")))
        return cls(vars, terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k
            )
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        return " + ".join(parts).replace("+ -", "- ")


class UniPolyC:
    """Univariate complex polynomial, coefficients stored low to high."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = np.asarray(list(coeffs) if not isinstance(coeffs, np.ndarray) else coeffs,
                       dtype=complex).ravel()
        nz = np.flatnonzero(c)
        self.coeffs = c[: nz[-1] + 1].copy() if nz.size else np.zeros(0, dtype=complex)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def zero_like(self):
        return UniPolyC()

    def const_like(self, c):
        return UniPolyC([c])

    def is_zero(self) -> bool:
        return self.coeffs.size == 0

    def l1_norm(self) -> float:
        return float(np.abs(self.coeffs).sum())

    def sum_sq(self) -> float:
        return float((np.abs(self.coeffs) ** 2).sum())

    def _coerce(self, other):
        if isinstance(other, UniPolyC):
            return other
        if isinstance(other, (int, float, complex, Fraction, np.number)):
            return UniPolyC([complex(other)])
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        n = max(len(self.coeffs), len(other.coeffs))
        out = np.zeros(n, dtype=complex)
        out[: len(self.coeffs)] += self.coeffs
        out[: len(other.coeffs)] += other.coeffs
        return UniPolyC(out)

    __radd__ = __add__

    def __neg__(self):
        return UniPolyC(-self.coeffs)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.is_zero() or other.is_zero():
            return UniPolyC()
        return UniPolyC(np.convolve(self.coeffs, other.coeffs))

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = UniPolyC([1.0])
        for _ in range(k):
            out = out * self
        return out

    def partial_t(self):
        if len(self.coeffs) <= 1:
            return UniPolyC()
        return UniPolyC(self.coeffs[1:] * np.arange(1, len(self.coeffs)))

    def __call__(self, t):
        if self.is_zero():
            return np.zeros_like(np.asarray(t, dtype=complex))
        return np.polyval(self.coeffs[::-1], t)

    def taylor_at(self, t0) -> np.ndarray:
        """Coefficients of p(t0 + h) in powers of h."""
        c = self.coeffs.copy()
        d = len(c)
        # repeated synthetic division
        for k in range(d):
            for j in range(d - 2, k - 1, -1):
                c[j] += t0 * c[j + 1]
        return c

    def __eq__(self, other):
        if isinstance(other, UniPolyC):
            return np.array_equal(self.coeffs, other.coeffs)
        return NotImplemented

    __hash__ = None

    def to_json(self) -> dict:
        return {"coeffs": [{"re": float(c.real), "im": float(c.imag)} for c in self.coeffs]}

    @classmethod
    def from_json(cls, obj) -> "UniPolyC":
        return cls([complex(c["re"], c.get("im", 0.0)) if isinstance(c, dict) else c
                    for c in obj["coeffs"]])

    def __repr__(self):
        return f"UniPolyC({self.coeffs.tolist()})"


# -- module-level functional surface --------------------------------------

def l1_norm(p):
    """Sum of absolute values of all coefficients (exact for ExactMPoly)."""
    return p.l1_norm()


def mul(p, q):
    return p * q


def add(p, q):
    return p + q


def partial_t(p):
    return p.partial_t()


def specialize(p: ExactMPoly, lam: Sequence[complex]) -> UniPolyC:
    """Evaluate the parameters (all variables after ``t``) numerically."""
    if len(lam) != len(p.vars) - 1:
        raise ValueError(f"expected {len(p.vars) - 1} parameter values, got {len(lam)}")
    lam = [complex(x) for x in lam]
    d = p.degree_in(0)
    out = np.zeros(max(d + 1, 0), dtype=complex)
    for e, c in p.terms.items():
        v = complex(c)
        for x, k in zip(lam, e[1:]):
            if k:
                v *= x ** k
        out[e[0]] += v
    return UniPolyC(out)


def certified_min_modulus(p: UniPolyC, points: np.ndarray, radius: float) -> float:
    """Lower bound for |p| on the union of disks of ``radius`` about ``points``.

    Each point contributes |p(t_i)| minus the tail sum_k |p^(k)(t_i)/k!| radius^k
    of the local Taylor expansion.  Floating-point rounding is not tracked.
    """
    if p.is_zero():
        return 0.0
    c = p.coeffs
    d = len(c) - 1
    pts = np.asarray(points, dtype=complex)
    # Taylor coefficients at every point: row k is p^(k)(t)/k!
    taylor = np.empty((d + 1, pts.size), dtype=complex)
    work = np.tile(c[:, None], (1, pts.size))
    for k in range(d + 1):
        # Horner for the k-th shifted coefficient, deflating as we go
        acc = work[d].copy()
        for j in range(d - 1, k - 1, -1):
            acc = work[j] + pts * acc
            work[j] = acc
        taylor[k] = work[k]
    mags = np.abs(taylor)
    powers = radius ** np.arange(d + 1)
    slack = (mags[1:] * powers[1:, None]).sum(axis=0) if d else np.zeros(pts.size)
    return float(np.min(mags[0] - slack))


def eval_circle(p: UniPolyC, r: float, samples: int):
    """Sample ``p`` on |t| = r and return a certified min-modulus lower bound.

    Returns ``(angles, values, m_hat)``.  Every point of the circle lies
    within half an arc step of a sample, and ``m_hat`` subtracts the full
    Taylor tail over that distance from the sampled modulus.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    need = 2 * max(p.degree, 0) + 2
    if samples < need:
        raise ValueError(f"need at least {need} samples for degree {p.degree}")
    angles = 2 * np.pi * np.arange(samples) / samples
    pts = r * np.exp(1j * angles)
    values = p(pts)
    half_arc = np.pi * r / samples
    m_hat = certified_min_modulus(p, pts, half_arc)
    return angles, values, m_hat


def univariate_gcd(p: ExactMPoly, q: ExactMPoly) -> ExactMPoly:
    """Monic gcd of two exact polynomials in ``t`` alone (Euclid over Q)."""
    a = [Fraction(c) for c in p.univariate_coeffs()] if not p.is_zero() else []
    b = [Fraction(c) for c in q.univariate_coeffs()] if not q.is_zero() else []
    while b:
        a, b = b, _poly_rem(a, b)
    if not a:
        return p.zero_like()
    lead = a[-1]
    return ExactMPoly.from_coeffs([c / lead for c in a], p.vars)


def _strip(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _poly_rem(a, b):
    a = list(a)
    db = len(b) - 1
    while len(a) - 1 >= db and a:
        f = a[-1] / b[-1]
        shift = len(a) - 1 - db
        for i, bc in enumerate(b):
            a[shift + i] -= f * bc
        _strip(a)
    return a


def univariate_divmod(p: ExactMPoly, q: ExactMPoly):
    """Quotient and remainder of exact polynomials in ``t`` alone."""
    if q.is_zero():
        raise ZeroDivisionError("polynomial division by zero")
    a = [Fraction(c) for c in p.univariate_coeffs()] if not p.is_zero() else []
    b = [Fraction(c) for c in q.univariate_coeffs()]
    db = len(b) - 1
    quo = [Fraction(0)] * max(len(a) - db, 0)
    while a and len(a) - 1 >= db:
        f = a[-1] / b[-1]
        shift = len(a) - 1 - db
        quo[shift] = f
        for i, bc in enumerate(b):
            a[shift + i] -= f * bc
        _strip(a)
    return ExactMPoly.from_coeffs(quo, p.vars), ExactMPoly.from_coeffs(a, p.vars)
