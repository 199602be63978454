"""Explicit oscillation bounds.

Tower-shaped bounds are kept in level-index form: a number V >= 1 is stored
as (h, y) with V = exp2^h(y) and 0 <= y < 1, so comparing bounds never
materializes them.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .poly import ExactMPoly, UniPolyC, eval_circle

__all__ = [
    "BoundConstants",
    "TowerBound",
    "VallePoussin",
    "CircleBound",
    "DiskBound",
    "vallee_poussin_disconjugate",
    "circle_lower_bound",
    "zero_bound_unit_disk",
    "main_theorem_bound",
    "meander_bound",
    "ratio_bound",
    "fuchsian_bound",
    "hypergeometric_bound",
    "exact_value",
]

_LOG10_LOG10_2 = math.log10(math.log10(2.0))


@dataclass(frozen=True)
class BoundConstants:
    """The unspecified constants of the asymptotic bounds, made explicit."""

    c_main: float = 1.0
    c_levin: float = 1.0
    c_var: float = 1.0
    c_ratio: float = 1.0
    c_tower: float = 0.0

    def __post_init__(self):
        for name in ("c_main", "c_levin", "c_var", "c_ratio"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite")
        if not math.isfinite(self.c_tower):
            raise ValueError("c_tower must be finite")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "BoundConstants":
        return cls(**{k: float(v) for k, v in obj.items()})


# -- level-index arithmetic ---------------------------------------------------

def _normalize(h: int, y: float) -> tuple:
    while y >= 1.0:
        y = math.log2(y)
        h += 1
    return h, y


def _exp2_safe(x: float):
    """2**x, or None when it overflows a float."""
    if x > 1023.0:
        return None
    return 2.0 ** x


@dataclass(frozen=True)
class TowerBound:
    """max(M,2)^(2^e) (``double-exp``) or M^(2^2^2^2^x) (``tower4``)."""

    kind: str
    base: float
    exponent_log2: float
    constants: BoundConstants = BoundConstants()

    @property
    def level_index(self) -> tuple:
        lb = math.log2(math.log2(self.base))
        if self.kind == "double-exp":
            # log2 log2 V = e + log2 log2 base
            return _normalize(2, self.exponent_log2 + lb)
        # tower4: log2 log2 V = 2^2^2^x + log2 log2 M
        x = self.exponent_log2
        vals = [x]
        for _ in range(3):
            nxt = _exp2_safe(vals[-1])
            if nxt is None:
                break
            vals.append(nxt)
        pending = 3 - (len(vals) - 1)  # exp2 levels not yet applied
        if pending == 0:
            return _normalize(2, vals[-1] + lb)
        # the additive log2 log2 M is far below float resolution here
        return _normalize(2 + pending, vals[-1])

    @property
    def log2_log2_value(self) -> float:
        h, y = self.level_index
        v = y
        for _ in range(h - 2):
            nxt = _exp2_safe(v)
            if nxt is None:
                return math.inf
            v = nxt
        return v

    @property
    def log10_log10_value(self) -> float:
        return self.log2_log2_value * math.log10(2.0) + _LOG10_LOG10_2

    def value(self) -> float:
        """The bound as a float (inf when it does not fit)."""
        h, y = self.level_index
        v = y
        for _ in range(h):
            nxt = _exp2_safe(v)
            if nxt is None:
                return math.inf
            v = nxt
        return v

    def _key(self):
        return self.level_index

    def __lt__(self, other):
        return self._key() < other._key()

    def __le__(self, other):
        return self._key() <= other._key()

    def __gt__(self, other):
        return self._key() > other._key()

    def __ge__(self, other):
        return self._key() >= other._key()

    def admits(self, count: float) -> bool:
        """True when ``count`` does not exceed the bound (checked in log space)."""
        if count <= 1:
            return True
        ll = math.log2(math.log2(count)) if count > 2 else -math.inf
        return ll <= self.log2_log2_value + 1e-12

    def render(self) -> str:
        if self.kind == "double-exp":
            return f"{self.base:g}^(2^{self.exponent_log2:g})"
        return f"{self.base:g}^(2^2^2^2^{self.exponent_log2:.6g})"

    def to_json(self) -> dict:
        ll = self.log10_log10_value
        h, y = self.level_index
        return {
            "bound_kind": self.kind,
            "base": self.base,
            "exponent_log2": self.exponent_log2,
            "constants": self.constants.to_json(),
            "log10_log10_value": ll if math.isfinite(ll) else None,
            "level_index": [h, y],
            "rendered": self.render(),
        }


# -- disconjugacy ---------------------------------------------------------------

@dataclass(frozen=True)
class VallePoussin:
    total: float
    disconjugate: bool

    @property
    def margin(self) -> float:
        return 1.0 - self.total


def vallee_poussin_disconjugate(b: Sequence[float], length: float) -> VallePoussin:
    """sum_j b_j length^j / j! over j = 1..n; below 1 means disconjugate."""
    if length <= 0:
        raise ValueError("interval length must be positive")
    if any(x < 0 for x in b):
        raise ValueError("coefficient bounds must be nonnegative")
    total = 0.0
    term = 1.0
    for j, bj in enumerate(b, start=1):
        term *= length / j
        total += float(bj) * term
    return VallePoussin(total, total < 1.0)


# -- circle search ----------------------------------------------------------------

@dataclass(frozen=True)
class CircleBound:
    radius: float
    m_hat: float
    floor: float
    samples: int


def _as_unipoly(p) -> UniPolyC:
    if isinstance(p, ExactMPoly):
        return p.to_unipoly() if not p.is_zero() else UniPolyC()
    return p


_GRID_LO, _GRID_HI = 1 + 1 / 128, 2 - 1 / 128
_EDGE = 1 / 1024
_MAX_SAMPLES = 1 << 16


def circle_lower_bound(a0, constants: BoundConstants = BoundConstants(),
                       radii: int = 64, samples: int | None = None) -> CircleBound:
    """Circle |t| = r, 1 < r < 2, with the largest certified min |a0|.

    ``a0`` must have unit l1 norm.  Radii are scanned on a uniform grid and
    refined four-fold around the best one; ties go to the smaller radius.
    """
    p = _as_unipoly(a0)
    if p.is_zero():
        raise ValueError("leading coefficient vanishes identically")
    if abs(p.l1_norm() - 1.0) > 1e-9:
        raise ValueError("leading coefficient must be normalized to l1 norm 1")
    d = p.degree
    floor = 2.0 ** (-constants.c_levin * d)
    s = samples or max(256, 8 * (d + 1))
    grid = np.linspace(_GRID_LO, _GRID_HI, radii)
    step = grid[1] - grid[0] if radii > 1 else 0.5
    while True:
        vals = [eval_circle(p, float(r), s)[2] for r in grid]
        i = int(np.argmax(vals))
        best_r, best_m = float(grid[i]), vals[i]
        lo = max(best_r - step, 1 + _EDGE)
        hi = min(best_r + step, 2 - _EDGE)
        for r in np.linspace(lo, hi, 9):
            m = eval_circle(p, float(r), s)[2]
            if m > best_m or (m == best_m and r < best_r):
                best_r, best_m = float(r), m
        if best_m > 0 or s >= _MAX_SAMPLES:
            return CircleBound(best_r, float(best_m), floor, s)
        s *= 2


# -- unit-disk zero bound ------------------------------------------------------------

@dataclass(frozen=True)
class DiskBound:
    formula: int
    constructive: int | None
    K: float
    n: int
    d: int
    circle: CircleBound | None
    constants: BoundConstants

    def to_json(self) -> dict:
        return {
            "formula": self.formula, "constructive": self.constructive,
            "K": self.K, "n": self.n, "d": self.d,
            "circle": None if self.circle is None else asdict(self.circle),
            "constants": self.constants.to_json(),
        }


def _coeff_norms(eq):
    a = [_as_unipoly(p) for p in eq.a]
    return a, [float(p.l1_norm()) for p in a]


def zero_bound_unit_disk(eq, K: float | None = None,
                         constants: BoundConstants = BoundConstants()) -> DiskBound:
    """Bound on zeros in the unit disk of a solution of a0 y^(n) + ... + an y = 0.

    The formula variant is K n 2^(c_var d).  The constructive variant replaces
    the worst-case lower bound by the measured one: on the chosen circle
    |a_j / a0| <= K_circle / m_hat, and the count is n * max(1, K_circle/m_hat)
    rounded up.  Solutions are assumed analytic in a neighbourhood of radius 6.
    """
    a, norms = _coeff_norms(eq)
    n = len(a) - 1
    if norms[0] == 0:
        raise ValueError("leading coefficient vanishes identically")
    rel = [x / norms[0] for x in norms[1:]]
    if K is None:
        K = max(rel, default=0.0)
        K = max(K, 1.0)
    if K <= 0:
        raise ValueError("K must be positive")
    d = max((p.degree for p in a), default=0)
    d = max(d, 0)
    formula = math.ceil(K * n * 2.0 ** (constants.c_var * d) - 1e-9)
    a0 = UniPolyC(a[0].coeffs / norms[0])
    circ = circle_lower_bound(a0, constants)
    constructive = None
    if circ.m_hat > 0:
        r = circ.radius
        k_circle = max((float(np.sum(np.abs(p.coeffs) * r ** np.arange(len(p.coeffs))))
                        / norms[0] for p in a[1:]), default=0.0)
        constructive = math.ceil(n * max(1.0, k_circle / circ.m_hat) - 1e-9)
    return DiskBound(int(formula), constructive, float(K), n, d, circ, constants)


# -- towers -------------------------------------------------------------------------

def _check_nm(n, m=1):
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")


def main_theorem_bound(n: int, m: int, M: float,
                       constants: BoundConstants = BoundConstants()) -> TowerBound:
    """max(M,2)^(2^(c_main n^2 m)) zeros for systems of size n, degree m, height M."""
    _check_nm(n, m)
    if M <= 0:
        raise ValueError("M must be positive")
    return TowerBound("double-exp", max(float(M), 2.0), constants.c_main * n * n * m, constants)


def ratio_bound(n: int, m: int, M: float,
                constants: BoundConstants = BoundConstants()) -> TowerBound:
    """Bound on sup_j b_j / b_0 of the principal equation's norm profile."""
    _check_nm(n, m)
    if M <= 0:
        raise ValueError("M must be positive")
    return TowerBound("double-exp", max(float(M), 2.0), constants.c_ratio * n * n * m, constants)


def fuchsian_bound(n: int, m: int, M: float,
                   constants: BoundConstants = BoundConstants()) -> TowerBound:
    """Bound for systems with m simple poles, residues and poles of size <= M."""
    _check_nm(n, m)
    if M <= 0:
        raise ValueError("M must be positive")
    return TowerBound("double-exp", max(float(M), 2.0), constants.c_main * n * n * m, constants)


def hypergeometric_bound(n: int, M: float,
                         constants: BoundConstants = BoundConstants()) -> TowerBound:
    """Bound for (tE - B) x' = C x with |B|, |C| <= M; exponent scales like n^2."""
    _check_nm(n)
    if M <= 0:
        raise ValueError("M must be positive")
    return TowerBound("double-exp", max(float(M), 2.0), constants.c_main * n * n, constants)


def meander_bound(n: int, m: int, M: float,
                  constants: BoundConstants = BoundConstants()) -> TowerBound:
    """M^q with q = 2^2^2^2^(4 n ln m + c_tower), stored by its innermost exponent."""
    if M <= 2:
        raise ValueError("M must exceed 2")
    if m < 2:
        raise ValueError("m must be at least 2")
    _check_nm(n, m)
    x = 4 * n * math.log(m) + constants.c_tower
    return TowerBound("tower4", float(M), x, constants)


def exact_value(tb: TowerBound) -> int | None:
    """Exact integer value when base and exponent are small integers (< 2^64)."""
    if tb.kind != "double-exp":
        return None
    if tb.base != int(tb.base) or tb.exponent_log2 != int(tb.exponent_log2):
        return None
    e = int(tb.exponent_log2)
    if e < 0 or e > 6:
        return None
    v = int(tb.base) ** (2 ** e)
    return v if v < 2 ** 64 else None
