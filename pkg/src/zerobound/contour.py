"""Taylor-series continuation along complex paths and argument-principle counts.

Solutions of x' = N(t)/chi(t) x are continued with order-p Taylor steps;
the Taylor model at each node doubles as a dense interpolant, which is
what the argument tracker and the residual check evaluate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .models import RationalSystem
from .poly import ExactMPoly, UniPolyC, specialize

__all__ = [
    "Segment",
    "PathSolution",
    "DiskReport",
    "IntegrationFailed",
    "PoleOnPath",
    "BoundaryAmbiguous",
    "as_rational_system",
    "line",
    "arc",
    "disk_path",
    "integrate",
    "count_zeros_disk",
    "residual_check",
    "oracle_count",
    "DEFAULT_ORDER",
    "DEFAULT_DELTA",
    "RADIUS_SCHEDULE",
]

DEFAULT_ORDER = 20
DEFAULT_DELTA = 1e-6
RADIUS_SCHEDULE = (1.01, 0.99, 1.02, 0.98, 1.03, 0.97, 1.015, 0.985)
_MAX_DEPTH = 48


class IntegrationFailed(RuntimeError):
    pass


class PoleOnPath(ValueError):
    pass


class BoundaryAmbiguous(ValueError):
    pass


# -- paths -----------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """Straight segment a -> b, or arc center + radius e^{i theta}, theta0 -> theta1."""

    kind: str
    a: complex = 0j
    b: complex = 0j
    center: complex = 0j
    radius: float = 0.0
    theta0: float = 0.0
    theta1: float = 0.0

    def point(self, s: float) -> complex:
        if self.kind == "line":
            return self.a + s * (self.b - self.a)
        th = self.theta0 + s * (self.theta1 - self.theta0)
        return self.center + self.radius * complex(math.cos(th), math.sin(th))

    def length(self) -> float:
        if self.kind == "line":
            return abs(self.b - self.a)
        return abs(self.theta1 - self.theta0) * self.radius

    def distance_to(self, z: complex) -> float:
        if self.kind == "line":
            d = self.b - self.a
            if d == 0:
                return abs(z - self.a)
            s = ((z - self.a) * d.conjugate()).real / abs(d) ** 2
            return abs(z - self.point(min(max(s, 0.0), 1.0)))
        # conservative: distance to the full circle
        return abs(abs(z - self.center) - self.radius)

    def to_json(self) -> dict:
        if self.kind == "line":
            return {"kind": "line", "a": _cj(self.a), "b": _cj(self.b)}
        return {"kind": "arc", "center": _cj(self.center), "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1}

    @classmethod
    def from_json(cls, obj) -> "Segment":
        if obj["kind"] == "line":
            return line(_jc(obj["a"]), _jc(obj["b"]))
        return arc(_jc(obj["center"]), obj["radius"], obj["theta0"], obj["theta1"])


def _cj(z: complex) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def _jc(obj) -> complex:
    return complex(obj["re"], obj.get("im", 0.0)) if isinstance(obj, dict) else complex(obj)


def line(a: complex, b: complex) -> Segment:
    return Segment("line", a=complex(a), b=complex(b))


def arc(center: complex, radius: float, theta0: float = 0.0,
        theta1: float = 2 * math.pi) -> Segment:
    return Segment("arc", center=complex(center), radius=float(radius),
                   theta0=float(theta0), theta1=float(theta1))


def disk_path(center: complex, r: float) -> list:
    """Radius from the center out to center + r, then once around counterclockwise."""
    center = complex(center)
    return [line(center, center + r), arc(center, r)]


# -- systems ----------------------------------------------------------------

def as_rational_system(system, lam: Sequence[complex] | None = None) -> RationalSystem:
    """Accept a RationalSystem, a model system, or a matrix of polynomial entries."""
    if isinstance(system, RationalSystem):
        return system
    if hasattr(system, "numeric"):
        return system.numeric()
    rows = [list(r) for r in system]
    n = len(rows)
    polys = []
    for r in rows:
        out = []
        for e in r:
            if isinstance(e, ExactMPoly):
                if len(e.vars) > 1:
                    if lam is None:
                        raise ValueError("parameter values needed for a universal matrix")
                    e = specialize(e, lam)
                else:
                    e = e.to_unipoly() if not e.is_zero() else UniPolyC()
            elif not isinstance(e, UniPolyC):
                e = UniPolyC([complex(e)])
            out.append(e)
        polys.append(out)
    d = max((len(e.coeffs) for r in polys for e in r), default=1)
    numer = np.zeros((max(d, 1), n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            c = polys[i][j].coeffs
            numer[: len(c), i, j] = c
    return RationalSystem(numer, np.array([1.0 + 0j]))


def _shift(coeffs: np.ndarray, t0: complex) -> np.ndarray:
    """Taylor shift along axis 0: coefficients of P(t0 + h) in powers of h."""
    c = np.array(coeffs, dtype=complex, copy=True)
    d = c.shape[0]
    for k in range(d):
        for j in range(d - 2, k - 1, -1):
            c[j] += t0 * c[j + 1]
    return c


def taylor_coefficients(system: RationalSystem, t0: complex, X0: np.ndarray,
                        order: int) -> np.ndarray:
    """X_0..X_order with x(t0 + h) = sum_j X_j h^j for x' = N/chi x."""
    N = _shift(system.numer, t0)
    chi = _shift(system.denom, t0) if system.denom.size > 1 else system.denom
    if chi[0] == 0:
        raise PoleOnPath(f"denominator vanishes at {t0}")
    X = np.zeros((order + 1,) + X0.shape, dtype=complex)
    X[0] = X0
    dN, dchi = N.shape[0], chi.shape[0]
    for j in range(order):
        rhs = np.zeros_like(X0)
        for k in range(min(j, dN - 1) + 1):
            rhs += N[k] @ X[j - k]
        for i in range(1, min(j + 1, dchi - 1) + 1):
            rhs -= chi[i] * (j + 1 - i) * X[j + 1 - i]
        X[j + 1] = rhs / (chi[0] * (j + 1))
    return X


def _horner(X: np.ndarray, delta: complex) -> np.ndarray:
    acc = X[-1].copy()
    for j in range(X.shape[0] - 2, -1, -1):
        acc = acc * delta + X[j]
    return acc


def _horner_deriv(X: np.ndarray, delta: complex) -> np.ndarray:
    p = X.shape[0] - 1
    acc = p * X[p]
    for j in range(p - 1, 0, -1):
        acc = acc * delta + j * X[j]
    return acc


# -- integration -------------------------------------------------------------

@dataclass
class Node:
    t: complex
    segment: int
    s: float
    coeffs: np.ndarray
    step: float = 0.0
    local_error: float = 0.0


@dataclass
class PathSolution:
    path: list
    nodes: list
    order: int
    rel_tol: float
    global_error: float | None = None
    status: str = "ok"

    def values(self) -> np.ndarray:
        return np.array([nd.coeffs[0] for nd in self.nodes])

    def endpoint(self) -> np.ndarray:
        return self.nodes[-1].coeffs[0]

    def to_json(self) -> dict:
        return {"path": [s.to_json() for s in self.path], "order": self.order,
                "rel_tol": self.rel_tol, "global_error": self.global_error,
                "status": self.status, "nodes": len(self.nodes),
                "max_local_error": max((nd.local_error for nd in self.nodes), default=0.0)}


def _step_size(X: np.ndarray, rel_tol: float) -> float:
    p = X.shape[0] - 1
    scale = np.abs(X[0]).max(axis=0)  # per solution column
    scale = np.where(scale > 0, scale, 1.0)
    h = np.inf
    for j in (p - 1, p):
        nu = np.abs(X[j]).max(axis=0)
        with np.errstate(divide="ignore"):
            cand = np.where(nu > 0, (rel_tol * scale / np.where(nu > 0, nu, 1.0)) ** (1.0 / j),
                            np.inf)
        h = min(h, float(cand.min()))
    return 0.9 * h


def _run(system, X0, path, rel_tol, order, max_step, forced):
    poles = system.poles()
    for seg in path:
        for z in poles:
            if seg.distance_to(z) < 1e-12 * (1 + abs(z)):
                raise PoleOnPath(f"pole {z} lies on the path")
    nodes = []
    X = X0
    for si, seg in enumerate(path):
        L = seg.length()
        s = 0.0
        if L == 0:
            continue
        marks = iter(forced[si]) if forced is not None else None
        while True:
            t = seg.point(s)
            coeffs = taylor_coefficients(system, t, X, order)
            if s >= 1.0:
                nodes.append(Node(t, si, s, coeffs))
                break
            if marks is not None:
                s_new = next(marks)
            else:
                h = _step_size(coeffs, rel_tol)
                if max_step is not None:
                    h = min(h, max_step)
                if poles.size:
                    h = min(h, 0.5 * float(np.abs(poles - t).min()))
                if h < 1e-14 * (1 + abs(t)):
                    raise IntegrationFailed(f"step underflow at t = {t}")
                ds = h / L
                s_new = 1.0 if ds >= 1.0 - s - 1e-15 else s + ds
            t_new = seg.point(s_new)
            delta = t_new - t
            p = coeffs.shape[0] - 1
            err = float(np.abs(coeffs[p]).max() * abs(delta) ** p
                        / max(np.abs(coeffs[0]).max(), 1e-300))
            nodes.append(Node(t, si, s, coeffs, abs(delta), err))
            X = _horner(coeffs, delta)
            s = s_new
        # the endpoint of this segment starts the next one
        if si < len(path) - 1:
            nodes.pop()
    return nodes


def integrate(system, x0, path: Sequence[Segment], rel_tol: float = 1e-12,
              order: int = DEFAULT_ORDER, lam: Sequence[complex] | None = None,
              max_step: float | None = None, fixed_step: float | None = None,
              estimate_error: bool = True) -> PathSolution:
    """Continue x(t) from x(path start) = x0 along ``path``.

    ``x0`` may be a vector or an n x q matrix of initial columns.  The global
    error estimate compares against a rerun with every step halved.
    """
    if not (1e-14 < rel_tol < 1e-4):
        raise ValueError("rel_tol must lie in (1e-14, 1e-4)")
    sysr = as_rational_system(system, lam)
    X0 = np.asarray(x0, dtype=complex)
    if X0.ndim == 1:
        X0 = X0[:, None]
    if X0.shape[0] != sysr.n:
        raise ValueError("initial condition has the wrong dimension")
    path = list(path)
    forced = None
    if fixed_step is not None:
        forced = _fixed_steps(path, fixed_step)
    nodes = _run(sysr, X0, path, rel_tol, order, max_step, forced)
    sol = PathSolution(path, nodes, order, rel_tol)
    if estimate_error:
        try:
            fine = _run(sysr, X0, path, rel_tol, order, None, _halved(nodes, path))
            a, b = nodes[-1].coeffs[0], fine[-1].coeffs[0]
            sol.global_error = float(np.abs(a - b).max() / max(np.abs(b).max(), 1e-300))
        except IntegrationFailed:
            sol.global_error = float("inf")
    return sol


def _fixed_steps(path, h):
    """Uniform parameter marks per segment, none longer than h."""
    marks = []
    for seg in path:
        k = max(1, math.ceil(seg.length() / h - 1e-12))
        marks.append([(i + 1) / k for i in range(k - 1)] + [1.0])
    return marks


def _halved(nodes, path):
    marks = [[] for _ in path]
    starts = {}
    for nd in nodes:
        if nd.step > 0:
            starts.setdefault(nd.segment, []).append(nd.s)
    for si, ss in starts.items():
        ends = ss[1:] + [1.0]
        for a, b in zip(ss, ends):
            marks[si].extend([0.5 * (a + b), b])
    return marks


# -- argument tracking ---------------------------------------------------------

@dataclass
class DiskReport:
    center: complex
    radius: float
    combination: list | None
    zero_count: int | None
    winding: float
    min_modulus_on_contour: float
    status: str
    attempts: int = 1
    proximity: float = float("nan")
    closure_error: float = float("nan")
    samples: int = 0

    def to_json(self) -> dict:
        def f(x):
            return None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x
        return {
            "center": _cj(self.center), "radius": self.radius,
            "combination": None if self.combination is None
            else [_cj(complex(c)) for c in self.combination],
            "zero_count": self.zero_count, "winding": f(self.winding),
            "min_modulus_on_contour": f(self.min_modulus_on_contour),
            "status": self.status, "attempts": self.attempts,
            "proximity": f(self.proximity), "closure_error": f(self.closure_error),
            "samples": self.samples,
        }


@dataclass
class _Track:
    winding: float = 0.0
    min_mod: float = np.inf
    max_mod: float = 0.0
    proximity: float = np.inf
    samples: int = 0
    failed: bool = False
    zero_hit: bool = False
    mods: list = field(default_factory=list)


def _track_interval(f: Callable, th_a: float, th_b: float, acc: _Track, r: float,
                    fa=None, fb=None, depth: int = 0):
    """Sum principal argument increments of f on [th_a, th_b] with bisection.

    ``f(theta)`` returns (y, dy/dtheta).  An interval is accepted when the
    argument moves by less than pi/4 and |dy| * dtheta <= |y| / 2 at both ends.
    """
    stack = [(th_a, th_b, fa or f(th_a), fb or f(th_b), depth)]
    while stack:
        a, b, (ya, da), (yb, db), d = stack.pop()
        if ya == 0 or yb == 0:
            acc.zero_hit = True
            return
        dth = b - a
        inc = np.angle(yb / ya)
        ok = abs(inc) < math.pi / 4 and abs(da) * dth <= 0.5 * abs(ya) \
            and abs(db) * dth <= 0.5 * abs(yb)
        if ok:
            acc.winding += float(inc)
            for y, dy in ((ya, da), (yb, db)):
                m = abs(y)
                acc.min_mod = min(acc.min_mod, m)
                acc.max_mod = max(acc.max_mod, m)
                # |y| / (|dy/dt| r) = |y| / |dy/dtheta|: Newton distance to a zero
                if dy != 0:
                    acc.proximity = min(acc.proximity, m / abs(dy))
            acc.samples += 1
            continue
        if d >= _MAX_DEPTH:
            # usually a zero sitting on the contour; keep its Newton distance
            for y, dy in ((ya, da), (yb, db)):
                if dy != 0:
                    acc.proximity = min(acc.proximity, abs(y) / abs(dy))
            acc.failed = True
            return
        mid = 0.5 * (a + b)
        fm = f(mid)
        # push right half first so the left half is summed first
        stack.append((mid, b, fm, (yb, db), d + 1))
        stack.append((a, mid, (ya, da), fm, d + 1))


def _poly_track(p: UniPolyC, center: complex, r: float) -> _Track:
    dp = p.partial_t()
    acc = _Track()

    def f(th):
        e = complex(math.cos(th), math.sin(th))
        t = center + r * e
        return complex(p(t)), complex(dp(t)) * 1j * r * e

    n0 = max(64, 8 * (p.degree + 1))
    grid = np.linspace(0.0, 2 * math.pi, n0 + 1)
    vals = [f(th) for th in grid]
    for i in range(n0):
        _track_interval(f, grid[i], grid[i + 1], acc, r, vals[i], vals[i + 1])
        if acc.failed or acc.zero_hit:
            break
    return acc


def _system_track(sol: PathSolution, c: np.ndarray, center: complex, r: float,
                  acc: _Track) -> tuple:
    """Track the arc part of ``sol``; returns y at the arc's two ends."""
    arc_nodes = [nd for nd in sol.nodes if sol.path[nd.segment].kind == "arc"]
    seg = sol.path[arc_nodes[0].segment]
    ends = []
    for i in range(len(arc_nodes) - 1):
        nd = arc_nodes[i]
        Y = np.tensordot(nd.coeffs, c, axes=([1], [0]))  # Taylor coefficients of y
        th0 = seg.theta0 + nd.s * (seg.theta1 - seg.theta0)
        th1 = seg.theta0 + arc_nodes[i + 1].s * (seg.theta1 - seg.theta0)
        t_node = nd.t

        def f(th, Y=Y, t_node=t_node):
            e = complex(math.cos(th), math.sin(th))
            delta = center + r * e - t_node
            y = _horner(Y, delta)
            dy = _horner_deriv(Y, delta)
            return complex(y.ravel()[0]), complex(dy.ravel()[0]) * 1j * r * e

        fa, fb = f(th0), f(th1)
        if i == 0:
            ends.append(fa[0])
        _track_interval(f, th0, th1, acc, r, fa, fb)
        if acc.failed or acc.zero_hit:
            return None, None
    ends.append(fb[0])
    return ends[0], ends[-1]


def _ray_count(system: RationalSystem, center: complex, r: float) -> int:
    """Number of rays so that solution modes change by at most ~e^2 along one arc.

    A single continuation around the whole circle amplifies the relative error
    by roughly exp(2 * growth * arc length); restarting from the center along
    fresh rays keeps each arc short.
    """
    rho = 0.0
    for th in np.linspace(0.0, 2 * math.pi, 32, endpoint=False):
        t = center + r * complex(math.cos(th), math.sin(th))
        A = _horner(system.numer, t) / complex(np.polyval(system.denom[::-1], t))
        rho = max(rho, float(np.abs(np.linalg.eigvals(A)).max()))
    return int(min(max(8, math.ceil(2 * math.pi * r * rho / 2.0)), 1024))


def _system_count(sysr, X0, cv, center, r, rel_tol, order) -> tuple:
    acc = _Track()
    K = _ray_count(sysr, center, r)
    thetas = np.linspace(0.0, 2 * math.pi, K + 1)
    firsts, lasts = [], []
    top = 0.0
    for k in range(K):
        e = complex(math.cos(thetas[k]), math.sin(thetas[k]))
        path = [line(center, center + r * e), arc(center, r, thetas[k], thetas[k + 1])]
        sol = integrate(sysr, X0, path, rel_tol, order, estimate_error=False)
        top = max(top, max(float(np.abs(nd.coeffs[0]).max()) for nd in sol.nodes))
        a, b = _system_track(sol, cv, center, r, acc)
        if a is None:
            return acc, float("inf"), top
        firsts.append(a)
        lasts.append(b)
    # stitch the arcs: each arc ends where the next ray's arc begins
    jump = 0.0
    for k in range(K):
        y_end, y_next = lasts[k], firsts[(k + 1) % K]
        acc.winding += float(np.angle(y_next / y_end))
        jump = max(jump, abs(y_next - y_end) / max(abs(y_end), abs(y_next)))
    return acc, jump, top


def _report(acc: _Track, center, r, c, attempts, delta, scale,
            closure=None) -> DiskReport:
    w = acc.winding
    k = int(round(w / (2 * math.pi))) if math.isfinite(w) else None
    if closure is None:
        closure = abs(w / (2 * math.pi) - k) if k is not None else float("inf")
    if acc.max_mod <= max(1e-300, 1e-13 * scale):
        status = "identically-zero"
        k = None
    elif acc.zero_hit or acc.proximity < delta:
        status = "contour-too-close"
        k = None
    elif acc.failed:
        status = "integration-failed"
        k = None
    elif closure >= 1e-3:
        status = "integration-failed"
        k = None
    else:
        status = "ok"
    return DiskReport(complex(center), float(r), None if c is None else list(c), k, w,
                      float(acc.min_mod), status, attempts, float(acc.proximity),
                      float(closure), acc.samples)


def count_zeros_disk(target, x0=None, c=None, center: complex = 0j, r: float = 1.0,
                     rel_tol: float = 1e-12, lam: Sequence[complex] | None = None,
                     delta: float = DEFAULT_DELTA, order: int = DEFAULT_ORDER) -> DiskReport:
    """Number of zeros of y = c . x(t) (or of a polynomial) in |t - center| < r.

    For a system, ``x0`` is the value of x at the center.  When a zero sits
    too close to the contour (|y| / |y'| < delta * r somewhere) the radius is
    perturbed by the fixed schedule; the report carries the radius used.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    center = complex(center)
    poly_mode = isinstance(target, UniPolyC)
    if not poly_mode:
        sysr = as_rational_system(target, lam)
        X0 = np.asarray(x0, dtype=complex).ravel()
        cv = np.asarray(c if c is not None else np.eye(sysr.n)[0], dtype=complex).ravel()
        scale = float(np.abs(cv).sum() * np.abs(X0).max())
    else:
        if target.is_zero():
            return DiskReport(center, float(r), None, None, 0.0, 0.0, "identically-zero")
        scale = 0.0
        cv = None
    radii = [r] + [r * f for f in RADIUS_SCHEDULE]
    report = None
    for attempt, rr in enumerate(radii, start=1):
        if poly_mode:
            acc = _poly_track(target, center, rr)
        else:
            try:
                acc, jump, top = _system_count(sysr, X0, cv, center, rr, rel_tol, order)
            except (IntegrationFailed, PoleOnPath):
                return DiskReport(center, float(rr), list(cv), None, float("nan"), float("nan"),
                                  "integration-failed", attempt)
            sc = scale * top / max(float(np.abs(X0).max()), 1e-300)
            # junction mismatch is the closure defect of the stitched contour
            report = _report(acc, center, rr, cv, attempt, delta, sc,
                             closure=max(jump / (2 * math.pi),
                                         abs(acc.winding / (2 * math.pi)
                                             - round(acc.winding / (2 * math.pi)))))
            if report.status != "contour-too-close":
                return report
            continue
        report = _report(acc, center, rr, cv, attempt, delta, scale)
        if report.status != "contour-too-close":
            return report
    return report


def residual_check(eq, sol: PathSolution, c=None) -> float:
    """max over nodes of |sum_j a_j y^(n-j)| / (sum_j b_j * max_j |y^(j)|)."""
    a = [p.to_unipoly() if isinstance(p, ExactMPoly) else p for p in eq.a]
    n = len(a) - 1
    if sol.order < n:
        raise ValueError("Taylor order too low for the equation order")
    b = np.array([p.l1_norm() for p in a])
    bsum = float(b.sum())
    cv = np.asarray(c if c is not None else np.eye(sol.nodes[0].coeffs.shape[1])[0],
                    dtype=complex)
    fact = np.array([math.factorial(j) for j in range(n + 1)], dtype=float)
    worst = 0.0
    for nd in sol.nodes:
        Y = np.tensordot(nd.coeffs[: n + 1], cv, axes=([1], [0]))  # (n+1, q)
        ders = Y * fact[:, None]
        coef = np.array([complex(p(nd.t)) for p in a])
        # a_j multiplies y^(n-j)
        res = np.abs(sum(coef[j] * ders[n - j] for j in range(n + 1)))
        denom = bsum * np.abs(ders).max(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(denom > 0, res / denom, 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


def oracle_count(p: UniPolyC, center: complex = 0j, r: float = 1.0,
                 boundary_tol: float = 1e-9) -> int:
    """Roots of p in the open disk from companion-matrix eigenvalues."""
    if p.is_zero():
        raise ValueError("zero polynomial has no isolated roots")
    if p.degree == 0:
        return 0
    roots = np.roots(p.coeffs[::-1])
    d = np.abs(roots - complex(center))
    if np.any(np.abs(d - r) < boundary_tol):
        raise BoundaryAmbiguous("a root lies on the boundary circle")
    return int(np.sum(d < r))
