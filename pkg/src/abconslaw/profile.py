"""Exact algebra on piecewise-affine functions of one variable.

A :class:`PiecewiseProfile` with breakpoints ``x_0 < ... < x_{k-1}`` has
``k + 1`` affine pieces: ``(-inf, x_0)``, ``[x_0, x_1)``, ..., ``[x_{k-1}, +inf)``.
Point evaluation is right-continuous; one-sided limits are available through
:meth:`PiecewiseProfile.limits`.  Integrals use closed-form antiderivatives.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .flux import ConvexFlux, FluxPair


class ProfileError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PiecewiseProfile:
    breaks: np.ndarray
    slopes: np.ndarray
    intercepts: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.breaks, dtype=float).reshape(-1)
        s = np.asarray(self.slopes, dtype=float).reshape(-1)
        c = np.asarray(self.intercepts, dtype=float).reshape(-1)
        if s.shape != (b.size + 1,) or c.shape != s.shape:
            raise ProfileError("need len(breaks) + 1 pieces")
        if b.size and np.any(np.diff(b) <= 0):
            raise ProfileError("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(s)) and np.all(np.isfinite(c))):
            raise ProfileError("non-finite profile data")
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "slopes", s)
        object.__setattr__(self, "intercepts", c)

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, c: float) -> "PiecewiseProfile":
        return cls(np.empty(0), np.zeros(1), np.array([float(c)]))

    @classmethod
    def from_pieces(cls, breaks: Sequence[float], pieces: Sequence) -> "PiecewiseProfile":
        """Build from breakpoints and pieces given as constants or ``(slope, intercept)``."""
        slopes, icpts = [], []
        for p in pieces:
            if np.ndim(p) == 0:
                slopes.append(0.0)
                icpts.append(float(p))
            else:
                slopes.append(float(p[0]))
                icpts.append(float(p[1]))
        return cls(np.asarray(breaks, dtype=float), np.asarray(slopes), np.asarray(icpts))

    @classmethod
    def from_cells(cls, edges: np.ndarray, values: np.ndarray) -> "PiecewiseProfile":
        """Piecewise constant profile from cell averages; constant beyond the grid."""
        edges = np.asarray(edges, dtype=float)
        values = np.asarray(values, dtype=float)
        if edges.size != values.size + 1:
            raise ProfileError("need n + 1 edges for n cells")
        pieces = np.concatenate([values[:1], values, values[-1:]])
        return cls(edges, np.zeros(pieces.size), pieces)

    # -- evaluation --------------------------------------------------------
    def _piece(self, x, side: str = "+"):
        return np.searchsorted(self.breaks, x, side="right" if side == "+" else "left")

    def __call__(self, x):
        i = self._piece(x)
        return self.slopes[i] * x + self.intercepts[i]

    def value(self, x, side: str = "+"):
        i = self._piece(x, side)
        return self.slopes[i] * x + self.intercepts[i]

    def limits(self, x):
        """``(u(x-), u(x+))``."""
        return self.value(x, "-"), self.value(x, "+")

    def primitive(self, x):
        """Antiderivative normalised to vanish at the first breakpoint (or at 0)."""
        x = np.asarray(x, dtype=float)
        ref = self.breaks[0] if self.breaks.size else 0.0
        s, c = self.slopes, self.intercepts
        if self.breaks.size:
            b = self.breaks
            # integral of piece i (1..k-1) over [b[i-1], b[i]]
            inner = 0.5 * s[1:-1] * (b[1:] ** 2 - b[:-1] ** 2) + c[1:-1] * (b[1:] - b[:-1])
            cum = np.concatenate([[0.0], np.cumsum(inner)])
            left = np.concatenate([[ref], b])
            base = np.concatenate([[0.0], cum])
        else:
            left = np.array([ref])
            base = np.array([0.0])
        i = self._piece(x)
        lo = left[i]
        out = base[i] + 0.5 * s[i] * (x * x - lo * lo) + c[i] * (x - lo)
        return float(out) if out.ndim == 0 else out

    def integrate(self, a: float, b: float) -> float:
        if a > b:
            raise ProfileError(f"integration bounds reversed: {a} > {b}")
        return float(self.primitive(b) - self.primitive(a))

    def cell_averages(self, edges: np.ndarray) -> np.ndarray:
        P = self.primitive(np.asarray(edges, dtype=float))
        return np.diff(P) / np.diff(edges)

    # -- algebra -----------------------------------------------------------
    def _on(self, breaks: np.ndarray):
        """Slopes and intercepts of ``self`` on the pieces induced by ``breaks``."""
        if breaks.size == 0:
            mids = np.array([0.0])
        else:
            inner = 0.5 * (breaks[1:] + breaks[:-1])
            mids = np.concatenate([[breaks[0] - 1.0], inner, [breaks[-1] + 1.0]])
        i = self._piece(mids)
        return self.slopes[i], self.intercepts[i]

    def _binary(self, other: "PiecewiseProfile", sign: float) -> "PiecewiseProfile":
        b = np.union1d(self.breaks, other.breaks)
        s1, c1 = self._on(b)
        s2, c2 = other._on(b)
        return PiecewiseProfile(b, s1 + sign * s2, c1 + sign * c2)

    def __add__(self, other):
        if isinstance(other, PiecewiseProfile):
            return self._binary(other, 1.0)
        return PiecewiseProfile(self.breaks, self.slopes, self.intercepts + float(other))

    def __sub__(self, other):
        if isinstance(other, PiecewiseProfile):
            return self._binary(other, -1.0)
        return PiecewiseProfile(self.breaks, self.slopes, self.intercepts - float(other))

    def __mul__(self, k: float):
        return PiecewiseProfile(self.breaks, self.slopes * float(k), self.intercepts * float(k))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def reflect(self) -> "PiecewiseProfile":
        """``x -> u(-x)``; one-sided limits swap sides."""
        return PiecewiseProfile(-self.breaks[::-1], -self.slopes[::-1], self.intercepts[::-1].copy())

    def simplify(self, tol: float = 0.0) -> "PiecewiseProfile":
        """Drop breakpoints where neighbouring pieces coincide."""
        if self.breaks.size == 0:
            return self
        s, c = self.slopes, self.intercepts
        same = (np.abs(s[1:] - s[:-1]) <= tol) & (np.abs(c[1:] - c[:-1]) <= tol)
        keep = ~same
        pieces = np.concatenate([[True], keep])
        return PiecewiseProfile(self.breaks[keep], s[pieces], c[pieces])

    def restrict_support(self, a: float, b: float) -> "PiecewiseProfile":
        """Same profile on [a, b), zero elsewhere."""
        if a >= b:
            raise ProfileError("empty support")
        inside = self.breaks[(self.breaks > a) & (self.breaks < b)]
        br = np.concatenate([[a], inside, [b]])
        s, c = self._on(br)
        s = s.copy()
        c = c.copy()
        s[0] = s[-1] = 0.0
        c[0] = c[-1] = 0.0
        return PiecewiseProfile(br, s, c)

    # -- structure ---------------------------------------------------------
    def jumps(self, tol: float = 0.0):
        """Breakpoints where the profile is discontinuous, with ``u(x+) - u(x-)``."""
        if self.breaks.size == 0:
            return np.empty(0), np.empty(0)
        left, right = self.limits(self.breaks)
        d = right - left
        m = np.abs(d) > tol
        return self.breaks[m], d[m]

    def sup_norm(self) -> float:
        if self.breaks.size == 0:
            return abs(float(self.intercepts[0])) if self.slopes[0] == 0 else math.inf
        if self.slopes[0] != 0 or self.slopes[-1] != 0:
            return math.inf
        left, right = self.limits(self.breaks)
        return float(max(np.max(np.abs(left)), np.max(np.abs(right))))

    def range(self) -> tuple[float, float]:
        if self.breaks.size == 0:
            return float(self.intercepts[0]), float(self.intercepts[0])
        left, right = self.limits(self.breaks)
        vals = np.concatenate([left, right])
        return float(vals.min()), float(vals.max())

    def support_hull(self) -> tuple[float, float]:
        """Interval outside of which the profile is affine (first/last breakpoint)."""
        if self.breaks.size == 0:
            return 0.0, 0.0
        return float(self.breaks[0]), float(self.breaks[-1])

    def continuity_midpoints(self) -> np.ndarray:
        return 0.5 * (self.breaks[1:] + self.breaks[:-1])

    # -- serialisation -----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "breaks": self.breaks.tolist(),
            "slopes": self.slopes.tolist(),
            "intercepts": self.intercepts.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PiecewiseProfile":
        if "pieces" in d:
            return cls.from_pieces(d["breaks"], d["pieces"])
        return cls(np.asarray(d["breaks"], dtype=float), np.asarray(d["slopes"], dtype=float),
                   np.asarray(d["intercepts"], dtype=float))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "PiecewiseProfile":
        return cls.from_dict(json.loads(s))

    CSV_HEADER = ("x", "value_left", "value_right", "slope_left", "intercept_left",
                  "slope_right", "intercept_right")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        if self.breaks.size == 0:
            c = repr(float(self.intercepts[0]))
            s = repr(float(self.slopes[0]))
            w.writerow(["nan", c, c, s, c, s, c])
        else:
            left, right = self.limits(self.breaks)
            for i, x in enumerate(self.breaks):
                w.writerow([repr(float(v)) for v in (x, left[i], right[i], self.slopes[i],
                                                     self.intercepts[i], self.slopes[i + 1],
                                                     self.intercepts[i + 1])])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "PiecewiseProfile":
        rows = list(csv.DictReader(io.StringIO(text)))
        if not rows:
            raise ProfileError("empty profile CSV")
        if len(rows) == 1 and math.isnan(float(rows[0]["x"])):
            r = rows[0]
            return cls(np.empty(0), np.array([float(r["slope_right"])]),
                       np.array([float(r["intercept_right"])]))
        xs = np.array([float(r["x"]) for r in rows])
        slopes = [float(rows[0]["slope_left"])]
        icpts = [_intercept(rows[0], "left")]
        for r in rows:
            slopes.append(float(r["slope_right"]))
            icpts.append(_intercept(r, "right"))
        return cls(xs, np.array(slopes), np.array(icpts))

    def __repr__(self) -> str:
        return f"PiecewiseProfile({self.breaks.size} breaks, range={self.range()})"


def _intercept(row: dict, side: str) -> float:
    key = f"intercept_{side}"
    if row.get(key) not in (None, ""):
        return float(row[key])
    return float(row[f"value_{side}"]) - float(row[f"slope_{side}"]) * float(row["x"])


# -- module-level operations ----------------------------------------------------

def one_sided_limits(p: PiecewiseProfile, x: float) -> tuple[float, float]:
    left, right = p.limits(x)
    return float(left), float(right)


def integrate(p: PiecewiseProfile, a: float, b: float) -> float:
    return p.integrate(a, b)


def _segments(p: PiecewiseProfile, a: float, b: float):
    inner = p.breaks[(p.breaks > a) & (p.breaks < b)]
    pts = np.concatenate([[a], inner, [b]])
    s, e = pts[:-1], pts[1:]
    i = p._piece(0.5 * (s + e))
    return s, e, p.slopes[i], p.intercepts[i]


def abs_integral(p: PiecewiseProfile, a: float, b: float) -> float:
    """Exact ``int_a^b |p|``, splitting affine pieces at their zeros."""
    if a > b:
        raise ProfileError(f"integration bounds reversed: {a} > {b}")
    if a == b:
        return 0.0
    s, e, al, be = _segments(p, a, b)
    gs, ge = al * s + be, al * e + be
    same = gs * ge >= 0
    out = np.where(same, 0.5 * np.abs(gs + ge) * (e - s), 0.0)
    cross = ~same
    if np.any(cross):
        r = -be[cross] / al[cross]
        out[cross] = 0.5 * (np.abs(gs[cross]) * (r - s[cross]) + np.abs(ge[cross]) * (e[cross] - r))
    return float(out.sum())


def l1_distance(p: PiecewiseProfile, q: PiecewiseProfile, a: float, b: float) -> float:
    return abs_integral(p - q, a, b)


def primitive_min(g: PiecewiseProfile, a: float, b: float, ref: float | None = None):
    """Minimum over ``y`` in ``[a, b]`` of ``int_ref^y g`` and its minimiser."""
    if a > b:
        raise ProfileError("empty interval")
    ref = a if ref is None else ref
    cand = [a, b]
    inner = g.breaks[(g.breaks > a) & (g.breaks < b)]
    cand.extend(inner.tolist())
    s, e, al, be = _segments(g, a, b)
    nz = al != 0
    r = np.full(s.shape, np.nan)
    r[nz] = -be[nz] / al[nz]
    ok = nz & (r > s) & (r < e)
    cand.extend(r[ok].tolist())
    cand = np.asarray(cand)
    vals = g.primitive(cand) - g.primitive(ref)
    k = int(np.argmin(vals))
    return float(vals[k]), float(cand[k])


class LRResult(NamedTuple):
    L: float | None
    R: float | None
    L_whole: bool
    R_whole: bool


def _violation_set(omega: PiecewiseProfile, f: ConvexFlux, T: float, lo: float, hi: float, sign: float):
    """Sub-intervals of (lo, hi) where ``sign * (x - T f'(omega(x))) > 0``."""
    out = []
    s, e, al, be = _segments(omega, lo, hi)
    quad = f.spec is not None and f.spec.get("kind") == "quadratic"
    for si, ei, a_, b_ in zip(s, e, al, be):
        if quad:
            # f' affine => g(x) = x - T*(2 a2 (a_ x + b_) + a1) is affine
            a2, a1 = f.spec["a2"], f.spec["a1"]
            k = 1.0 - 2.0 * T * a2 * a_
            c = -T * (2.0 * a2 * b_ + a1)

            def g(x, k=k, c=c):
                return sign * (k * x + c)

            roots = [-c / k] if k != 0 else []
        else:
            def g(x, a_=a_, b_=b_):
                return sign * (x - T * float(f.deriv(a_ * x + b_)))

            roots = []
        _collect_positive(g, si, ei, roots, out)
    return out


def _collect_positive(g, s, e, roots, out, n_samples: int = 257):
    tol = 1e-12
    fin_s = s if np.isfinite(s) else None
    fin_e = e if np.isfinite(e) else None
    # treat infinite ends through the affine-piece asymptotics by sampling far out
    lo = fin_s if fin_s is not None else (min(fin_e, 0.0) - 1e6 if fin_e is not None else -1e6)
    hi = fin_e if fin_e is not None else (max(lo, 0.0) + 1e6)
    pts = [lo, hi]
    if roots:
        pts.extend(r for r in roots if lo < r < hi)
    else:
        xs = np.linspace(lo, hi, n_samples)
        vals = [g(x) for x in xs]
        for i in range(len(xs) - 1):
            if (vals[i] > 0) != (vals[i + 1] > 0):
                pts.append(brentq(g, xs[i], xs[i + 1], xtol=1e-13))
    pts = np.unique(pts)
    for a, b in zip(pts[:-1], pts[1:]):
        if g(0.5 * (a + b)) > tol:
            aa = -math.inf if (fin_s is None and a == lo) else a
            bb = math.inf if (fin_e is None and b == hi) else b
            out.append((aa, bb))


def compute_LR(omega: PiecewiseProfile, pair: FluxPair, T: float) -> LRResult:
    """Outermost abscissas beyond which backward characteristics miss the interface.

    ``L`` is ``None`` when every ``L < 0`` fails (the left tail violates the
    condition); ``L_whole`` flags the case where all ``L < 0`` qualify and
    ``L`` is reported as ``-0.0``.  Symmetrically for ``R``.
    """
    if T <= 0:
        raise ProfileError("T must be positive")
    vl = _violation_set(omega, pair.f_l, T, -math.inf, 0.0, 1.0)
    vr = _violation_set(omega, pair.f_r, T, 0.0, math.inf, -1.0)
    if not vl:
        L, L_whole = -0.0, True
    else:
        inf_v = min(a for a, _ in vl)
        L, L_whole = (None if inf_v == -math.inf else float(inf_v)), False
    if not vr:
        R, R_whole = 0.0, True
    else:
        sup_w = max(b for _, b in vr)
        R, R_whole = (None if sup_w == math.inf else float(sup_w)), False
    return LRResult(L, R, L_whole, R_whole)


class OleinikViolation(NamedTuple):
    x: float
    kind: str  # "slope" or "jump"
    excess: float
    x_end: float | None = None


def oleinik_check(u: PiecewiseProfile, t: float, a: float, tol: float = 1e-9) -> list[OleinikViolation]:
    """Violations of ``u_x <= 1/(a t)`` on R \\ {0}; empty list means admissible."""
    if t <= 0:
        raise ProfileError("t must be positive")
    bound = 1.0 / (a * t)
    out = []
    pts = np.concatenate([[-math.inf], u.breaks, [math.inf]])
    for i, s in enumerate(u.slopes):
        if s > bound + tol:
            out.append(OleinikViolation(float(pts[i]), "slope", float(s - bound), float(pts[i + 1])))
    for x, d in zip(*u.jumps()):
        if x != 0.0 and d > tol:
            out.append(OleinikViolation(float(x), "jump", float(d)))
    return out
