"""Genuine/interface characteristics, departure sets and the flux functional.

Works on any solution object exposing ``conn``, ``T``, ``u0``, ``omega``,
``trace_times``, ``trace_l``, ``trace_r``, ``iface_flux``, ``h`` and
``value(x, t, side)`` -- both numerical solves and closed forms qualify.

Backward from ``(x, T)`` a characteristic runs straight with speed
``f'(omega(x))``.  If it meets ``x = 0`` at ``tau2`` it may dwell on the
interface while the interface flux stays at ``gamma``, then leave at some
``tau1 <= tau2`` to the right (if ``u_r(tau1) < theta_r``) or to the left (if
``u_l(tau1) > theta_l``), again along a straight line.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .profile import PiecewiseProfile

MIN_RUN = 2


class CharacteristicError(RuntimeError):
    pass


@dataclass(frozen=True)
class Characteristic:
    """Polygonal curve ``x = zeta(t)``; vertices are ``(t, x)`` with increasing t.

    ``tau1``/``tau2`` bound the stay on the interface (``None`` if the curve never
    touches it); ``side_before`` is where the curve lies for ``t < tau1`` and
    ``side_after`` for ``t > tau2``.
    """

    vertices: tuple
    tau1: float | None = None
    tau2: float | None = None
    side_before: str = "none"
    side_after: str = "none"

    def __post_init__(self):
        ts = [v[0] for v in self.vertices]
        if len(ts) < 2 or any(b < a for a, b in zip(ts, ts[1:])):
            raise CharacteristicError("vertices must have nondecreasing times")

    @classmethod
    def polyline(cls, ts: Sequence[float], xs: Sequence[float]) -> "Characteristic":
        return cls(tuple((float(t), float(x)) for t, x in zip(ts, xs)))

    @property
    def ts(self) -> np.ndarray:
        return np.array([v[0] for v in self.vertices])

    @property
    def xs(self) -> np.ndarray:
        return np.array([v[1] for v in self.vertices])

    @property
    def departure(self) -> float:
        return self.vertices[0][1]

    @property
    def arrival(self) -> float:
        return self.vertices[-1][1]

    def position(self, t):
        return np.interp(t, self.ts, self.xs)

    def segments(self):
        """Non-degenerate pieces as (t_a, t_b, x_a, slope)."""
        out = []
        for (ta, xa), (tb, xb) in zip(self.vertices, self.vertices[1:]):
            if tb > ta:
                out.append((ta, tb, xa, (xb - xa) / (tb - ta)))
        return out

    def max_slope(self) -> float:
        return max((abs(s) for *_, s in self.segments()), default=0.0)

    def to_dict(self) -> dict:
        return {"vertices": [list(v) for v in self.vertices], "tau1": self.tau1, "tau2": self.tau2,
                "side_before": self.side_before, "side_after": self.side_after}


@dataclass(frozen=True)
class C0Set:
    """Departure points at t = 0 of the characteristics reaching (x, T)."""

    x: float
    intervals: tuple
    flagged: bool = False

    @property
    def min(self) -> float:
        return self.intervals[0][0]

    @property
    def max(self) -> float:
        return self.intervals[-1][1]

    @property
    def n_components(self) -> int:
        return len(self.intervals)

    def contains(self, y: float, tol: float = 0.0) -> bool:
        return any(a - tol <= y <= b + tol for a, b in self.intervals)

    def to_dict(self) -> dict:
        return {"x": self.x, "intervals": [list(i) for i in self.intervals],
                "min": self.min, "max": self.max, "n_components": self.n_components,
                "flagged": self.flagged}


class _Exit(NamedTuple):
    y: float
    tau1: float
    side: str


def default_flux_tol(sol) -> float:
    h = float(getattr(sol, "h", 0.0))
    return 5.0 * sol.conn.lip * h if h > 0 else 1e-9


class Tracer:
    """Precomputed interface data of one solution, reusable across arrival points."""

    def __init__(self, sol, flux_tol: float | None = None):
        self.sol = sol
        self.conn = sol.conn
        self.pair = sol.conn.pair
        self.T = float(sol.T)
        self.h = float(getattr(sol, "h", 0.0))
        self.flux_tol = default_flux_tol(sol) if flux_tol is None else flux_tol
        self.omega = sol.omega
        self.u0 = sol.u0
        ts = np.asarray(sol.trace_times, dtype=float)
        ul = np.asarray(sol.trace_l, dtype=float)
        ur = np.asarray(sol.trace_r, dtype=float)
        self.ts, self.ul, self.ur = ts, ul, ur
        self.E = np.asarray(sol.iface_flux) <= self.conn.gamma + self.flux_tol
        fl, fr = self.pair.f_l, self.pair.f_r
        # exits on each side and their departure points
        sl = np.asarray(fl.deriv(ul), dtype=float)
        sr = np.asarray(fr.deriv(ur), dtype=float)
        self.yl = -ts * sl
        self.yr = -ts * sr
        self.left_side = ul > fl.theta
        self.right_side = ur < fr.theta
        self.left_ok = self.left_side & self._consistent(self.yl, ul, fl)
        self.right_ok = self.right_side & self._consistent(self.yr, ur, fr)
        # start index of the run of E containing each index
        start = np.zeros(ts.size, dtype=int)
        s = 0
        for k in range(ts.size):
            if not self.E[k]:
                s = k + 1
            start[k] = s
        self.run_start = start
        self.gap_tol = max(3.0 * self.h, 3.0 * self.conn.lip * float(np.max(np.diff(ts))))

    def _consistent(self, y, w, f):
        """Exit value must be one the initial datum carries near the departure point."""
        h = self.h
        tolw = self._value_tol(w, f)
        if h > 0:
            probes = [self.u0(y + k * h) for k in (-2, -1, 0, 1, 2)]
        else:
            probes = [self.u0.value(y, "-"), self.u0.value(y, "+")]
        lo = np.minimum.reduce(probes)
        hi = np.maximum.reduce(probes)
        return (w >= lo - tolw) & (w <= hi + tolw)

    def _value_tol(self, w, f):
        df = np.abs(np.asarray(f.deriv(w), dtype=float))
        a = max(f.convexity_bound, 1e-12)
        by_slope = np.where(df > 0, self.flux_tol / np.maximum(df, 1e-300), np.inf)
        return np.maximum(np.minimum(by_slope, math.sqrt(2.0 * self.flux_tol / a)), 1e-9)

    # -- arrival ------------------------------------------------------------
    def arrival(self, x: float, side: str):
        """(speed, tau2) of the backward characteristic from (x, T); tau2 None if no hit."""
        if x == 0.0:
            f = self.pair.f_l if side == "-" else self.pair.f_r
            return float(f.deriv(self.omega.value(0.0, side))), self.T
        f = self.pair.f_l if x < 0 else self.pair.f_r
        s = float(f.deriv(self.omega.value(x, side)))
        if s == 0.0 or (x < 0) == (s > 0):
            return s, None
        tau2 = self.T - x / s
        return s, (tau2 if tau2 >= 0.0 else None)

    def exits(self, x: float, side: str, relaxed: bool = False) -> tuple[float, float | None, list[_Exit]]:
        """Admissible departures of characteristics reaching (x, T) from ``side``.

        ``relaxed`` drops the check that the exit value is carried by the
        initial datum near the departure point; smeared traces near focusing
        waves can fail it everywhere.
        """
        s, tau2 = self.arrival(x, side)
        left_ok, right_ok = (self.left_side, self.right_side) if relaxed else (self.left_ok, self.right_ok)
        if tau2 is None:
            return s, None, [_Exit(x - self.T * s, self.T, "none")]
        ts = self.ts
        k2 = int(np.searchsorted(ts, tau2, side="right") - 1)
        k2 = min(max(k2, 0), ts.size - 1)
        out: list[_Exit] = []
        arrive_left = x < 0 or (x == 0 and side == "-")
        # direct crossing onto the far side, no dwell
        kc = k2
        if arrive_left and right_ok[kc]:
            out.append(_Exit(float(self.yr[kc] * tau2 / ts[kc]) if ts[kc] > 0 else 0.0, tau2, "right"))
        if not arrive_left and left_ok[kc]:
            out.append(_Exit(float(self.yl[kc] * tau2 / ts[kc]) if ts[kc] > 0 else 0.0, tau2, "left"))
        if tau2 == 0.0:
            out.append(_Exit(0.0, 0.0, "zero"))
        # dwell on the interface down to tau1
        kE = k2 if self.E[k2] else (k2 + 1 if k2 + 1 < ts.size and self.E[k2 + 1] else None)
        if kE is not None:
            k0 = int(self.run_start[kE])
            kh = min(kE, k2)
            if kE - k0 + 1 >= MIN_RUN or k0 == 0:
                idx = np.arange(k0, kh + 1)
                for ok, ys, name in ((left_ok, self.yl, "left"), (right_ok, self.yr, "right")):
                    sel = idx[ok[idx]]
                    sel = _drop_short_runs(sel)
                    out.extend(_Exit(float(ys[k]), float(ts[k]), name) for k in sel)
                if k0 == 0:
                    out.append(_Exit(0.0, 0.0, "zero"))
        return s, tau2, out

    def characteristic(self, x: float, s: float, tau2, e: _Exit, side: str) -> Characteristic:
        T = self.T
        if tau2 is None:
            return Characteristic(((0.0, e.y), (T, x)))
        after = "left" if (x < 0 or (x == 0 and side == "-")) else "right"
        verts = [(0.0, e.y)]
        if e.tau1 > 0:
            verts.append((e.tau1, 0.0))
        if tau2 > e.tau1 or e.tau1 == 0:
            verts.append((tau2, 0.0))
        if T > tau2:
            verts.append((T, x))
        if len(verts) == 1:
            verts.append((T, x))
        before = e.side if e.side in ("left", "right") else "none"
        return Characteristic(tuple(verts), e.tau1, tau2, before, after)

    def c0(self, x: float) -> C0Set:
        relaxed = False
        ys = self._departures(x, False)
        if not ys:
            relaxed = True
            ys = self._departures(x, True)
        if not ys:
            raise CharacteristicError(f"no admissible characteristic reaches x={x}")
        ys = np.sort(np.asarray(ys))
        comps = []
        a = b = ys[0]
        for y in ys[1:]:
            if y - b > self.gap_tol:
                comps.append((float(a), float(b)))
                a = y
            b = y
        comps.append((float(a), float(b)))
        return C0Set(float(x), tuple(comps), len(comps) > 1 or relaxed)

    def _departures(self, x: float, relaxed: bool) -> list:
        ys = []
        for side in ("-", "+"):
            _, _, ex = self.exits(x, side, relaxed)
            ys.extend(e.y for e in ex)
        return ys

    def extremal(self, x: float, which: str) -> Characteristic:
        if which not in ("min", "max"):
            raise ValueError("which must be 'min' or 'max'")
        side = "-" if which == "min" else "+"
        s, tau2, ex = self.exits(x, side)
        if not ex:
            s, tau2, ex = self.exits(x, side, relaxed=True)
        if not ex:
            raise CharacteristicError(
                f"no admissible exit for x={x}: interface flux never within {self.flux_tol:.3g} of gamma "
                f"near t={tau2}")
        if which == "min":
            e = min(ex, key=lambda e: (e.y, e.tau1))
        else:
            e = max(ex, key=lambda e: (e.y, e.tau1))
        return self.characteristic(x, s, tau2, e, side)


def _drop_short_runs(sel: np.ndarray) -> np.ndarray:
    """Remove isolated indices (runs shorter than MIN_RUN consecutive samples)."""
    if sel.size == 0:
        return sel
    breaks = np.flatnonzero(np.diff(sel) > 1) + 1
    runs = np.split(sel, breaks)
    keep = [r for r in runs if r.size >= MIN_RUN]
    return np.concatenate(keep) if keep else sel[:0]


def trace_extremal(sol, x: float, which: str, tracer: Tracer | None = None) -> Characteristic:
    """Minimal or maximal characteristic through (x, T)."""
    return (tracer or Tracer(sol)).extremal(float(x), which)


def c0_set(sol, x: float, tracer: Tracer | None = None) -> C0Set:
    return (tracer or Tracer(sol)).c0(float(x))


def c0_table(sol, xs: Sequence[float], tracer: Tracer | None = None) -> list[C0Set]:
    tr = tracer or Tracer(sol)
    return [tr.c0(float(x)) for x in xs]


def c0_to_csv(sets: Sequence[C0Set]) -> str:
    lines = ["x,c0_min,c0_max,n_components"]
    lines += [f"{c.x!r},{c.min!r},{c.max!r},{c.n_components}" for c in sets]
    return "\n".join(lines) + "\n"


# -- flux functional and checks ---------------------------------------------------

def _flux_at(pair, x, side):
    return pair.f_l if (x < 0 or (x == 0 and side == "-")) else pair.f_r


def _nodes(sol, ta: float, tb: float, n_min: int = 64):
    times = getattr(sol, "times", None)
    n = n_min
    if times is not None:
        n = max(n, 2 * int(np.count_nonzero((times >= ta) & (times <= tb))))
    return np.linspace(ta, tb, n + 1)


def _on_interface(xa: float, slope: float) -> bool:
    return xa == 0.0 and slope == 0.0


def _trace_side(sol, t, side):
    ts = np.asarray(sol.trace_times)
    tr = sol.trace_l if side == "-" else sol.trace_r
    return np.interp(t, ts, tr)


def flux_functional(sol, zeta: Characteristic, t: float, side: str) -> float:
    """``int_t^T f(u(zeta(s)±, s)) - zeta'(s) u(zeta(s)±, s) ds`` by midpoint quadrature."""
    sd = "-" if side in ("-", "left") else "+"
    pair = sol.conn.pair
    total = 0.0
    for ta, tb, xa, m in zeta.segments():
        a, b = max(ta, t), tb
        if b <= a:
            continue
        nodes = _nodes(sol, a, b)
        mid = 0.5 * (nodes[1:] + nodes[:-1])
        w = np.diff(nodes)
        if _on_interface(xa, m):
            if getattr(sol, "h", 0.0) > 0:
                # finite volumes: the flux through x = 0 is the interface numerical flux
                flux = np.interp(mid, sol.trace_times, sol.iface_flux)
            else:
                f = pair.f_l if sd == "-" else pair.f_r
                flux = f(_trace_side(sol, mid, sd))
            total += float(np.dot(flux, w))
            continue
        xs = xa + m * (mid - ta)
        u = np.asarray(sol.value(xs, mid, sd), dtype=float)
        fl = np.where((xs < 0) | ((xs == 0) & (sd == "-")), pair.f_l(u), pair.f_r(u))
        total += float(np.dot(fl - m * u, w))
    return total


class GicReport(NamedTuple):
    ok: bool
    bad_fraction: float
    max_speed_gap: float
    max_flux_gap: float
    n_samples: int


def is_ab_gic(sol, zeta: Characteristic, tol: float | None = None, n: int = 200,
              max_bad_fraction: float | None = None) -> GicReport:
    """Check characteristic speed off the interface and flux level gamma on it.

    On the interface, closed forms are checked through ``f_l(u_l)`` and
    ``f_r(u_r)``; numerical solutions through the interface numerical flux,
    which is the flux actually crossing ``x = 0``.
    """
    numerical = getattr(sol, "h", 0.0) > 0
    if tol is None:
        tol = 5.0 * sol.conn.lip * sol.h if numerical else 1e-6
    if max_bad_fraction is None:
        max_bad_fraction = 0.05 if numerical else 0.0
    pair, gamma = sol.conn.pair, sol.conn.gamma
    bad = total = 0
    sg = fg = 0.0
    for ta, tb, xa, m in zeta.segments():
        ts = np.linspace(ta, tb, max(3, int(n * (tb - ta) / sol.T) + 2))[1:-1]
        if ts.size == 0:
            continue
        if _on_interface(xa, m):
            if numerical:
                gap = np.abs(np.interp(ts, sol.trace_times, sol.iface_flux) - gamma)
            else:
                ul = _trace_side(sol, ts, "-")
                ur = _trace_side(sol, ts, "+")
                gap = np.maximum(np.abs(pair.f_l(ul) - gamma), np.abs(pair.f_r(ur) - gamma))
            fg = max(fg, float(gap.max()))
            bad += int(np.count_nonzero(gap > tol))
        else:
            xs = xa + m * (ts - ta)
            gaps = []
            for sd in ("-", "+"):
                u = np.asarray(sol.value(xs, ts, sd), dtype=float)
                d = np.where(xs < 0, pair.f_l.deriv(u), pair.f_r.deriv(u))
                gaps.append(np.abs(m - d))
            gap = np.maximum(*gaps)
            sg = max(sg, float(gap.max()))
            bad += int(np.count_nonzero(gap > tol))
        total += ts.size
    frac = bad / total if total else 0.0
    return GicReport(frac <= max_bad_fraction, frac, sg, fg, total)


def rankine_hugoniot_gap(sol, curve: Characteristic, n: int = 200) -> float:
    """Largest difference between the two one-sided integrands of the flux functional."""
    pair = sol.conn.pair
    worst = 0.0
    for ta, tb, xa, m in curve.segments():
        ts = np.linspace(ta, tb, n + 2)[1:-1]
        xs = xa + m * (ts - ta)
        um = np.asarray(sol.value(xs, ts, "-"), dtype=float)
        up = np.asarray(sol.value(xs, ts, "+"), dtype=float)
        f = np.where(xs < 0, pair.f_l(um) - m * um, pair.f_r(um) - m * um)
        g = np.where(xs < 0, pair.f_l(up) - m * up, pair.f_r(up) - m * up)
        worst = max(worst, float(np.max(np.abs(f - g))))
    return worst


def balance_residual(sol, alpha: Characteristic, beta: Characteristic, tau: float) -> float:
    """Mass balance between two curves over [tau, T] minus the flux functionals."""
    if hasattr(sol, "snapshot_index"):
        k = int(sol.snapshot_index(tau))
        tau = float(sol.times[k])
        prof_tau = PiecewiseProfile.from_cells(sol.edges, sol.snapshots[k])
    else:
        prof_tau = sol.profile_at(tau)
        if prof_tau is None:
            raise CharacteristicError("closed-form balance needs tau in {0, T}")
    T = sol.T
    aT, bT = float(alpha.position(T)), float(beta.position(T))
    at, bt = float(alpha.position(tau)), float(beta.position(tau))
    lhs = sol.omega.integrate(aT, bT) - prof_tau.integrate(at, bt)
    rhs = flux_functional(sol, alpha, tau, "-") - flux_functional(sol, beta, tau, "+")
    return abs(lhs - rhs)


def characteristics_json(chars: dict) -> str:
    return json.dumps({str(k): [c.to_dict() for c in v] for k, v in chars.items()}, indent=1)
