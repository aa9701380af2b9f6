"""Membership in the set of initial data reaching a target profile, and its geometry.

With ``D(y) = int (u0 - u0*)`` the membership inequalities at an arrival
point ``xb`` read: some ``yb`` in ``C0(u*, xb)`` has ``D(yb) <= D(y)`` for all
``y`` left of ``min C0`` and all ``y`` right of ``max C0``.  Since ``D`` is
piecewise quadratic for piecewise-affine data, both sides are minimised
exactly; the *margin* ``min_C0 D - min(inf_left D, inf_right D)`` is positive
exactly when the inequalities fail.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .backward import influence_window, reconstruct
from .characteristics import C0Set, Tracer
from .flux import Connection
from .forward import GridSpec, evolve_forward
from .profile import PiecewiseProfile, compute_LR, l1_distance, primitive_min

# tolerance budget tol = C1 * dx + C2 * sqrt(dx) * n_shocks, frozen after calibration
TOL_C1 = 10.0
TOL_C2 = 2.0
EXACT_TOL = 1e-8
NON_MEMBER_FACTOR = 3.0
EDGE_BUFFER_CELLS = 10
EDGE_BUFFER_CBRT = 2.0
N_UNIFORM = 41


class Witness(NamedTuple):
    x_bar: float
    y_bar: float
    side: str  # which inequality binds: "left" (y < min C0) or "right" (y > max C0)
    margin: float


@dataclass
class MembershipReport:
    verdict: str
    witnesses: list
    tolerance_budget: float
    worst_margin: float
    n_points: int
    margins: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "tolerance_budget": self.tolerance_budget,
                "worst_margin": self.worst_margin, "n_points": self.n_points,
                "witnesses": [w._asdict() for w in self.witnesses]}


def tolerance_budget(h: float, n_shocks: int) -> float:
    if h <= 0:
        return EXACT_TOL
    return TOL_C1 * h + TOL_C2 * math.sqrt(h) * max(n_shocks, 1)


def _tail_inf(g: PiecewiseProfile, y: float, left: bool, far: float) -> float:
    """inf of ``D`` over ``y' < y`` (left) or ``y' > y`` (right), with ``D(0) = 0``.

    Beyond the outermost breakpoint ``g`` is affine, so the tail is either
    unbounded below or attains its infimum at a finite point included below.
    """
    i = 0 if left else -1
    s, c = float(g.slopes[i]), float(g.intercepts[i])
    sign = 1.0 if left else -1.0
    # D -> -inf in the tail iff sign * g -> +inf or stays positive
    if sign * s < 0 or (s == 0 and sign * c > 0):
        return -math.inf
    ends = [far]
    if s != 0:
        ends.append(-c / s)
    if left:
        lo = min(min(ends), y)
        return primitive_min(g, lo, y, ref=0.0)[0] if lo < y else float(g.primitive(y) - g.primitive(0.0))
    hi = max(max(ends), y)
    return primitive_min(g, y, hi, ref=0.0)[0] if hi > y else float(g.primitive(y) - g.primitive(0.0))


def point_margin(g: PiecewiseProfile, c0: C0Set, far_left: float, far_right: float):
    """Margin of the membership inequalities at one arrival point, with the best yb."""
    best, ybest = math.inf, math.nan
    for a, b in c0.intervals:
        v, y = primitive_min(g, a, b, ref=0.0)
        if v < best:
            best, ybest = v, y
    il = _tail_inf(g, c0.min, True, far_left)
    ir = _tail_inf(g, c0.max, False, far_right)
    side = "left" if il <= ir else "right"
    return best - min(il, ir), ybest, side


def edge_buffer(h: float) -> float:
    """Half-width of the zone around jumps of omega where a grid solution is unresolved.

    Compressions focusing on the interface are smeared over O(dx**(1/3)),
    far more than O(dx), so the zone scales with the cube root.
    """
    if h <= 0:
        return 1e-9
    return max(EDGE_BUFFER_CELLS * h, EDGE_BUFFER_CBRT * h ** (1.0 / 3.0))


def sample_points(omega: PiecewiseProfile, L, R, window, h: float, n_uniform: int = N_UNIFORM):
    """Continuity points of omega: breakpoint midpoints, a grid on [L, R] and on the window."""
    a, b = window
    br = np.concatenate([[a], omega.breaks[(omega.breaks > a) & (omega.breaks < b)], [b]])
    pts = list(0.5 * (br[1:] + br[:-1]))
    if L is not None and R is not None and L < R:
        pts.extend(np.linspace(L, R, n_uniform)[1:-1])
    pts.extend(np.linspace(a, b, n_uniform)[1:-1])
    pts = np.unique(np.asarray(pts))
    buf = edge_buffer(h)
    bad = np.concatenate([omega.breaks, [0.0]])
    keep = np.all(np.abs(pts[:, None] - bad[None, :]) > max(buf, 1e-9), axis=1)
    keep &= (pts > a + buf) & (pts < b - buf)
    return pts[keep]


def _count_shocks(omega: PiecewiseProfile, scale: float) -> int:
    xs, _ = omega.jumps(tol=1e-9 * max(1.0, scale))
    return int(xs.size)


def membership_test(conn: Connection, omega: PiecewiseProfile, u0: PiecewiseProfile, T: float,
                    grid: GridSpec | None = None, *, u0_star: PiecewiseProfile | None = None,
                    solution=None, tracer: Tracer | None = None, tol: float | None = None,
                    window: tuple | None = None, x_samples: Sequence[float] | None = None
                    ) -> MembershipReport:
    """Decide whether ``u0`` evolves into ``omega`` at time ``T``.

    ``u0_star`` and ``solution`` (the solution issued from ``u0_star``) may be
    supplied, e.g. in closed form; otherwise they come from a
    backward-forward reconstruction on ``grid``.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if solution is None or u0_star is None:
        if grid is None:
            raise ValueError("grid required when u0_star/solution are not given")
        run = reconstruct(conn, omega, T, grid)
        u0_star, solution = run.u0_star, run.solution
    tr = tracer or Tracer(solution)
    h = tr.h
    if window is None:
        if grid is not None:
            window = influence_window(conn, omega, T, grid)
        else:
            lo, hi = omega.support_hull()
            lip = T * conn.pair.max_speed(*omega.range())
            window = (lo - 2 * lip - 1.0, hi + 2 * lip + 1.0)
    LR = compute_LR(omega, conn.pair, T)
    pts = np.asarray(x_samples) if x_samples is not None else sample_points(omega, LR.L, LR.R, window, h)
    g = (u0 - u0_star).simplify()
    lo_g, hi_g = g.support_hull()
    lip = T * conn.pair.max_speed(*omega.range())
    far_left = min(lo_g, window[0]) - 2 * lip - 1.0
    far_right = max(hi_g, window[1]) + 2 * lip + 1.0
    if tol is None:
        tol = tolerance_budget(h, _count_shocks(omega, omega.sup_norm()))
    margins, witnesses = [], []
    for xb in pts:
        c0 = tr.c0(float(xb))
        m, yb, side = point_margin(g, c0, far_left, far_right)
        margins.append((float(xb), m))
        if m > tol:
            witnesses.append(Witness(float(xb), float(yb), side, float(m)))
    worst = max((m for _, m in margins), default=-math.inf)
    if worst <= tol:
        verdict = "member"
    elif worst > NON_MEMBER_FACTOR * tol:
        verdict = "non_member"
    else:
        verdict = "inconclusive"
    witnesses.sort(key=lambda w: -w.margin)
    return MembershipReport(verdict, witnesses, float(tol), float(worst), len(pts), margins)


def cone_ray(u0_star: PiecewiseProfile, u0: PiecewiseProfile, lam: float) -> PiecewiseProfile:
    """``u0* + lam (u0 - u0*)``."""
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return (u0_star + (u0 - u0_star) * lam).simplify()


def v0_generator(interval: tuple[float, float], seed: int, amplitude: float,
                 n_pieces: int = 8) -> PiecewiseProfile:
    """Random step function on ``interval`` whose primitive is nonnegative and vanishes at both ends.

    The primitive is sampled as a random nonnegative polyline pinned to zero at
    the endpoints and then differentiated, so
    ``int_{y_min}^{y} v0 >= 0`` and ``int_{y}^{y_max} v0 <= 0`` on the interval.
    """
    y0, y1 = map(float, interval)
    if not y1 > y0:
        raise ValueError(f"degenerate interval [{y0}, {y1}]")
    if amplitude == 0:
        return PiecewiseProfile.constant(0.0)
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.uniform(y0, y1, n_pieces - 1))
    knots = np.concatenate([[y0], cuts, [y1]])
    width = np.diff(knots)
    V = np.concatenate([[0.0], rng.uniform(0.0, 1.0, n_pieces - 1), [0.0]])
    V *= abs(amplitude) * width.min()
    vals = np.diff(V) / width
    return PiecewiseProfile.from_pieces(knots, np.concatenate([[0.0], vals, [0.0]]))


class ProbeRow(NamedTuple):
    lam: float
    distance: float
    verdict: str
    worst_margin: float


def convexity_probe(conn: Connection, omega: PiecewiseProfile, u0_a: PiecewiseProfile,
                    u0_b: PiecewiseProfile, lambdas: Sequence[float], T: float, grid: GridSpec,
                    *, u0_star=None, solution=None, check_members: bool = True) -> dict:
    """Forward-solve blends ``lam u0_a + (1 - lam) u0_b`` and test each for membership."""
    if solution is None or u0_star is None:
        run = reconstruct(conn, omega, T, grid)
        u0_star, solution = run.u0_star, run.solution
    tr = Tracer(solution)
    window = influence_window(conn, omega, T, grid)
    kw = dict(u0_star=u0_star, solution=solution, tracer=tr, window=window)
    endpoints = {}
    if check_members:
        for name, u in (("a", u0_a), ("b", u0_b)):
            endpoints[name] = membership_test(conn, omega, u, T, grid, **kw).verdict
    rows = []
    for lam in lambdas:
        blend = (u0_a * lam + u0_b * (1.0 - lam)).simplify()
        sol = evolve_forward(conn, blend, T, grid)
        d = l1_distance(sol.omega, omega, *window)
        rep = membership_test(conn, omega, blend, T, grid, **kw)
        rows.append(ProbeRow(float(lam), float(d), rep.verdict, rep.worst_margin))
    return {"endpoints": endpoints, "rows": rows,
            "refined_gap": refined_condition_gap(tr, omega, conn, T, window)}


def refined_condition_gap(tracer: Tracer, omega: PiecewiseProfile, conn: Connection, T: float,
                          window: tuple, n: int = 401) -> float:
    """Largest distance from C0 at a near-interface continuity point to the closure of singleton C0 sets.

    Zero (up to sampling) means the sufficient condition for convexity holds.
    """
    LR = compute_LR(omega, conn.pair, T)
    if LR.L is None or LR.R is None or not LR.L < LR.R:
        return 0.0
    xs = np.linspace(window[0], window[1], n)
    sets = [tracer.c0(float(x)) for x in xs]
    singles = np.array([c.min for c in sets if c.max - c.min <= tracer.gap_tol])
    if singles.size == 0:
        return math.inf
    buf = edge_buffer(tracer.h)
    worst = 0.0
    for x, c in zip(xs, sets):
        if not (LR.L + buf < x < LR.R - buf) or np.min(np.abs(omega.breaks - x)) <= buf or abs(x) <= buf:
            continue
        d = min(float(np.min(np.maximum(np.maximum(a - singles, singles - b), 0.0))) for a, b in c.intervals)
        worst = max(worst, d)
    return worst


def hyperplane_identity_check(conn: Connection, omega: PiecewiseProfile, u0: PiecewiseProfile, T: float,
                              u0_star: PiecewiseProfile, x1: float | None = None, x2: float | None = None,
                              x_max: float | None = None) -> float | None:
    """``|int_{theta1(0)}^{theta2(0)} (u0 - u0*)|`` for two points right of R; None if not applicable."""
    LR = compute_LR(omega, conn.pair, T)
    if LR.R is None:
        return None
    R = max(LR.R, 0.0)
    if x1 is None or x2 is None:
        hi = x_max if x_max is not None else (omega.support_hull()[1] + 1.0)
        if not hi > R:
            return None
        x1, x2 = R + 0.25 * (hi - R), R + 0.75 * (hi - R)
    if not (R <= x1 < x2):
        return None
    fr = conn.pair.f_r
    th = [x - T * float(fr.deriv(omega(x))) for x in (x1, x2)]
    if th[0] < 0 or th[1] < 0:
        return None
    return abs((u0 - u0_star).integrate(min(th), max(th)))
