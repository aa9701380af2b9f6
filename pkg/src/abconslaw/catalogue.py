"""Closed-form profiles and solutions for Burgers flux with connection A = 4 L0.

All cases use f(u) = u^2/2 on both sides, horizon T = 1 and the connection
``A = 4 L0``, ``B = -4 L0``.  For this family the rarefaction left state is
``v = 0`` and the interface shock is born at ``sigma = 1/4``.

The generic closed form covers profiles

    omega(x) = q  (x < L0),   A  (L0 < x < 0),   p  (x > 0)

with ``0 <= q <= A_bar`` and ``p <= B_bar``.  The left value ``q`` is reached
through a compression wave focusing at ``(L0, T)``, the right value ``p``
through one focusing at ``(0, T)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .flux import Connection, FluxPair, interface_flux, make_connection
from .profile import PiecewiseProfile

T_FIXED = 1.0
SIDE_EPS = 1e-10
TRACE_SAMPLES = 4001


class CatalogueError(ValueError):
    pass


def burgers_connection(L0: float) -> Connection:
    if not L0 < 0:
        raise CatalogueError(f"L0 must be negative, got {L0}")
    return make_connection(FluxPair.burgers(), 4.0 * L0)


def rarefaction_state(L0: float, A: float, T: float = T_FIXED) -> float:
    """Left fan state v for Burgers: the shock born at the interface reaches L0 at T.

    Solving the shock ODE gives ``v = A_bar - 2 sqrt(A L0 / T)`` with ``A_bar = -A``.
    """
    return -A - 2.0 * math.sqrt(A * L0 / T)


def shock_onset(L0: float, A_bar: float) -> float:
    """Time at which the fan edge L0 + t A_bar reaches the interface."""
    return -L0 / A_bar


def shock_curve(t, L0: float, A: float):
    """Shock between the fan (x - L0)/t and the state A: A t + L0 + C sqrt(t)."""
    C = -2.0 * L0 - 0.5 * A
    t = np.asarray(t, dtype=float)
    return A * t + L0 + C * np.sqrt(t)


def shock_curve_ode(ts, L0: float, A: float, rtol: float = 1e-12, atol: float = 1e-13):
    """Integrate the Rankine-Hugoniot ODE x' = ((x - L0)/t + A)/2 from (sigma, 0)."""
    ts = np.asarray(ts, dtype=float)
    t0 = shock_onset(L0, -A)
    sol = solve_ivp(lambda t, y: [0.5 * ((y[0] - L0) / t + A)], (t0, float(ts.max())), [0.0],
                    t_eval=ts, rtol=rtol, atol=atol, method="DOP853")
    if not sol.success:
        raise CatalogueError(sol.message)
    return sol.y[0]


@dataclass(frozen=True, eq=False)
class ClosedFormSolution:
    """Exact solution with the same query surface as a numerical solve.

    Interface data are sampled on ``TRACE_SAMPLES`` equispaced times plus any
    listed event times, so characteristic tracing treats both kinds alike.
    """

    conn: Connection
    T: float
    u0: PiecewiseProfile
    omega: PiecewiseProfile
    func: object
    events: tuple = ()
    h: float = 0.0
    trace_times: np.ndarray = field(init=False)
    trace_l: np.ndarray = field(init=False)
    trace_r: np.ndarray = field(init=False)
    iface_flux: np.ndarray = field(init=False)

    def __post_init__(self):
        ts = np.union1d(np.linspace(0.0, self.T, TRACE_SAMPLES),
                        [e for e in self.events if 0 < e < self.T])
        ul = np.array([self._point(0.0, t, "-") for t in ts])
        ur = np.array([self._point(0.0, t, "+") for t in ts])
        object.__setattr__(self, "trace_times", ts)
        object.__setattr__(self, "trace_l", ul)
        object.__setattr__(self, "trace_r", ur)
        object.__setattr__(self, "iface_flux", interface_flux(self.conn, ul, ur))

    @property
    def dt(self) -> float:
        return float(np.max(np.diff(self.trace_times)))

    def _point(self, x: float, t: float, side: str) -> float:
        eps = SIDE_EPS * max(1.0, abs(x))
        xs = x - eps if side == "-" else x + eps
        if t <= 0.0:
            return float(self.u0(xs))
        if t >= self.T:
            return float(self.omega(xs))
        return float(self.func(xs, t))

    def value(self, x, t, side: str = "+"):
        if np.ndim(x) == 0 and np.ndim(t) == 0:
            return self._point(float(x), float(t), side)
        xb, tb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
        return np.array([self._point(a, b, side) for a, b in zip(xb.ravel(), tb.ravel())]).reshape(xb.shape)

    def traces_at(self, t):
        return self._point(0.0, t, "-"), self._point(0.0, t, "+")

    def profile_at(self, t: float) -> PiecewiseProfile | None:
        if t <= 0:
            return self.u0
        if t >= self.T:
            return self.omega
        return None


def _family_profiles(L0: float, q: float, p: float):
    conn = burgers_connection(L0)
    A, Ab, Bb = conn.A, conn.A_bar, conn.B_bar
    omega = PiecewiseProfile.from_pieces([L0, 0.0], [q, A, p])
    br, pc = [], []
    if q > 0:
        br += [L0 - q]
        pc += [q, (-1.0, L0)]
    else:
        pc += [q]
    br += [L0, 0.0]
    pc += [Ab, Bb]
    if p < Bb:
        br += [-Bb, -p]
        pc += [(-1.0, 0.0), p]
    u0 = PiecewiseProfile.from_pieces(br, pc)
    return conn, omega, u0


def family_solution(L0: float, q: float, p: float) -> ClosedFormSolution:
    """Closed-form forward solution from the backward datum of ``omega = (q, A, p)``."""
    conn, omega, u0 = _family_profiles(L0, q, p)
    A, Ab, Bb = conn.A, conn.A_bar, conn.B_bar
    if not (0.0 <= q <= Ab):
        raise CatalogueError(f"left value must lie in [0, {Ab}], got {q}")
    if p > Bb:
        raise CatalogueError(f"right value must not exceed {Bb}, got {p}")
    sigma = shock_onset(L0, Ab)

    def u(x, t):
        if x < 0:
            if x < L0:
                return q if x < L0 - (1.0 - t) * q else (L0 - x) / (1.0 - t)
            if t <= sigma:
                return (x - L0) / t if x < L0 + t * Ab else Ab
            return (x - L0) / t if x < float(shock_curve(t, L0, A)) else A
        if x < (t - 1.0) * Bb:
            return Bb
        if x <= (t - 1.0) * p:
            return x / (t - 1.0)
        return p

    return ClosedFormSolution(conn, T_FIXED, u0, omega, u, events=(sigma,))


@dataclass(frozen=True, eq=False)
class ExampleCase:
    name: str
    L0: float
    p: float | None
    T: float
    conn: Connection
    omega: PiecewiseProfile
    u0: PiecewiseProfile
    solution: ClosedFormSolution | None = None
    extras: dict = field(default_factory=dict)

    @property
    def sigma(self) -> float:
        return shock_onset(self.L0, self.conn.A_bar)

    @property
    def v(self) -> float:
        return rarefaction_state(self.L0, self.conn.A, self.T)

    def shock(self, t):
        return shock_curve(t, self.L0, self.conn.A)


def u01_profile(L0: float, p: float) -> PiecewiseProfile:
    conn = burgers_connection(L0)
    s = -0.5 * (conn.B + p)
    return PiecewiseProfile.from_pieces([L0, 0.0, s], [conn.A_bar, conn.A, conn.B, p])


def u02_profile(L0: float, p: float) -> PiecewiseProfile:
    conn = burgers_connection(L0)
    Ab, Bb = conn.A_bar, conn.B_bar
    return PiecewiseProfile.from_pieces(
        [5 * L0, L0, 0.0, -L0, -4 * L0, -p],
        [Ab, (-1.0, L0), 2 * Ab, 2 * Bb, Bb, (-1.0, 0.0), p])


def _check_omega3(L0: float, p: float):
    if not L0 < 0:
        raise CatalogueError(f"L0 must be negative, got {L0}")
    if not p < 12 * L0:
        raise CatalogueError(f"need p < 12 L0 = {12 * L0}, got {p}")


def omega3_case(L0: float = -1.0, p: float = -16.0) -> ExampleCase:
    """Profile (A_bar, A, p) whose initial-data set is not convex."""
    _check_omega3(L0, p)
    conn = burgers_connection(L0)
    sol = family_solution(L0, conn.A_bar, p)
    return ExampleCase("omega3", L0, p, T_FIXED, conn, sol.omega, sol.u0, sol,
                       {"u01": u01_profile(L0, p), "u02": u02_profile(L0, p)})


def omega2_case(L0: float = -1.0) -> ExampleCase:
    """Profile (v, A, B_bar) whose initial-data set is convex."""
    conn = burgers_connection(L0)
    v = rarefaction_state(L0, conn.A)
    sol = family_solution(L0, v, conn.B_bar)
    return ExampleCase("omega2", L0, None, T_FIXED, conn, sol.omega, sol.u0, sol)


def omega1_case(L0: float = -1.0, p: float | None = None) -> ExampleCase:
    """Profile (p, A, B_bar) with v < p < A_bar; its vertex solution has a compression shock at (L0, T)."""
    conn = burgers_connection(L0)
    v = rarefaction_state(L0, conn.A)
    if p is None:
        p = 0.5 * (v + conn.A_bar)
    if not (v < p < conn.A_bar):
        raise CatalogueError(f"need {v} < p < {conn.A_bar}, got {p}")
    f = conn.pair.f_l
    if not (f.deriv(conn.A) < L0 / T_FIXED < f.deriv(v)):
        raise CatalogueError("speed ordering f'(A) < L0/T < f'(v) violated")
    sol = family_solution(L0, p, conn.B_bar)
    return ExampleCase("omega1", L0, p, T_FIXED, conn, sol.omega, sol.u0, sol)


def impinging_datum(L0: float = -1.0, w: float | None = None, width: float | None = None) -> PiecewiseProfile:
    """Initial datum reaching omega1 whose rarefactions hit the interface from both sides.

    The vertex datum is raised to ``w > A_bar`` on ``(-width, 0)`` and lowered
    to ``-w`` on ``(0, width)``; both fans are absorbed by x = 0 before the
    shock onset, so the interface flux exceeds gamma early on and the
    departure set splits into two components.
    """
    c = omega1_case(L0)
    ab, bb = c.conn.A_bar, c.conn.B_bar
    w = 1.5 * ab if w is None else float(w)
    width = -0.5 * L0 if width is None else float(width)
    if not w > ab:
        raise CatalogueError(f"need w > A_bar = {ab}, got {w}")
    if not 0 < width < -L0:
        raise CatalogueError(f"width must lie in (0, {-L0}), got {width}")
    if not (-bb == ab):
        raise CatalogueError("impinging datum needs a symmetric connection (B_bar = -A_bar)")
    bump = PiecewiseProfile.from_pieces([-width, 0.0, width], [0.0, w - ab, -w - bb, 0.0])
    return (c.u0 + bump).simplify()


CASE_NAMES = ("omega1", "omega2", "omega3", "u01", "u02", "u_star_omega2", "u_star_omega3")


def get_case(name: str, L0: float = -1.0, p: float = -16.0) -> ExampleCase:
    """Catalogue entry by name; ``u01``/``u02`` carry the omega3 target with their own datum."""
    if name == "omega1":
        return omega1_case(L0)
    if name in ("omega2", "u_star_omega2"):
        c = omega2_case(L0)
        return ExampleCase(name, c.L0, c.p, c.T, c.conn, c.omega, c.u0, c.solution)
    c = omega3_case(L0, p)
    if name in ("omega3", "u_star_omega3"):
        return ExampleCase(name, c.L0, c.p, c.T, c.conn, c.omega, c.u0, c.solution, c.extras)
    if name in ("u01", "u02"):
        return ExampleCase(name, c.L0, c.p, c.T, c.conn, c.omega, c.extras[name], None)
    raise CatalogueError(f"unknown case {name!r}; choose from {CASE_NAMES}")


def c0_omega2(x: float, L0: float = -1.0, T: float = T_FIXED) -> tuple[float, float]:
    """Exact departure set of the omega2 vertex solution through (x, T), for x < 0."""
    conn = burgers_connection(L0)
    f = conn.pair.f_l
    v = rarefaction_state(L0, conn.A, T)
    if x < L0:
        y = x - T * float(f.deriv(v))
        return y, y
    if x < 0:
        return L0 - T * float(f.deriv(v)), (x / float(f.deriv(conn.A)) - T) * float(conn.pair.f_r.deriv(conn.B_bar))
    y = x - T * float(conn.pair.f_r.deriv(conn.B_bar))
    return y, y


def section61_integrals(L0: float, p: float, lam: float, y_bar: float):
    """Integrals over [5 L0, y_bar] of u0*, u01, u02 and of the blend minus u0*.

    The blend is ``lam u01 + (1 - lam) u02``.  Formulas hold for
    ``y_bar`` in ``[L0, -3 L0]``.
    """
    _check_omega3(L0, p)
    if not (L0 <= y_bar <= -3 * L0):
        raise CatalogueError(f"y_bar must lie in [{L0}, {-3 * L0}], got {y_bar}")
    y = y_bar
    if y <= 0:
        i1, i2, ist = 12 * L0**2 + 4 * L0 * y, 16 * L0**2 - 8 * L0 * y, 12 * L0**2 - 4 * L0 * y
    elif y <= -L0:
        i1, i2, ist = 12 * L0**2 - 4 * L0 * y, 16 * L0**2 + 8 * L0 * y, 12 * L0**2 + 4 * L0 * y
    else:
        i1, i2, ist = 12 * L0**2 - 4 * L0 * y, 12 * L0**2 + 4 * L0 * y, 12 * L0**2 + 4 * L0 * y
    blend = lam * (i1 - ist) + (1 - lam) * (i2 - ist)
    return ist, i1, i2, blend


def blend_margin(L0: float, lam: float, y_bar: float) -> float:
    """Closed form of the blend-minus-vertex integral, case by case."""
    y = y_bar
    if y <= 0:
        return 8 * lam * L0 * y + 4 * (1 - lam) * L0 * (L0 - y)
    if y <= -L0:
        return -8 * lam * L0 * y + 4 * (1 - lam) * L0 * (L0 + y)
    return -8 * lam * L0 * y


def section61_table(L0: float = -1.0, p: float = -16.0, lam: float = 0.5, n: int = 9):
    """Rows (y_bar, int u0*, int u01, int u02, blend margin) with a profile-integration cross-check."""
    case = omega3_case(L0, p)
    u01, u02 = case.extras["u01"], case.extras["u02"]
    rows = []
    for y in np.linspace(L0, -3 * L0, n):
        ist, i1, i2, b = section61_integrals(L0, p, lam, float(y))
        a = 5 * L0
        chk = (case.u0.integrate(a, y), u01.integrate(a, y), u02.integrate(a, y))
        err = max(abs(ist - chk[0]), abs(i1 - chk[1]), abs(i2 - chk[2]))
        rows.append((float(y), ist, i1, i2, b, err))
    return rows
