"""Backward operator by reflection, and the backward-forward reconstruction."""
from __future__ import annotations

import time
from dataclasses import dataclass

from .flux import Connection, FluxError, _close
from .forward import GridSpec, SpaceTimeSolution, evolve_forward
from .profile import PiecewiseProfile, l1_distance


def mirrored_connection(conn: Connection) -> Connection:
    """Connection (B_bar, A_bar) for the side-swapped flux, cross-checked."""
    m = conn.mirrored()
    if not (_close(m.B, conn.A_bar) and _close(m.A, conn.B_bar)):
        raise FluxError(f"mirrored connection ({m.A}, {m.B}) disagrees with "
                        f"reflected values ({conn.B_bar}, {conn.A_bar})")
    return m


def backward_solve(conn: Connection, omega: PiecewiseProfile, T: float, grid: GridSpec) -> SpaceTimeSolution:
    """Forward solve of the reflected problem; its final state reflected back is u0*."""
    return evolve_forward(mirrored_connection(conn), omega.reflect(), T, grid.reflected())


def evolve_backward(conn: Connection, omega: PiecewiseProfile, T: float, grid: GridSpec) -> PiecewiseProfile:
    """Backward solution operator: reflect, solve forward with (B_bar, A_bar), reflect back."""
    return backward_solve(conn, omega, T, grid).omega.reflect()


def influence_window(conn: Connection, omega: PiecewiseProfile, T: float, grid: GridSpec) -> tuple[float, float]:
    """Sub-interval of the grid unaffected by what lies outside it.

    Each end moves in by ``T`` times the characteristic speed of the boundary
    state; the backward and forward legs move in opposite directions, so the
    absolute speed counts.
    """
    pair = conn.pair
    a = grid.x_min + T * abs(float(pair.f_l.deriv(omega(grid.x_min))))
    b = grid.x_max - T * abs(float(pair.f_r.deriv(omega(grid.x_max))))
    if not a < b:
        raise FluxError(f"influence window empty: [{a:.4g}, {b:.4g}]")
    return a, b


@dataclass(frozen=True, eq=False)
class BackwardRun:
    conn: Connection
    omega: PiecewiseProfile
    T: float
    u0_star: PiecewiseProfile
    omega_rec: PiecewiseProfile
    residual: float
    window: tuple[float, float]
    solution: SpaceTimeSolution
    runtime: float

    def to_dict(self) -> dict:
        return {"residual": self.residual, "window": list(self.window),
                "grid": self.solution.grid.to_dict(), "runtime": self.runtime}


def reconstruct(conn: Connection, omega: PiecewiseProfile, T: float, grid: GridSpec) -> BackwardRun:
    """u0* = S^- omega, then S^+ u0*, with the L1 residual on the influence window."""
    t0 = time.perf_counter()
    u0s = evolve_backward(conn, omega, T, grid)
    sol = evolve_forward(conn, u0s, T, grid)
    rec = sol.omega
    a, b = influence_window(conn, omega, T, grid)
    res = l1_distance(omega, rec, a, b)
    return BackwardRun(conn, omega, T, u0s, rec, res, (a, b), sol, time.perf_counter() - t0)
