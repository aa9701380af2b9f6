import math

import pytest

from abconslaw.backward import evolve_backward, influence_window, mirrored_connection, reconstruct
from abconslaw.catalogue import burgers_connection
from abconslaw.flux import FluxError
from abconslaw.forward import GridSpec
from abconslaw.profile import PiecewiseProfile, l1_distance

CONN = burgers_connection(-1.0)


def test_mirrored_connection_values():
    m = mirrored_connection(CONN)
    assert (m.A, m.B, m.gamma) == (CONN.B_bar, CONN.A_bar, CONN.gamma)


def test_stationary_state_is_fixed():
    g = GridSpec(-6.0, 6.0, 240)
    omega = PiecewiseProfile.from_pieces([0.0], [CONN.A, CONN.B])
    run = reconstruct(CONN, omega, 1.0, g)
    assert l1_distance(run.u0_star, omega, -6.0, 6.0) < 1e-10
    assert run.residual < 1e-10


def test_influence_windows(case2, case3, grid):
    assert influence_window(case3.conn, case3.omega, 1.0, grid) == (-6.0, 8.0)
    assert influence_window(case2.conn, case2.omega, 1.0, grid) == (-10.0, 20.0)
    with pytest.raises(FluxError):
        influence_window(case3.conn, case3.omega, 1.0, GridSpec(-2.0, 2.0, 40))


def test_backward_matches_closed_form_vertex(case2, case3, run2, run3, grid):
    assert l1_distance(run2.u0_star, case2.u0, *run2.window) <= 0.02
    # the omega3 vertex carries a focusing ramp, so the first-order error is O(dx^(1/2))
    err = l1_distance(run3.u0_star, case3.u0, *run3.window)
    assert err <= 3.0 * math.sqrt(grid.dx)


def test_reconstruction_residuals(run2, run3, grid):
    assert run2.residual <= 0.05
    assert run3.residual <= 8.0 * math.sqrt(grid.dx)


def test_backward_forward_is_nearly_idempotent(case2, run2, grid):
    again = evolve_backward(case2.conn, run2.omega_rec, 1.0, grid)
    assert l1_distance(again, run2.u0_star, *run2.window) <= 1e-3


def test_report_fields(run2):
    d = run2.to_dict()
    assert set(d) == {"residual", "window", "grid", "runtime"}
    assert d["grid"]["n_cells"] == 4000 and d["runtime"] > 0

