"""Forward and backward solvers for scalar conservation laws with a flux jump at x = 0,
interface-aware characteristics, and membership tests for the set of initial data
reaching a prescribed profile."""

from .flux import Connection, ConvexFlux, FluxError, FluxPair, interface_flux, make_connection
from .profile import PiecewiseProfile, ProfileError, compute_LR, l1_distance, oleinik_check
from .forward import GridSpec, SolverError, SpaceTimeSolution, evolve_forward, interface_traces
from .backward import BackwardRun, evolve_backward, influence_window, reconstruct
from .characteristics import C0Set, Characteristic, Tracer, c0_set, flux_functional, is_ab_gic, trace_extremal
from .initial_set import MembershipReport, convexity_probe, cone_ray, membership_test, v0_generator
from .catalogue import ExampleCase, get_case, omega1_case, omega2_case, omega3_case, section61_integrals

__version__ = "0.1.0"

__all__ = [
    "Connection", "ConvexFlux", "FluxError", "FluxPair", "interface_flux", "make_connection",
    "PiecewiseProfile", "ProfileError", "compute_LR", "l1_distance", "oleinik_check",
    "GridSpec", "SolverError", "SpaceTimeSolution", "evolve_forward", "interface_traces",
    "BackwardRun", "evolve_backward", "influence_window", "reconstruct",
    "C0Set", "Characteristic", "Tracer", "c0_set", "flux_functional", "is_ab_gic", "trace_extremal",
    "MembershipReport", "convexity_probe", "cone_ray", "membership_test", "v0_generator",
    "ExampleCase", "get_case", "omega1_case", "omega2_case", "omega3_case", "section61_integrals",
]
