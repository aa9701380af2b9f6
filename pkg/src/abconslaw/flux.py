"""Uniformly convex flux pairs, interface connections and Godunov-type fluxes.

The conservation law is ``u_t + f(x, u)_x = 0`` with ``f = f_l`` for ``x < 0``
and ``f = f_r`` for ``x > 0``.  A connection ``(A, B)`` selects the admissible
coupling at the interface.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

BISECTION_TOL = 1e-12
CONNECTION_RTOL = 1e-9


class FluxError(ValueError):
    """Raised for inadmissible flux or connection data."""


def _bisect(g: Callable[[float], float], lo: float, hi: float, tol: float = BISECTION_TOL) -> float:
    # g increasing on [lo, hi] with g(lo) <= 0 <= g(hi)
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, abs(mid)):
            break
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ConvexFlux:
    """A uniformly convex flux with its minimizer and branch inverses.

    ``inv_minus`` inverts ``f`` on ``(-inf, theta]`` and ``inv_plus`` on
    ``[theta, +inf)``.  Both accept scalars or arrays when built by
    :meth:`quadratic`; the generic fallback works on scalars only.
    """

    eval: Callable
    deriv: Callable
    convexity_bound: float
    theta: float
    inv_minus: Callable
    inv_plus: Callable
    spec: dict | None = field(default=None, compare=False)

    def __call__(self, u):
        return self.eval(u)

    @property
    def fmin(self) -> float:
        return float(self.eval(self.theta))

    @classmethod
    def quadratic(cls, a2: float, a1: float = 0.0, a0: float = 0.0) -> "ConvexFlux":
        """``f(u) = a2 u^2 + a1 u + a0`` with exact inverse branches."""
        if not a2 > 0:
            raise FluxError(f"quadratic flux needs a2 > 0, got {a2}")
        theta = -a1 / (2.0 * a2)
        fmin = a0 - a1 * a1 / (4.0 * a2)

        def f(u):
            return a2 * u * u + a1 * u + a0

        def df(u):
            return 2.0 * a2 * u + a1

        def _root(y):
            d = (np.asarray(y, dtype=float) - fmin) / a2
            if np.any(d < -1e-12 * max(1.0, abs(fmin))):
                raise FluxError(f"value {y} below flux minimum {fmin}")
            r = np.sqrt(np.maximum(d, 0.0))
            return float(r) if np.ndim(r) == 0 else r

        return cls(
            eval=f,
            deriv=df,
            convexity_bound=2.0 * a2,
            theta=theta,
            inv_minus=lambda y: theta - _root(y),
            inv_plus=lambda y: theta + _root(y),
            spec={"kind": "quadratic", "a2": a2, "a1": a1, "a0": a0},
        )

    @classmethod
    def burgers(cls) -> "ConvexFlux":
        return cls.quadratic(0.5)

    @classmethod
    def from_callables(cls, f, df, theta: float, convexity_bound: float,
                       bracket: float = 1e6) -> "ConvexFlux":
        """Generic convex flux; inverse branches are computed by bisection."""
        if not convexity_bound > 0:
            raise FluxError("convexity bound must be positive")
        fmin = float(f(theta))

        def inv_minus(y):
            y = float(y)
            if y < fmin - BISECTION_TOL:
                raise FluxError(f"value {y} below flux minimum {fmin}")
            lo = theta - 1.0
            while f(lo) < y:
                lo = theta - 2.0 * (theta - lo)
                if theta - lo > bracket:
                    raise FluxError("inverse branch bracket exceeded")
            return _bisect(lambda u: y - f(u), lo, theta)

        def inv_plus(y):
            y = float(y)
            if y < fmin - BISECTION_TOL:
                raise FluxError(f"value {y} below flux minimum {fmin}")
            hi = theta + 1.0
            while f(hi) < y:
                hi = theta + 2.0 * (hi - theta)
                if hi - theta > bracket:
                    raise FluxError("inverse branch bracket exceeded")
            return _bisect(lambda u: f(u) - y, theta, hi)

        return cls(f, df, float(convexity_bound), float(theta), inv_minus, inv_plus)

    def max_speed(self, lo: float, hi: float) -> float:
        """max |f'| over [lo, hi]; f' is monotone so the endpoints suffice."""
        return max(abs(float(self.deriv(lo))), abs(float(self.deriv(hi))))

    def to_dict(self) -> dict:
        if self.spec is None:
            raise FluxError("only quadratic fluxes are serialisable")
        return dict(self.spec)

    @classmethod
    def from_dict(cls, d: dict) -> "ConvexFlux":
        kind = d.get("kind")
        if kind == "quadratic":
            return cls.quadratic(float(d["a2"]), float(d.get("a1", 0.0)), float(d.get("a0", 0.0)))
        if kind == "burgers":
            return cls.burgers()
        raise FluxError(f"unknown flux kind {kind!r}")


@dataclass(frozen=True)
class FluxPair:
    f_l: ConvexFlux
    f_r: ConvexFlux

    def __post_init__(self):
        # normalisation f_l(0)=f_r(0), f_l(1)=f_r(1) holds only up to reparametrisation
        for u in (0.0, 1.0):
            a, b = float(self.f_l(u)), float(self.f_r(u))
            if abs(a - b) > CONNECTION_RTOL * max(1.0, abs(a), abs(b)):
                log.warning("flux pair not normalised: f_l(%g)=%g, f_r(%g)=%g", u, a, u, b)
        if self.f_l.theta < 0 or self.f_r.theta > 1:
            log.warning("flux pair critical points outside expected range: theta_l=%g, theta_r=%g",
                        self.f_l.theta, self.f_r.theta)

    @property
    def convexity_bound(self) -> float:
        return min(self.f_l.convexity_bound, self.f_r.convexity_bound)

    def swapped(self) -> "FluxPair":
        """The mirrored flux: f_r on the left of the interface, f_l on the right."""
        return FluxPair(self.f_r, self.f_l)

    def max_speed(self, lo: float, hi: float) -> float:
        return max(self.f_l.max_speed(lo, hi), self.f_r.max_speed(lo, hi))

    def side(self, x: float, side: str = "-") -> ConvexFlux:
        if x < 0 or (x == 0 and side == "-"):
            return self.f_l
        return self.f_r

    def to_dict(self) -> dict:
        return {"f_l": self.f_l.to_dict(), "f_r": self.f_r.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "FluxPair":
        return cls(ConvexFlux.from_dict(d["f_l"]), ConvexFlux.from_dict(d["f_r"]))

    @classmethod
    def burgers(cls) -> "FluxPair":
        f = ConvexFlux.burgers()
        return cls(f, f)


@dataclass(frozen=True)
class Connection:
    """Connection (A, B) with its reflected values (B_bar, A_bar).

    Build these with :func:`make_connection`; the constructor does not
    re-derive ``B`` from ``A``.
    """

    pair: FluxPair
    A: float
    B: float
    A_bar: float
    B_bar: float
    gamma: float
    critical: bool

    @property
    def lip(self) -> float:
        """Largest characteristic speed among the four connection states."""
        vals = (self.A, self.B, self.A_bar, self.B_bar)
        return self.pair.max_speed(min(vals), max(vals))

    def mirrored(self) -> "Connection":
        """Connection (B_bar, A_bar) for the swapped flux pair."""
        return make_connection(self.pair.swapped(), self.B_bar)

    def to_dict(self) -> dict:
        d = self.pair.to_dict()
        d["A"] = self.A
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Connection":
        return make_connection(FluxPair.from_dict(d), float(d["A"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "Connection":
        return cls.from_dict(json.loads(s))


def _close(a: float, b: float, rtol: float = CONNECTION_RTOL) -> bool:
    return abs(a - b) <= rtol * max(1.0, abs(a), abs(b))


def make_connection(pair: FluxPair, A: float) -> Connection:
    """Connection with left value ``A``; ``B`` is the increasing-branch preimage of f_l(A)."""
    fl, fr = pair.f_l, pair.f_r
    A = float(A)
    if A > fl.theta and not _close(A, fl.theta):
        raise FluxError(f"A={A} exceeds theta_l={fl.theta}: f_l'(A) > 0")
    gamma = float(fl(A))
    if gamma < fr.fmin and not _close(gamma, fr.fmin):
        raise FluxError(f"f_l(A)={gamma} is below min f_r={fr.fmin}; no B exists")
    gamma_r = max(gamma, fr.fmin)
    B = float(fr.inv_plus(gamma_r))
    B_bar = float(fr.inv_minus(gamma_r))
    A_bar = float(fl.inv_plus(max(gamma, fl.fmin)))
    if not _close(float(fr(B)), gamma):
        raise FluxError(f"connection mismatch f_l(A)={gamma} vs f_r(B)={float(fr(B))}")
    critical = _close(A, fl.theta) or _close(B, fr.theta)
    return Connection(pair, A, B, A_bar, B_bar, gamma, critical)


def pi_map(pair: FluxPair, u):
    """Value v >= theta_l with f_l(v) = f_r(u)."""
    y = pair.f_r(u)
    if np.any(np.asarray(y) < pair.f_l.fmin - CONNECTION_RTOL * max(1.0, abs(pair.f_l.fmin))):
        raise FluxError(f"f_r({u}) is below min f_l; pi map undefined")
    return pair.f_l.inv_plus(np.maximum(y, pair.f_l.fmin))


def godunov_flux(f: ConvexFlux, a, b):
    """Exact Riemann flux: min of f on [a, b] if a <= b, max on [b, a] otherwise."""
    th = f.theta
    return np.maximum(f(np.maximum(a, th)), f(np.minimum(b, th)))


def interface_flux(conn: Connection, a, b):
    """Connection-adapted Godunov flux at x = 0.

    ``max(G_l(a, A), G_r(B, b))``; it reduces to
    ``max(gamma, f_l(max(a, theta_l)), f_r(min(b, theta_r)))``.
    """
    fl, fr = conn.pair.f_l, conn.pair.f_r
    return np.maximum(godunov_flux(fl, a, conn.A), godunov_flux(fr, conn.B, b))


def connection_from_json_file(path) -> Connection:
    with open(path) as fh:
        return Connection.from_dict(json.load(fh))

