"""Domain types shared by every other module.

Points of R^3 are stored along the split R^3 = R (+) C: a real coordinate
``zr`` along the distinguished axis and a plane vector ``zc`` transverse to
it.  The half-axis ``l = {(t, 0, 0) : t >= 0}`` plays a special role: all
region predicates and the slab/clearance geometry are expressed relative
to it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad

__all__ = [
    "Point3",
    "Polyline",
    "ClearedBall",
    "Slab",
    "Ball",
    "MetricBall",
    "Region",
    "contains",
    "axis_distance",
    "BoundConstants",
    "ledger_functions",
    "half_cosine_integral",
]


@dataclass(frozen=True)
class Point3:
    """A point zeta = (zr, zc) of R^3 = R (+) C."""

    zr: float
    zc: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        vals = (self.zr, self.zc[0], self.zc[1])
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite coordinates: {vals}")

    @staticmethod
    def of(x: float, y: float = 0.0, z: float = 0.0) -> "Point3":
        return Point3(float(x), (float(y), float(z)))

    @staticmethod
    def from_array(a: Sequence[float]) -> "Point3":
        return Point3(float(a[0]), (float(a[1]), float(a[2])))

    def as_array(self) -> np.ndarray:
        return np.array([self.zr, self.zc[0], self.zc[1]], dtype=float)

    @property
    def norm(self) -> float:
        # hypot is overflow-safe up to the float range, far beyond 1e12
        return math.hypot(self.zr, self.zc[0], self.zc[1])

    @property
    def cnorm(self) -> float:
        """|zeta_C|, the distance to the full axis {(t,0,0)}."""
        return math.hypot(self.zc[0], self.zc[1])

    def rotated(self, angle: float) -> "Point3":
        """Rotate the transverse component by ``angle`` (the S^1 action)."""
        c, s = math.cos(angle), math.sin(angle)
        x, y = self.zc
        return Point3(self.zr, (c * x - s * y, s * x + c * y))

    def __sub__(self, other: "Point3") -> np.ndarray:
        return self.as_array() - other.as_array()


def axis_distance(p: Point3) -> float:
    """Distance from ``p`` to the half-axis l = {(t,0,0), t >= 0}.

    Equals |zeta_C| when zr >= 0 and |zeta| otherwise.
    """
    return p.cnorm if p.zr >= 0.0 else p.norm


@dataclass(frozen=True)
class Polyline:
    """Piecewise-linear path: vertices with strictly increasing parameters."""

    vertices: tuple[Point3, ...]
    params: tuple[float, ...]

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise ValueError("a polyline needs at least two vertices")
        if len(self.params) != len(self.vertices):
            raise ValueError("params and vertices must have equal length")
        diffs = np.diff(np.asarray(self.params, dtype=float))
        if not np.all(diffs > 0):
            raise ValueError("params must be strictly increasing")

    @staticmethod
    def through(points: Sequence[Point3]) -> "Polyline":
        return Polyline(tuple(points), tuple(float(i) for i in range(len(points))))

    @staticmethod
    def from_arrays(coords: np.ndarray, params: Sequence[float] | None = None) -> "Polyline":
        pts = tuple(Point3.from_array(row) for row in np.asarray(coords, dtype=float))
        if params is None:
            return Polyline.through(pts)
        return Polyline(pts, tuple(float(t) for t in params))

    def as_array(self) -> np.ndarray:
        return np.array([v.as_array() for v in self.vertices])

    @property
    def euclidean_length(self) -> float:
        a = self.as_array()
        return float(np.sum(np.linalg.norm(np.diff(a, axis=0), axis=1)))


@dataclass(frozen=True)
class ClearedBall:
    """K(R, D): norm <= R, distance to the half-axis l at least D."""

    radius: float
    clearance: float

    def __post_init__(self):
        if not (self.radius >= self.clearance >= 0.0):
            raise ValueError("need radius >= clearance >= 0")


@dataclass(frozen=True)
class Slab:
    """L(D): the open slab |zeta_C| < D around the axis."""

    halfwidth: float

    def __post_init__(self):
        if not self.halfwidth > 0:
            raise ValueError("halfwidth must be positive")


@dataclass(frozen=True)
class Ball:
    """Euclidean ball |zeta| <= u (taken closed; path solvers use closures)."""

    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")


@dataclass(frozen=True)
class MetricBall:
    """Ball of a metric descriptor; membership needs a distance callable."""

    center: Point3
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")


Region = Union[ClearedBall, Slab, Ball, MetricBall]


def contains(region: Region, p: Point3, dist_fn=None) -> bool:
    """Exact membership predicate for the four supported region shapes."""
    if isinstance(region, ClearedBall):
        return p.norm <= region.radius and axis_distance(p) >= region.clearance
    if isinstance(region, Slab):
        return p.cnorm < region.halfwidth
    if isinstance(region, Ball):
        return p.norm <= region.radius
    if isinstance(region, MetricBall):
        if dist_fn is None:
            raise ValueError("MetricBall membership needs a distance callable")
        return dist_fn(region.center, p) <= region.radius
    raise TypeError(f"not a region: {region!r}")


@lru_cache(maxsize=1)
def half_cosine_integral() -> float:
    """The improper integral of |cos t|^(-1/2) over [0, pi].

    The integrand blows up like (pi/2 - t)^(-1/2) at the midpoint; the
    substitution t = pi/2 - s^2 removes the singularity, after which the
    two symmetric halves are integrated by adaptive quadrature.
    """

    def regularized(s: float) -> float:
        return 2.0 * s / math.sqrt(math.sin(s * s))

    half, err = quad(regularized, 0.0, math.sqrt(math.pi / 2.0), epsabs=1e-13, epsrel=1e-13)
    if err > 1e-9:
        raise ArithmeticError(f"cosine integral did not converge: err={err}")
    return 2.0 * half


@dataclass(frozen=True)
class BoundConstants:
    """The constant pack driving every escape/diameter estimate.

    ``c0`` is the radial lower-bound constant, ``c1`` the transverse
    upper-bound constant with growth exponent ``kappa``; ``m`` and
    ``epsilon`` quantify how close a pair of conformal factors is.  The
    derived ``c2``, ``c3`` and ``kappa_prime`` feed the escape radius
    ``rho`` and the distance-comparison moduli ``xi``/``xi_inf``.
    """

    c0: float
    c1: float
    kappa: float = 0.0
    m: float = 1.0
    epsilon: float = 0.0
    kappa_prime: float = field(init=False)
    c2: float = field(init=False)
    c3: float = field(init=False)

    def __post_init__(self):
        if not (self.c0 > 0 and self.c1 > 0):
            raise ValueError("c0 and c1 must be positive")
        if self.kappa < 0 or self.epsilon < 0 or self.m <= 0:
            raise ValueError("need kappa >= 0, epsilon >= 0, m > 0")
        object.__setattr__(self, "kappa_prime", (1.0 + self.kappa) / 2.0)
        c2 = (2.0 + half_cosine_integral()) * math.sqrt(self.c1)
        object.__setattr__(self, "c2", c2)
        object.__setattr__(self, "c3", 3.0 * c2 / (2.0 * math.sqrt(self.c0)))

    def rho(self, u: float) -> float:
        """Escape radius: closed-ball restriction at rho(u) is inactive on B(u)."""
        if u < 1.0:
            raise ValueError("rho is defined for u >= 1")
        return max(u - 1.0, (1.0 + self.c3 * u**self.kappa_prime) ** 2)

    def ball_radius(self, r: float) -> float:
        """Euclidean radius u(r) containing the metric ball of radius r."""
        if r <= 0:
            raise ValueError("r must be positive")
        return (1.0 + r / (2.0 * math.sqrt(self.c0))) ** 2

    def xi(self, u: float) -> float:
        if u < 1.0:
            raise ValueError("xi is defined for u >= 1")
        r1 = self.rho(u + 1.0) + 1.0
        return (
            math.sqrt(self.c1 * (1.0 + r1**self.kappa))
            + 8.0 * math.sqrt(self.c1 * (1.0 + (u + 1.0) ** self.kappa))
            + 2.0
        )

    def xi_inf(self, u: float) -> float:
        if u < 1.0:
            raise ValueError("xi_inf is defined for u >= 1")
        r1 = self.rho(u + 1.0) + 1.0
        return (
            math.sqrt(self.c1 * r1**self.kappa)
            + 8.0 * math.sqrt(self.c1 * (u + 1.0) ** self.kappa)
            + 2.0
        )


def ledger_functions(ledger: BoundConstants, u: float, r: float) -> dict:
    """Evaluate the derived radius/modulus functions at (u, r)."""
    if u < 1.0:
        raise ValueError("u must be >= 1")
    if r <= 0:
        raise ValueError("r must be positive")
    return {
        "rho_u": ledger.rho(u),
        "u_of_r": ledger.ball_radius(r),
        "xi_u": ledger.xi(u),
        "xi_inf_u": ledger.xi_inf(u),
    }
