"""Harmonic conformal factors with certified truncation/quadrature error.

Every evaluator returns an :class:`EvalResult` whose ``error`` field is a
rigorous bound: the true value lies in ``[value - error, value + error]``
whenever ``value`` is finite.  Singular inputs (a point sitting on a
center or on the source curve) yield an infinite value, not an exception.

The source configurations are: countable unions of axis blocks
``{(k^alpha,0,0) : K_{2n} <= k < K_{2n+1}}``, their rescalings, the
continuum segments ``integral_S^T dx/|zeta-(x^alpha,0,0)|`` and finite
unions of such segments.  Truncation of infinite sums uses monotone
integral comparison plus an explicit far-field multipole expansion whose
remainder is bounded analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Union

import numpy as np
from scipy.integrate import quad

from .geometry import Point3

__all__ = [
    "EvalResult",
    "ExplicitKs",
    "GeometricKs",
    "SuperGeometricKs",
    "KSequence",
    "LatticeSpec",
    "RescaleParams",
    "IntervalUnion",
    "phi_lattice",
    "phi_rescaled",
    "phi_segment",
    "phi_union",
    "phi_finite_centers",
    "segment_mass",
    "total_block_mass",
    "fiber_diameter",
    "segment_factor_bulk",
    "lattice_factor_bulk",
]

INF = math.inf

# enumeration cap for exact near sums; beyond it the far expansion applies
_ENUM_CAP = 30_000_000
# exact sums switch to Euler-Maclaurin sandwiches above this block length
_POWER_ENUM_CAP = 200_000


@dataclass(frozen=True)
class EvalResult:
    """A value with a rigorous two-sided error bound."""

    value: float
    error: float = 0.0

    def __post_init__(self):
        if self.error < 0 or math.isnan(self.value):
            raise ValueError(f"bad eval result: {self.value} +- {self.error}")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def low(self) -> float:
        return self.value if self.is_infinite else self.value - self.error

    @property
    def high(self) -> float:
        return self.value if self.is_infinite else self.value + self.error


# ---------------------------------------------------------------------------
# lattice bookkeeping
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitKs:
    """An explicit increasing sequence K_0 < K_1 < ...; the last may be inf.

    An odd-length sequence leaves the final block open-ended.
    """

    values: tuple[float, ...]

    def __post_init__(self):
        v = self.values
        if len(v) < 2:
            raise ValueError("need at least K_0 < K_1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("K sequence must be strictly increasing")
        if any(math.isinf(x) for x in v[:-1]):
            raise ValueError("only the last K may be infinite")
        if v[0] < 0:
            raise ValueError("K_0 must be >= 0")

    def k(self, n: int) -> float:
        if n < len(self.values):
            return self.values[n]
        return INF


@dataclass(frozen=True)
class GeometricKs:
    """K_n = ceil(K_0 * ratio^n)."""

    k0: int
    ratio: float

    def __post_init__(self):
        if self.k0 < 1 or self.ratio <= 1:
            raise ValueError("need K_0 >= 1 and ratio > 1")

    def k(self, n: int) -> float:
        if n * math.log10(self.ratio) > 280:
            return INF
        return float(math.ceil(self.k0 * self.ratio**n))


@dataclass(frozen=True)
class SuperGeometricKs:
    """K_n = ceil(K_0 * ratio^(n^2))."""

    k0: int
    ratio: float

    def __post_init__(self):
        if self.k0 < 1 or self.ratio <= 1:
            raise ValueError("need K_0 >= 1 and ratio > 1")

    def k(self, n: int) -> float:
        if n * n * math.log10(self.ratio) > 280:
            return INF
        return float(math.ceil(self.k0 * self.ratio ** (n * n)))


KSequence = Union[ExplicitKs, GeometricKs, SuperGeometricKs]


@dataclass(frozen=True)
class LatticeSpec:
    """The block lattice: sources at (k^alpha,0,0), k in [K_2n, K_2n+1)."""

    alpha: float
    kseq: KSequence

    def __post_init__(self):
        if not self.alpha > 1:
            raise ValueError("alpha must exceed 1")

    def k(self, n: int) -> float:
        return self.kseq.k(n)

    def blocks(self) -> Iterator[tuple[float, float]]:
        """Yield integer ranges [lo, hi) of active k values, in order."""
        n = 0
        while True:
            lo = self.kseq.k(2 * n)
            if math.isinf(lo):
                return
            hi = self.kseq.k(2 * n + 1)
            yield lo, hi
            if math.isinf(hi):
                return
            n += 1


@dataclass(frozen=True)
class RescaleParams:
    """Rescaling gauge (a, P); the dilation scale is N = (P/a)^(1/(1+alpha))."""

    a: float
    p: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.p > 0):
            raise ValueError("a and P must be positive")

    def scale(self, alpha: float) -> float:
        """N = a^(-1/(1+alpha)) P^(1/(1+alpha))."""
        return (self.p / self.a) ** (1.0 / (1.0 + alpha))

    def center_scale(self, alpha: float) -> float:
        """Premultiplier of k^alpha in the rescaled configuration: P N^(-alpha)."""
        return self.p * self.scale(alpha) ** (-alpha)

    def s_t(self, spec: LatticeSpec, n: int) -> tuple[float, float]:
        """(S_n, T_n) = (K_2n, K_2n+1) / N."""
        ns = self.scale(spec.alpha)
        return spec.k(2 * n) / ns, spec.k(2 * n + 1) / ns


@dataclass(frozen=True)
class IntervalUnion:
    """Disjoint sorted (S_l, T_l) intervals; only the last may be infinite."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        iv = self.intervals
        if not iv:
            raise ValueError("empty interval union")
        prev_t = -1.0
        for i, (s, t) in enumerate(iv):
            if not (0.0 <= s < t):
                raise ValueError(f"bad interval ({s}, {t})")
            if s <= prev_t:
                raise ValueError("intervals must be disjoint and sorted")
            if math.isinf(t) and i != len(iv) - 1:
                raise ValueError("only the last interval may be infinite")
            prev_t = t

    @property
    def measure(self) -> float:
        return sum(t - s for s, t in self.intervals)


# ---------------------------------------------------------------------------
# power-sum workhorses (Euler-Maclaurin sandwiches)
# ---------------------------------------------------------------------------


def _power_block_sum(lo: float, hi: float, s: float) -> tuple[float, float]:
    """Certified sum of k^(-s) over integers lo <= k < hi, for s > 1, lo >= 1.

    Short ranges are summed exactly; long ones use the trapezoid-corrected
    integral with an Euler-Maclaurin remainder bound (the summand is
    decreasing and convex).
    """
    if hi <= lo:
        return 0.0, 0.0
    if math.isfinite(hi) and hi - lo <= _POWER_ENUM_CAP:
        ks = np.arange(lo, hi, dtype=float)
        val = float(np.sum(ks**-s))
        return val, 1e-15 * val
    a, b = lo, hi
    integral = (a ** (1.0 - s) - (0.0 if math.isinf(b) else b ** (1.0 - s))) / (s - 1.0)
    endpoints = (a**-s - (0.0 if math.isinf(b) else b**-s)) / 2.0
    rem = s * max(a - 1.0, 1.0) ** (-s - 1.0) / 12.0
    if math.isfinite(b):
        rem += s * b ** (-s - 1.0) / 12.0
    return integral + endpoints, rem


def _far_power_sum(blocks, k_start: float, s: float, c_pow: float,
                   budget: float) -> tuple[float, float]:
    """Certified sum of (c k^alpha)^(-s/alpha)... generic power moment.

    Sums w(k) = c_pow * k^(-s) over lattice ks >= k_start, stopping once
    the all-integer tail bound drops below ``budget``.
    """
    total = 0.0
    err = 0.0
    for lo, hi in blocks:
        lo = max(lo, k_start, 1.0)
        if hi <= lo:
            continue
        all_tail = c_pow * (lo ** (1.0 - s) / (s - 1.0) + lo**-s)
        if all_tail <= budget:
            total += all_tail / 2.0
            err += all_tail / 2.0
            break
        v, e = _power_block_sum(lo, hi, s)
        total += c_pow * v
        err += c_pow * e
    return total, err


# ---------------------------------------------------------------------------
# certified axis-configuration sums
# ---------------------------------------------------------------------------


def _axis_point_sum(spec: LatticeSpec, c: float, zr: float, rho: float,
                    tol: float) -> tuple[float, float]:
    """Certified sum of 1/sqrt((c k^alpha - zr)^2 + rho^2) over the lattice.

    Near sources are summed exactly; sources with c k^alpha >= X_far are
    replaced by the three-term multipole expansion
    1/m + zr/m^2 + (zr^2 - rho^2/2)/m^3, m = c k^alpha, whose pointwise
    remainder is below 8 r^3 / m^4 once m >= 2r (r = |zeta|).
    """
    alpha = spec.alpha
    r = math.hypot(zr, rho)

    # far threshold: expansion remainder 8 r^3 sum m^-4 below tol/4
    x_far = max(4.0 * (r + 1.0), c)
    while True:
        m3_tail = c ** (-1.0 / alpha) * x_far ** ((1.0 - 4.0 * alpha) / alpha) / (
            4.0 * alpha - 1.0
        ) + x_far**-4.0
        if 8.0 * (r + 1.0) ** 3 * m3_tail <= tol / 4.0 or x_far > 1e300:
            break
        x_far *= 2.0
    k_far = max(1.0, math.ceil((x_far / c) ** (1.0 / alpha)))
    if k_far > _ENUM_CAP:
        raise ArithmeticError(
            f"requested tolerance {tol} needs {k_far:.3g} exact terms; "
            "loosen tol or rescale"
        )

    near = 0.0
    near_err = 0.0
    blocks_seen = []
    exhausted = True
    for lo, hi in spec.blocks():
        blocks_seen.append((lo, hi))
        if lo >= k_far:
            exhausted = False
            break
        top = min(hi, k_far)
        if math.isinf(hi):
            exhausted = False
        ks = np.arange(lo, top, dtype=float)
        if ks.size:
            m = c * ks**alpha
            d2 = (m - zr) ** 2 + rho * rho
            if np.any(d2 == 0.0):
                return INF, 0.0
            part = np.sum(1.0 / np.sqrt(d2))
            near += float(part)
            near_err += 1e-15 * float(part) * math.log2(max(ks.size, 2))
        if math.isinf(hi):
            break

    def far_blocks() -> Iterator[tuple[float, float]]:
        for lo, hi in blocks_seen:
            if hi > k_far:
                yield max(lo, k_far), hi
        if not exhausted:
            n = 2 * len(blocks_seen)
            while True:
                lo = spec.k(n)
                if math.isinf(lo):
                    return
                yield lo, spec.k(n + 1)
                if math.isinf(spec.k(n + 1)):
                    return
                n += 1

    budget = tol / 8.0
    m0, e0 = _far_power_sum(far_blocks(), k_far, alpha, 1.0 / c, budget)
    m1, e1 = _far_power_sum(far_blocks(), k_far, 2.0 * alpha, 1.0 / c**2, budget / (abs(zr) + 1.0))
    m2, e2 = _far_power_sum(far_blocks(), k_far, 3.0 * alpha, 1.0 / c**3, budget / (r * r + 1.0))
    m3, e3 = _far_power_sum(far_blocks(), k_far, 4.0 * alpha, 1.0 / c**4, 1.0)

    far_val = m0 + zr * m1 + (zr * zr - rho * rho / 2.0) * m2
    far_err = (
        e0
        + abs(zr) * e1
        + abs(zr * zr - rho * rho / 2.0) * e2
        + 8.0 * (r + 1.0) ** 3 * (m3 + e3)
    )
    return near + far_val, near_err + far_err


def phi_lattice(spec: LatticeSpec, z: Point3, tol: float) -> EvalResult:
    """The full multi-center sum over the lattice of spec, at z."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    val, err = _axis_point_sum(spec, 1.0, z.zr, z.cnorm, tol)
    return EvalResult(val, 0.0 if math.isinf(val) else err)


def phi_rescaled(spec: LatticeSpec, rp: RescaleParams, z: Point3, tol: float) -> EvalResult:
    """The rescaled factor: (1/N) * sum over centers P N^(-alpha) k^alpha."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_scale = rp.scale(spec.alpha)
    c = rp.center_scale(spec.alpha)
    val, err = _axis_point_sum(spec, c, z.zr, z.cnorm, tol * n_scale)
    if math.isinf(val):
        return EvalResult(INF, 0.0)
    return EvalResult(val / n_scale, err / n_scale)


def phi_finite_centers(centers: np.ndarray, z: Point3) -> EvalResult:
    """Exact sum of 1/|z - c| over an explicit finite 3D center list."""
    pts = np.atleast_2d(np.asarray(centers, dtype=float))
    d = np.linalg.norm(pts - z.as_array()[None, :], axis=1)
    if np.any(d == 0.0):
        return EvalResult(INF, 0.0)
    val = float(np.sum(1.0 / d))
    return EvalResult(val, 1e-14 * val)


# ---------------------------------------------------------------------------
# segment potentials (continuum sources along the curve)
# ---------------------------------------------------------------------------


def _curve_gap(s: float, t: float, p: float, alpha: float, zr: float, rho: float) -> float:
    """Distance from z to the curve arc {(p x^alpha,0,0) : x in [s,t]}."""
    lo, hi = p * s**alpha, (INF if math.isinf(t) else p * t**alpha)
    ax = min(max(zr, lo), hi)
    return math.hypot(ax - zr, rho)


def _quad_resilient(f, a: float, b: float, budget: float,
                    spike: float | None = None, width: float = 0.0) -> tuple[float, float]:
    """Adaptive quadrature that subdivides dyadically around a known spike
    when plain adaptive quadrature cannot certify the requested budget."""
    val, err = quad(f, a, b, epsabs=budget, epsrel=1e-11, limit=200)
    if err <= max(budget, 1e-13 * abs(val)) or spike is None:
        return val, err
    w = max(width, (b - a) * 1e-13)
    cuts = [a]
    x = max(a, min(spike, b))
    offs = w / 4.0
    while x + offs < b:
        if x + offs > a:
            cuts.append(x + offs)
        offs *= 4.0
    cuts.append(b)
    cuts = sorted(set(cuts))
    total, terr = 0.0, 0.0
    for aa, bb in zip(cuts, cuts[1:]):
        v, e = quad(f, aa, bb, epsabs=budget / len(cuts), epsrel=1e-11, limit=200)
        total += v
        terr += e
    return total, terr


def _segment_integral(s: float, t: float, p: float, alpha: float, zr: float,
                      rho: float, tol: float) -> tuple[float, float]:
    """Certified integral of 1/sqrt((p x^alpha - zr)^2 + rho^2) over [s, t]."""
    if rho == 0.0 and p * s**alpha <= zr <= (INF if math.isinf(t) else p * t**alpha):
        return INF, 0.0

    def f(x: float) -> float:
        return 1.0 / math.hypot(p * x**alpha - zr, rho)

    r = math.hypot(zr, rho)
    x_star = min(max((max(zr, 0.0) / p) ** (1.0 / alpha), s), t)
    slope_x = max(x_star, (rho / p) ** (1.0 / alpha) if rho > 0 else 0.0, 1e-300)
    width = max(rho, 1e-300) / (p * alpha * slope_x ** (alpha - 1.0))

    x_big = max(2.0 * x_star, (2.0 * (r + 1.0) / p) ** (1.0 / alpha), s + 1.0)
    pieces: list[tuple[float, float]] = []
    top = t if (math.isfinite(t) and t <= x_big) else x_big
    if x_star > s:
        pieces.append((s, x_star))
    if top > x_star:
        pieces.append((x_star, top))
    total, err = 0.0, 0.0
    budget = tol / (len(pieces) + 1)
    for a, b in pieces:
        v, e = _quad_resilient(f, a, b, budget, spike=x_star, width=width)
        total += v
        err += e

    if (math.isinf(t) and top == x_big) or (math.isfinite(t) and t > x_big):
        # map [x_big, t] to v in (v0, 1] via x = x_big / v
        v0 = 0.0 if math.isinf(t) else x_big / t

        def g(v: float) -> float:
            x = x_big / v
            return (x_big / (v * v)) / math.hypot(p * x**alpha - zr, rho)

        v, e = quad(g, v0, 1.0, epsabs=budget, epsrel=1e-11, limit=200)
        total += v
        err += e
    return total, err


def phi_segment(s: float, t: float, p: float, alpha: float, z: Point3,
                tol: float) -> EvalResult:
    """Potential of the continuum segment of sources x in [s, t]."""
    if not (0.0 <= s and s < t):
        raise ValueError(f"need 0 <= S < T, got S={s}, T={t}")
    if p <= 0 or alpha <= 1:
        raise ValueError("need P > 0 and alpha > 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    val, err = _segment_integral(s, t, p, alpha, z.zr, z.cnorm, tol)
    if math.isinf(val):
        return EvalResult(INF, 0.0)
    return EvalResult(val, err)


def phi_union(union: IntervalUnion, p: float, alpha: float, z: Point3,
              tol: float) -> EvalResult:
    """Potential of a finite union of source segments; error bounds add."""
    per = tol / len(union.intervals)
    total, err = 0.0, 0.0
    for s, t in union.intervals:
        res = phi_segment(s, t, p, alpha, z, per)
        if res.is_infinite:
            return EvalResult(INF, 0.0)
        total += res.value
        err += res.error
    return EvalResult(total, err)


# ---------------------------------------------------------------------------
# masses
# ---------------------------------------------------------------------------


def segment_mass(s: float, t: float, p: float = 1.0, alpha: float = 2.0) -> float:
    """integral_S^T dx / (1 + P x^alpha), relative error <= 1e-10."""
    if not (0.0 <= s <= t):
        raise ValueError(f"need 0 <= S <= T, got S={s}, T={t}")
    if p <= 0 or alpha <= 1:
        raise ValueError("need P > 0 and alpha > 1")
    if s == t:
        return 0.0

    def f(x: float) -> float:
        return 1.0 / (1.0 + p * x**alpha)

    x_big = max((100.0 / p) ** (1.0 / alpha), s + 1.0)
    if math.isinf(t):
        head, e1 = quad(f, s, x_big, epsabs=1e-14, epsrel=1e-12, limit=200)

        def g(v: float) -> float:
            x = x_big / v
            return (x_big / (v * v)) / (1.0 + p * x**alpha)

        tail, e2 = quad(g, 0.0, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
        return head + tail
    if t <= x_big:
        val, _ = quad(f, s, t, epsabs=1e-14, epsrel=1e-12, limit=200)
        return val
    head, _ = quad(f, s, x_big, epsabs=1e-14, epsrel=1e-12, limit=200)

    def g(v: float) -> float:
        x = x_big / v
        return (x_big / (v * v)) / (1.0 + p * x**alpha)

    tail, _ = quad(g, x_big / t, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200)
    return head + tail


def union_mass(union: IntervalUnion, p: float = 1.0, alpha: float = 2.0) -> float:
    return sum(segment_mass(s, t, p, alpha) for s, t in union.intervals)


def total_block_mass(spec: LatticeSpec, rp: RescaleParams, tol: float = 1e-10) -> EvalResult:
    """Certified sum over blocks of segment_mass(S_n, T_n) for the rescaling.

    Computed as (1/N) * integral over the block union of dk/(1 + c k^alpha)
    with c = P N^(-alpha); far blocks use the geometric-series expansion of
    the integrand instead of quadrature.
    """
    alpha = spec.alpha
    n_scale = rp.scale(alpha)
    c = rp.center_scale(alpha)
    x10 = (10.0 / c) ** (1.0 / alpha)

    def far_piece(lo: float, hi: float) -> tuple[float, float]:
        # integral of dk/(1+c k^alpha) with c k^alpha >= 10 throughout
        def term(j: float, sgn: float):
            lo_t = lo ** (1.0 - j * alpha) / (j * alpha - 1.0)
            hi_t = 0.0 if math.isinf(hi) else hi ** (1.0 - j * alpha) / (j * alpha - 1.0)
            return sgn * (lo_t - hi_t) / c**j

        main = term(1.0, 1.0) + term(2.0, -1.0)
        rem = abs(term(3.0, 1.0)) / (1.0 - 0.1)
        return main, rem

    total, err = 0.0, 0.0
    for lo, hi in spec.blocks():
        all_tail = (max(lo, 1.0) ** (1.0 - alpha)) / (c * (alpha - 1.0))
        if all_tail <= tol * n_scale / 2.0:
            total += all_tail / 2.0
            err += all_tail / 2.0
            break
        near_hi = min(hi, x10)
        if lo < near_hi:
            v, e = quad(
                lambda k: 1.0 / (1.0 + c * k**alpha),
                lo, near_hi, epsabs=1e-14, epsrel=1e-12, limit=200,
            )
            total += v
            err += e
        if hi > x10:
            v, e = far_piece(max(lo, x10), hi)
            total += v
            err += e
    return EvalResult(total / n_scale, err / n_scale)


def fiber_diameter(spec: LatticeSpec, rp: RescaleParams, z: Point3,
                   tol: float) -> EvalResult:
    """pi / (N sqrt(Phi_a)) with propagated bounds; 0 at a center."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    n_scale = rp.scale(spec.alpha)
    res = phi_rescaled(spec, rp, z, tol)
    for _ in range(3):
        if res.is_infinite or res.error <= 0.25 * res.value:
            break
        res = phi_rescaled(spec, rp, z, max(res.value * 0.1, 1e-300))
    if res.is_infinite:
        return EvalResult(0.0, 0.0)
    if res.low <= 0:
        raise ArithmeticError("factor too uncertain for a fiber diameter")
    hi = math.pi / (n_scale * math.sqrt(res.low))
    lo = math.pi / (n_scale * math.sqrt(res.high))
    return EvalResult((hi + lo) / 2.0, (hi - lo) / 2.0)


# ---------------------------------------------------------------------------
# fast vectorized evaluators (solver workhorses, not error-certified)
# ---------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL01_X = 0.5 * (_GL_NODES + 1.0)
_GL01_W = 0.5 * _GL_WEIGHTS


def _side_integral_bulk(a, b, x_star, width, p, alpha, zr, rho):
    """Vectorized integral over [a, b] per point, nodes clustered near
    x_star via the log map x = edge + w (exp(xi) - 1)."""
    length = np.maximum(b - a, 0.0)
    live = length > 0.0
    w = np.maximum(width, length * 1e-14)
    from_left = np.abs(x_star - a) <= np.abs(b - x_star)
    span = np.log1p(length / w)
    xi = span[:, None] * _GL01_X[None, :]
    off = np.expm1(xi) * w[:, None]
    x = np.where(from_left[:, None], a[:, None] + off, b[:, None] - off)
    jac = (off + w[:, None]) * span[:, None]
    vals = 1.0 / np.hypot(p * x**alpha - zr[:, None], rho[:, None])
    out = np.sum(vals * jac * _GL01_W[None, :], axis=1)
    return np.where(live, out, 0.0)


def segment_factor_bulk(s: float, t: float, p: float, alpha: float,
                        zr: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Fast approximate segment potential on arrays of (zr, |zc|).

    Accuracy is a few parts in 1e6 away from the curve and a few parts in
    1e5 down to |zc| ~ 1e-6 near it; exact error control lives in
    :func:`phi_segment`.
    """
    zr = np.asarray(zr, dtype=float)
    rho = np.asarray(rho, dtype=float)
    r = np.hypot(zr, rho)
    x_star = np.clip((np.maximum(zr, 0.0) / p) ** (1.0 / alpha), s,
                     t if math.isfinite(t) else None)
    slope_x = np.maximum.reduce([x_star, (rho / p) ** (1.0 / alpha), np.full_like(x_star, 1e-300)])
    width = np.maximum(rho, 1e-300) / (p * alpha * slope_x ** (alpha - 1.0))

    x_big = np.maximum.reduce([2.0 * x_star, (2.0 * (r + 1.0) / p) ** (1.0 / alpha),
                               np.full_like(x_star, s + 1.0)])
    top = np.minimum(t, x_big) if math.isfinite(t) else x_big

    total = _side_integral_bulk(np.full_like(zr, s), x_star, x_star, width, p, alpha, zr, rho)
    total += _side_integral_bulk(x_star, top, x_star, width, p, alpha, zr, rho)

    # analytic three-term tail beyond top, when the segment extends past it
    if math.isinf(t) or t > float(np.min(top)):
        def tail_at(y):
            with np.errstate(divide="ignore"):
                return (
                    y ** (1.0 - alpha) / (p * (alpha - 1.0))
                    + zr * y ** (1.0 - 2.0 * alpha) / (p * p * (2.0 * alpha - 1.0))
                    + (zr * zr - rho * rho / 2.0)
                    * y ** (1.0 - 3.0 * alpha) / (p**3 * (3.0 * alpha - 1.0))
                )

        tail = tail_at(top)
        if math.isfinite(t):
            tail = np.where(t > top, tail - tail_at(np.full_like(top, t)), 0.0)
        total += tail

    on_curve = (rho == 0.0) & (zr >= p * s**alpha)
    if math.isfinite(t):
        on_curve &= zr <= p * t**alpha
    return np.where(on_curve, np.inf, total)


def lattice_factor_bulk(spec: LatticeSpec, rp: RescaleParams,
                        zr: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Fast approximate rescaled lattice potential on arrays of (zr, |zc|).

    Enumerates sources up to an axis position comfortably beyond the batch
    and folds the rest into precomputed far moments.
    """
    zr = np.asarray(zr, dtype=float)
    rho = np.asarray(rho, dtype=float)
    alpha = spec.alpha
    n_scale = rp.scale(alpha)
    c = rp.center_scale(alpha)
    r_max = float(np.max(np.hypot(zr, rho))) if zr.size else 1.0

    x_far = 64.0 * (r_max + 1.0)
    k_far = math.ceil((x_far / c) ** (1.0 / alpha))
    near, m0, m1, m2 = _lattice_far_cache(spec, rp, k_far)

    out = np.zeros_like(zr)
    for chunk in range(0, near.size, 4096):
        m = near[chunk:chunk + 4096]
        d = np.hypot(m[None, :] - zr[:, None], rho[:, None])
        with np.errstate(divide="ignore"):
            out += np.sum(1.0 / d, axis=1)
    out += m0 + zr * m1 + (zr * zr - rho * rho / 2.0) * m2
    return out / n_scale


_FAR_CACHE: dict = {}


def _lattice_far_cache(spec: LatticeSpec, rp: RescaleParams, k_far: int):
    key = (spec, rp, k_far)
    hit = _FAR_CACHE.get(key)
    if hit is not None:
        return hit
    alpha = spec.alpha
    c = rp.center_scale(alpha)
    ks = []
    for lo, hi in spec.blocks():
        if lo >= k_far:
            break
        ks.append(np.arange(lo, min(hi, k_far), dtype=float))
        if hi > k_far:
            break
    near = c * np.concatenate(ks) ** alpha if ks else np.zeros(0)

    def far_blocks():
        for lo, hi in spec.blocks():
            if hi > k_far:
                yield max(lo, k_far), hi

    m0, _ = _far_power_sum(far_blocks(), k_far, alpha, 1.0 / c, 1e-14)
    m1, _ = _far_power_sum(far_blocks(), k_far, 2.0 * alpha, 1.0 / c**2, 1e-16)
    m2, _ = _far_power_sum(far_blocks(), k_far, 3.0 * alpha, 1.0 / c**3, 1e-18)
    if len(_FAR_CACHE) > 64:
        _FAR_CACHE.clear()
    _FAR_CACHE[key] = (near, m0, m1, m2)
    return _FAR_CACHE[key]
