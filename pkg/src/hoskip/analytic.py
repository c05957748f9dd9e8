"""Analytic data-rate, handover-rate and utility metrics.

Every quantity is reduced to one- to three-level iterated integrals that are
evaluated with :mod:`hoskip.quadrature`.  Functions that may be reported with
an error estimate accept ``full_output=True`` and then return a
:class:`~hoskip.quadrature.QuadResult` instead of a bare float.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy import special
from scipy.interpolate import PchipInterpolator

from .model import (
    Constant,
    MobilityModel,
    NetworkParams,
    SpeedDistribution,
    ValidationError,
    mean_speed,
)
from .quadrature import (
    DEFAULT_SPEC,
    NonConvergence,
    QuadratureSpec,
    QuadResult,
    integrate_1d,
    integrate_nested,
)

__all__ = [
    "Exact",
    "ExactPolarJ",
    "LowerBound",
    "Interpolated",
    "TauMode",
    "ModeUnsupported",
    "NoInteriorMaximum",
    "k_beta",
    "t0",
    "j_integral",
    "mu",
    "tau",
    "TauTable",
    "t1",
    "speed_support_max",
    "h0",
    "eta",
    "skipped_area",
    "ho_probability",
    "h1",
    "utility",
    "sopt_integral",
    "sopt",
    "small_speed_residual",
    "lower_bound_utility",
    "sopt_numeric",
]

# below this w = (z / z_scale)^{2/beta} the bounded tau integrand is dropped
W_FLOOR = 1e-12
# fixed Gauss-Legendre order for the angular part of the batched radial J
_J_ORDER = 64
_GL_THETA, _GL_W = np.polynomial.legendre.leggauss(_J_ORDER)
_THETA = 0.5 * math.pi * (_GL_THETA + 1.0)
_THETA_W = 0.5 * math.pi * _GL_W
_COS_THETA = np.cos(_THETA)
_SIN_THETA = np.sin(_THETA)


class ModeUnsupported(ValidationError):
    pass


class NoInteriorMaximum(ArithmeticError):
    """The utility maximum lies on the boundary of the searched range."""

    def __init__(self, message: str, s: float):
        super().__init__(message)
        self.s = s


@dataclass(frozen=True)
class Exact:
    name = "exact"


@dataclass(frozen=True)
class ExactPolarJ:
    name = "exact_polar"


@dataclass(frozen=True)
class LowerBound:
    name = "lower_bound"


@dataclass(frozen=True)
class Interpolated:
    """Blend ``eps(u) * t0 + (1 - eps(u)) * lower_bound(u)``, ``eps = exp(-a u^b)``."""

    a: float = 10.0
    b: float = 2.0
    name = "interpolated"

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValidationError("interpolation parameters a and b must be positive")

    def eps(self, u):
        return np.exp(-self.a * np.power(u, self.b))


TauMode = Union[Exact, ExactPolarJ, LowerBound, Interpolated]


def mode_from_string(text: str) -> TauMode:
    key = text.strip().lower().replace("-", "_")
    table = {"exact": Exact(), "exact_polar": ExactPolarJ(), "polar": ExactPolarJ(),
             "lower_bound": LowerBound(), "lowerbound": LowerBound(), "lb": LowerBound(),
             "interpolated": Interpolated()}
    if key not in table:
        raise ValidationError(f"unknown tau mode {text!r}")
    return table[key]


def _ret(res: QuadResult, full_output: bool):
    return res if full_output else res.value


def k_beta(beta: float) -> float:
    """(2 pi / beta) csc(2 pi / beta)."""
    if not beta > 2:
        raise ValidationError(f"beta must exceed 2 (got {beta})")
    a = 2 * math.pi / beta
    return a / math.sin(a)


# ---------------------------------------------------------------------------
# Scenario 0 rate


def _interference_factor(z, beta):
    """1 + (2 z^{2/b} / b) * int_{1/z}^inf v^{2/b-1}/(1+v) dv, vectorized in z.

    The inner integral equals B(1-d, d) I_{z/(1+z)}(1-d, d) with d = 2/b.
    """
    z = np.asarray(z, dtype=float)
    d = 2.0 / beta
    tail = (math.pi / math.sin(math.pi * d)) * special.betainc(1 - d, d, z / (1 + z))
    return 1.0 + d * np.power(z, d) * tail


def t0(net: NetworkParams, spec: QuadratureSpec = DEFAULT_SPEC, *, full_output=False):
    """Expected downlink rate when always served by the nearest BS (nats/slot)."""
    beta = net.beta
    if net.sigma2 == 0:
        res = integrate_1d(lambda z: 1.0 / ((1 + z) * _interference_factor(z, beta)),
                           0.0, math.inf, spec, tail_power=1 + 2 / beta)
        return _ret(res, full_output)

    lam, sigma2 = net.lam, net.sigma2

    def inner(z, w):
        a = _interference_factor(z, beta)
        return np.exp(-sigma2 * z * np.power(w / (math.pi * lam), beta / 2) - w * a) / (1 + z)

    res = integrate_nested(
        inner, [(0.0, math.inf), (0.0, math.inf)], spec,
        scales=[1.0, lambda z: 1.0 / float(_interference_factor(z, beta))],
    )
    return _ret(res, full_output)


# ---------------------------------------------------------------------------
# J, mu and tau


def _check_jargs(r, z, u):
    if r < 0 or u < 0:
        raise ValidationError("J requires r >= 0 and u >= 0")
    if not z > 0:
        raise ValidationError("J requires z > 0")


def _disk_power_integral(a, z, beta):
    """int_0^a x / (z + x^beta) dx, vectorized in a (closed form)."""
    a = np.asarray(a, dtype=float)
    d = 2.0 / beta
    ab = np.power(a, beta)
    frac = ab / (z + ab)
    return (z ** (d - 1) / beta) * (math.pi / math.sin(math.pi * d)) * special.betainc(d, 1 - d, frac)


def _j_batch(r: np.ndarray, z: float, u: float, beta: float) -> np.ndarray:
    """Radial-form J for an array of radii with a fixed high-order angular rule.

    The lens part ``|u-r| <= x <= u+r`` is mapped to ``x = c - h cos(theta)``,
    which removes the square-root endpoint behaviour of the arccos factor.
    """
    r = np.asarray(r, dtype=float)
    if u == 0.0:
        return 2 * math.pi * z * _disk_power_integral(r, z, beta)
    inner = np.maximum(r - u, 0.0)
    out = math.pi * _disk_power_integral(inner, z, beta)
    lo = np.abs(u - r)
    h = np.minimum(u, r)
    c = 0.5 * (lo + u + r)
    x = c[:, None] - h[:, None] * _COS_THETA[None, :]
    x = np.maximum(x, 1e-300)
    f = (x * x + u * u - (r * r)[:, None]) / (2 * x * u)
    ang = np.arccos(np.clip(f, -1.0, 1.0))
    integrand = x / (z + np.power(x, beta)) * ang * _SIN_THETA[None, :]
    out = out + h * (integrand @ _THETA_W)
    return 2 * z * out


def j_integral(r: float, z: float, u: float, net: NetworkParams, method: str = "radial",
               spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """z times the integral of 1/(z + |x|^beta) over the disk of radius r at distance u."""
    _check_jargs(r, z, u)
    beta = net.beta
    if r == 0:
        return 0.0
    if method == "radial":
        if u == 0:
            res = integrate_1d(lambda x: math.pi * x / (z + x ** beta), 0.0, r, spec)
        else:
            def f(x):
                x = np.maximum(np.asarray(x), 1e-300)
                # tiny x*u overflows to +-inf, which the clip maps to the right angle
                with np.errstate(over="ignore"):
                    arg = (x * x + u * u - r * r) / (2 * x * u)
                return x / (z + x ** beta) * np.arccos(np.clip(arg, -1.0, 1.0))
            res = integrate_1d(f, 0.0, u + r, spec, points=(abs(u - r),))
        return 2 * z * res.value
    if method == "polar":
        def g(phi, x):
            w2 = x * x + u * u - 2 * x * u * math.cos(phi)
            return x / (z + np.power(np.maximum(w2, 0.0), beta / 2))
        pts = (lambda phi: (u,) if 0 < u < r else ())
        res = integrate_nested(g, [(0.0, math.pi), (0.0, r)], spec,
                               points=[(), pts])
        return 2 * z * res.value
    raise ValidationError(f"unknown J method {method!r}")


def _r_scale(z: float, net: NetworkParams) -> float:
    return max(1.0 / math.sqrt(math.pi * net.lam), z ** (1.0 / net.beta))


def _laplace_gap(z: float, u: float, net: NetworkParams, spec: QuadratureSpec,
                 polar: bool = False) -> float:
    """exp(-pi lam K z^{2/b}) * (mu(z, u) - 1), evaluated without overflow."""
    lam, beta = net.lam, net.beta
    full = math.pi * k_beta(beta) * z ** (2.0 / beta)
    jspec = spec.tightened(10.0)

    def f(r):
        r = np.asarray(r, dtype=float)
        if polar:
            j = np.array([j_integral(ri, z, u, net, "polar", jspec) for ri in r])
        else:
            j = _j_batch(r, z, u, beta)
        return 2 * math.pi * lam * r * np.exp(-lam * (math.pi * r * r + full - j)) * -np.expm1(-lam * j)

    pts = (u,) if u > 0 else ()
    return integrate_1d(f, 0.0, math.inf, spec, points=pts, scale=_r_scale(z, net)).value


def mu(z: float, u: float, net: NetworkParams, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """2 pi lam int r exp(-lam [pi r^2 - J(r, z, u)]) dr."""
    if not z > 0 or u < 0:
        raise ValidationError("mu requires z > 0 and u >= 0")
    lam, beta = net.lam, net.beta

    def f(r):
        r = np.asarray(r, dtype=float)
        j = _j_batch(r, z, u, beta)
        return 2 * math.pi * lam * r * (np.exp(-lam * (math.pi * r * r - j)) - np.exp(-lam * math.pi * r * r))

    pts = (u,) if u > 0 else ()
    gap = integrate_1d(f, 0.0, math.inf, spec, points=pts, scale=_r_scale(z, net)).value
    return 1.0 + gap


def _require_noise_free(net: NetworkParams, mode):
    if net.sigma2 != 0:
        raise ModeUnsupported(f"tau mode {mode.name!r} requires sigma2 = 0 (got {net.sigma2})")


def _lower_bound_weight(z, beta):
    kb = k_beta(beta) ** (beta / 2)
    zh = np.power(z, beta / 2)
    return (beta / 2) * zh / z / ((1 + z) * (kb + zh))


def _tau_lower(u: float, net: NetworkParams, spec: QuadratureSpec) -> QuadResult:
    beta, lam = net.beta, net.lam

    def f(z):
        z = np.asarray(z, dtype=float)
        return _lower_bound_weight(z, beta) * np.exp(-math.pi * lam * u * u * z / (1 + z))

    return integrate_1d(f, 0.0, math.inf, spec, tail_power=2.0)


def _tau_lower_deficit(u: float, net: NetworkParams, spec: QuadratureSpec) -> float:
    """lower_bound(u) - lower_bound(0), computed without cancellation."""
    beta, lam = net.beta, net.lam
    if u == 0:
        return 0.0

    def f(z):
        z = np.asarray(z, dtype=float)
        return _lower_bound_weight(z, beta) * np.expm1(-math.pi * lam * u * u * z / (1 + z))

    return integrate_1d(f, 0.0, math.inf, spec, tail_power=2.0).value


def _tau_exact(u: float, net: NetworkParams, spec: QuadratureSpec, polar: bool) -> QuadResult:
    # integrate in w = (z / z_scale)^{2/beta}; dz/z = (beta/2) dw/w and the
    # integrable z^{2/beta - 1} singularity at the origin becomes bounded
    lam, beta, sigma2 = net.lam, net.beta, net.sigma2
    inner_spec = spec.tightened(10.0)
    z_scale = (math.pi * lam) ** (-beta / 2)

    def f(ws):
        ws = np.asarray(ws, dtype=float)
        out = np.zeros_like(ws)
        for i, w in enumerate(ws):
            if w < W_FLOOR:
                continue
            z = z_scale * w ** (beta / 2)
            out[i] = (beta / 2) * math.exp(-sigma2 * z) / w * _laplace_gap(z, u, net, inner_spec, polar)
        return out

    res = integrate_1d(f, 0.0, math.inf, spec)
    return QuadResult(res.value, res.err_est + inner_spec.rel_tol * abs(res.value),
                      res.tail_bound, res.n_intervals)


def tau(u: float, net: NetworkParams, mode: TauMode = Exact(),
        spec: QuadratureSpec = DEFAULT_SPEC, *, full_output=False):
    """Expected rate at distance ``u`` from the point where the serving BS was nearest."""
    if u < 0:
        raise ValidationError(f"u must be nonnegative (got {u})")
    if isinstance(mode, Exact):
        return _ret(_tau_exact(u, net, spec, polar=False), full_output)
    if isinstance(mode, ExactPolarJ):
        return _ret(_tau_exact(u, net, spec, polar=True), full_output)
    if isinstance(mode, LowerBound):
        _require_noise_free(net, mode)
        return _ret(_tau_lower(u, net, spec), full_output)
    if isinstance(mode, Interpolated):
        _require_noise_free(net, mode)
        lb = _tau_lower(u, net, spec)
        base = t0(net, spec, full_output=True)
        e = float(mode.eps(u))
        value = e * base.value + (1 - e) * lb.value
        res = QuadResult(value, e * base.err_est + (1 - e) * lb.err_est)
        return _ret(res, full_output)
    raise ValidationError(f"unknown tau mode {mode!r}")


class TauTable:
    """Monotone cubic interpolant of tau on ``[0, u_max]``.

    Nodes are uniform in ``asinh(u / u0)``; the grid is doubled until the
    interpolant predicts freshly computed midpoints to ``tol`` relative to the
    largest tabulated value, or ``max_nodes`` is reached.
    """

    def __init__(self, net: NetworkParams, mode: TauMode, u_max: float,
                 spec: QuadratureSpec = DEFAULT_SPEC, tol: float = 1e-4,
                 max_nodes: int = 256, start_nodes: int = 9):
        self.net, self.mode, self.spec = net, mode, spec
        self.u_max = float(u_max)
        self.u0 = 0.05 / math.sqrt(net.lam)
        self._evaluations = 0
        self.max_err = 0.0
        self.err_est = 0.0
        if self.u_max <= 0:
            v = self._tau(0.0)
            self.nodes = np.array([0.0])
            self.values = np.array([v.value])
            self.err_est = v.err_est
            self._interp = None
            return
        xi_max = math.asinh(self.u_max / self.u0)
        n = start_nodes
        xi = np.linspace(0.0, xi_max, n)
        vals = np.array([self._tau_value(self._u(x)) for x in xi])
        while True:
            interp = PchipInterpolator(xi, vals)
            mids = 0.5 * (xi[1:] + xi[:-1])
            mid_vals = np.array([self._tau_value(self._u(x)) for x in mids])
            # error relative to the largest tabulated rate, which is what t1 averages
            scale = max(float(np.max(np.abs(vals))), 1e-300)
            self.max_err = float(np.max(np.abs(interp(mids) - mid_vals)) / scale)
            all_xi = np.concatenate([xi, mids])
            order = np.argsort(all_xi)
            xi = all_xi[order]
            vals = np.concatenate([vals, mid_vals])[order]
            if self.max_err < tol or len(xi) * 2 - 1 > max_nodes:
                break
        self.nodes = self._u(xi)
        self.values = vals
        self._xi = xi
        self._interp = PchipInterpolator(xi, vals)

    def _u(self, xi):
        return self.u0 * np.sinh(xi)

    def _tau(self, u):
        self._evaluations += 1
        return tau(float(u), self.net, self.mode, self.spec, full_output=True)

    def _tau_value(self, u):
        r = self._tau(u)
        self.err_est = max(self.err_est, r.err_est)
        return r.value

    @property
    def evaluations(self) -> int:
        return self._evaluations

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self._interp is None:
            return np.full(u.shape, self.values[0])
        if np.any(u > self.u_max * (1 + 1e-12)):
            raise ValueError("u beyond tabulated range")
        return self._interp(np.arcsinh(np.minimum(u, self.u_max) / self.u0))


def speed_support_max(dist: SpeedDistribution) -> float:
    if isinstance(dist, Constant):
        return dist.v
    return dist.mean + 10 * math.sqrt(dist.variance)


def _speed_expectation(dist: SpeedDistribution, g: Callable[[np.ndarray], np.ndarray],
                       spec: QuadratureSpec) -> QuadResult:
    """E[g(V)] for a vectorized ``g``: exact for Constant, quadrature otherwise."""
    if isinstance(dist, Constant):
        return QuadResult(float(np.asarray(g(np.array([dist.v])))[0]), 0.0)
    hi = speed_support_max(dist)
    comps = dist.components()

    def density(v):
        out = np.zeros_like(v)
        for w, k, theta in comps:
            out += w * np.power(v, k - 1) * np.exp(-v / theta) / (math.gamma(k) * theta ** k)
        return out

    # renormalise over the truncated support so constants integrate exactly
    mass = integrate_1d(density, 0.0, hi, spec).value
    res = integrate_1d(lambda v: g(v) * density(v), 0.0, hi, spec)
    return QuadResult(res.value / mass, res.err_est / mass)


def t1(s: int, net: NetworkParams, mob: MobilityModel, mode: TauMode = Exact(),
       spec: QuadratureSpec = DEFAULT_SPEC, *, table: TauTable | None = None,
       full_output=False):
    """Expected rate under periodic skipping with period ``s`` (nats/slot)."""
    if s < 1 or int(s) != s:
        raise ValidationError(f"skipping period must be an integer >= 1 slot (got {s})")
    s = int(s)
    if s == 1 or mean_speed(mob) == 0:
        return tau(0.0, net, mode, spec, full_output=full_output)
    u_max = (s - 1) * speed_support_max(mob.speed)
    if table is None or table.u_max < u_max or table.mode != mode or table.net != net:
        table = TauTable(net, mode, u_max, spec)
    ts = np.arange(s, dtype=float)

    def g(vs):
        vs = np.atleast_1d(np.asarray(vs, dtype=float))
        return np.array([math.fsum(table(ts * v)) / s for v in vs])

    res = _speed_expectation(mob.speed, g, spec)
    err = res.err_est + table.err_est + table.max_err * abs(res.value)
    return _ret(QuadResult(res.value, err), full_output)


# ---------------------------------------------------------------------------
# handover rates


def h0(net: NetworkParams, mob: MobilityModel) -> float:
    """Nearest-BS handover rate 4 sqrt(lam) vbar / pi (HOs/slot)."""
    return 4 * math.sqrt(net.lam) * mean_speed(mob) / math.pi


def skipped_area(r, l, phi):
    """Area of the disk around the new position that is not covered by b_0(r).

    This is ``eta - pi r^2``, written with angle differences so small
    displacements do not cancel catastrophically.
    """
    r = np.asarray(r, dtype=float)
    l = np.asarray(l, dtype=float)
    phi = np.asarray(phi, dtype=float)
    sp, cp = np.sin(phi), np.cos(phi)
    theta = np.arctan2(r * sp, r * cp - l)
    dtheta = np.arctan2(l * sp, r - l * cp)
    return (l * l - 2 * r * l * cp) * theta + r * r * dtheta + r * l * sp


def eta(r, l, phi):
    """Area-like exponent of the no-handover probability; equals pi r^2 when l = 0."""
    r_ = np.asarray(r, dtype=float)
    if np.any(r_ < 0) or np.any(np.asarray(l) < 0):
        raise ValidationError("eta requires r >= 0 and l >= 0")
    p = np.asarray(phi, dtype=float)
    if np.any(p < 0) or np.any(p > math.pi):
        raise ValidationError("eta requires phi in [0, pi]")
    out = math.pi * r_ * r_ + skipped_area(r, l, phi)
    return float(out) if np.ndim(out) == 0 else out


def ho_probability(l: float, net: NetworkParams, spec: QuadratureSpec = DEFAULT_SPEC) -> QuadResult:
    """Probability that a cycle with displacement ``l`` km ends with a handover."""
    if l < 0:
        raise ValidationError("displacement must be nonnegative")
    if l == 0:
        return QuadResult(0.0, 0.0)
    lam = net.lam

    def f(phi, r):
        d = skipped_area(r, l, phi)
        return 2 * lam * r * np.exp(-lam * math.pi * r * r) * -np.expm1(-lam * d)

    scale = 1.0 / math.sqrt(math.pi * lam)
    return integrate_nested(f, [(0.0, math.pi), (0.0, math.inf)], spec,
                            points=[(), (l,)], scales=[1.0, scale])


def h1(s: int, net: NetworkParams, mob: MobilityModel, spec: QuadratureSpec = DEFAULT_SPEC,
       *, full_output=False):
    """Handover rate under periodic skipping with period ``s`` (HOs/slot)."""
    if s <= 0:
        raise ValidationError(f"skipping period must be positive (got {s})")
    if mean_speed(mob) == 0:
        return _ret(QuadResult(0.0, 0.0), full_output)
    inner = spec.tightened(10.0)
    if isinstance(mob.speed, Constant):
        p = ho_probability(s * mob.speed.v, net, inner)
        return _ret(QuadResult(p.value / s, p.err_est / s), full_output)

    def g(vs):
        return np.array([ho_probability(s * float(v), net, inner).value for v in np.atleast_1d(vs)])

    res = _speed_expectation(mob.speed, g, spec)
    return _ret(QuadResult(res.value / s, res.err_est / s), full_output)


# ---------------------------------------------------------------------------
# utility and the optimal skipping period


def utility(T: float, H: float, c: float) -> float:
    """T - c H (nats/slot); may be negative."""
    if not c > 0:
        raise ValidationError(f"utility constant c must be positive (got {c})")
    return T - c * H


def sopt_integral(beta: float, spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """int_0^inf z^{b/2} / ((1+z)^2 (K^{b/2} + z^{b/2})) dz."""
    kb = k_beta(beta) ** (beta / 2)

    def f(z):
        zh = np.power(z, beta / 2)
        return zh / ((1 + z) ** 2 * (kb + zh))

    return integrate_1d(f, 0.0, math.inf, spec, tail_power=2.0).value


class SoptResult(NamedTuple):
    s_star: float
    nearest: int


_SOPT_PREFACTOR = 15 / math.pi ** 2 - 1
# slope of the small-speed handover-rate derivative, per lam v^2
_HO_SLOPE = 5 / (2 * math.pi) - math.pi / 6


def sopt(beta: float, c: float, spec: QuadratureSpec = DEFAULT_SPEC) -> SoptResult:
    """Closed-form approximate optimal skipping period (slots)."""
    if not c > 0:
        raise ValidationError(f"utility constant c must be positive (got {c})")
    s = _SOPT_PREFACTOR * c / (2 * beta) / sopt_integral(beta, spec)
    return SoptResult(s, max(1, int(math.floor(s + 0.5))))


def small_speed_residual(s: float, net: NetworkParams, v: float, c: float,
                        spec: QuadratureSpec = DEFAULT_SPEC) -> float:
    """Small-speed approximation of d(lower-bound utility)/ds; linear in s."""
    if not s > 0 or not v > 0:
        raise ValidationError("residual requires s > 0 and v > 0")
    lam, beta = net.lam, net.beta
    ib = sopt_integral(beta, spec)
    return -(math.pi * lam * beta / 3) * s * v * v * ib + _HO_SLOPE * c * lam * v * v


def _mean_expm1_gauss(x):
    """(1/s) int_0^s expm1(-a t^2) dt as a function of x = a s^2."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = x < 0.5
    xs = x[small]
    term = np.ones_like(xs)
    acc = np.zeros_like(xs)
    for k in range(1, 20):
        term = term * (-xs) / k
        acc = acc + term / (2 * k + 1)
    out[small] = acc
    xl = x[~small]
    out[~small] = 0.5 * np.sqrt(math.pi / xl) * special.erf(np.sqrt(xl)) - 1.0
    return out


def lower_bound_utility(s: float, net: NetworkParams, v: float, c: float,
                        spec: QuadratureSpec = DEFAULT_SPEC, *,
                        relaxation: str = "continuous", relative: bool = True) -> float:
    """Lower-bound utility at constant speed ``v``.

    ``relaxation="continuous"`` averages the bound over ``t`` in ``[0, s]``
    (real ``s``); ``"discrete"`` sums over the integer slots ``0..s-1``.
    With ``relative=True`` the speed-free constant lower_bound(0) - c h0 is
    subtracted, which keeps the tiny differences between nearby ``s``
    resolvable at small speeds.
    """
    _require_noise_free(net, LowerBound())
    lam, beta = net.lam, net.beta
    if relaxation == "continuous":
        def f(z):
            z = np.asarray(z, dtype=float)
            x = math.pi * lam * v * v * s * s * z / (1 + z)
            return _lower_bound_weight(z, beta) * _mean_expm1_gauss(x)
        t_def = integrate_1d(f, 0.0, math.inf, spec, tail_power=2.0).value
    elif relaxation == "discrete":
        n = int(s)
        if n != s or n < 1:
            raise ValidationError("discrete relaxation needs an integer s >= 1")
        t_def = math.fsum(_tau_lower_deficit(t * v, net, spec) for t in range(1, n)) / n
    else:
        raise ValidationError(f"unknown relaxation {relaxation!r}")
    p = ho_probability(s * v, net, spec).value
    h_def = (p - 4 * math.sqrt(lam) * s * v / math.pi) / s
    rel = t_def - c * h_def
    if relative:
        return rel
    base = _tau_lower(0.0, net, spec).value - c * 4 * math.sqrt(lam) * v / math.pi
    return base + rel


class SoptNumericResult(NamedTuple):
    s: float
    s_int: int
    utility: float
    grid: np.ndarray
    values: np.ndarray


_GOLDEN = (math.sqrt(5) - 1) / 2


def sopt_numeric(net: NetworkParams, v: float, c: float, s_range=(1.0, 1e4),
                 spec: QuadratureSpec | None = None, *, relaxation: str = "continuous",
                 n_grid: int = 32, xtol: float = 1e-4) -> SoptNumericResult:
    """Locally maximize the lower-bound utility over the skipping period.

    A geometric grid of ``n_grid`` points locates the best bracket, then a
    golden-section search refines it.  Ties go to the smaller ``s``.
    """
    s_lo, s_hi = map(float, s_range)
    if not (s_lo >= 1 and s_hi > s_lo):
        raise ValidationError("s_range must satisfy 1 <= s_lo < s_hi")
    if not v > 0:
        raise ValidationError("speed must be positive")
    if spec is None:
        spec = QuadratureSpec(rel_tol=1e-11, abs_tol=1e-300, max_subdivisions=400)
    discrete = relaxation == "discrete"

    def U(s):
        if discrete:
            s = int(round(s))
        return lower_bound_utility(s, net, v, c, spec, relaxation=relaxation)

    grid = np.geomspace(s_lo, s_hi, n_grid)
    if discrete:
        grid = np.unique(np.round(grid))
    vals = np.array([U(s) for s in grid])
    i = int(np.argmax(vals))  # first maximum: ties toward smaller s
    if i == 0 or i == len(grid) - 1:
        raise NoInteriorMaximum(
            f"lower-bound utility is maximal at the range boundary s={grid[i]:g}; widen s_range",
            float(grid[i]))
    a, b = float(grid[i - 1]), float(grid[i + 1])
    if discrete:
        cand = np.arange(int(a), int(b) + 1)
        cvals = np.array([U(s) for s in cand])
        j = int(np.argmax(cvals))
        best = int(cand[j])
        return SoptNumericResult(float(best), best, float(cvals[j]), grid, vals)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = U(x1), U(x2)
    while b - a > xtol * max(1.0, abs(a)):
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = U(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = U(x2)
    s_best = 0.5 * (a + b)
    return SoptNumericResult(s_best, max(1, int(math.floor(s_best + 0.5))), U(s_best), grid, vals)
