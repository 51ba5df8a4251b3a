"""Fidelity averaged over line, circle and 2D-Gaussian distributions of input amplitudes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .core import ChannelParams, DomainError, TeleporterParams
from .fidelity import channel_constants, h_function, kernel_terms
from .special import log_bessel_i0, sqrt_pi_erf_over_2z

LINE_NODES = 128
CIRCLE_NODES = 512
GAUSS_RADIAL_NODES = 64
GAUSS_ANGULAR_NODES = 256
R_CAP = 10.0


class NoInteriorMax(ArithmeticError):
    """The fidelity is monotone in r; there is no finite interior maximum."""


def _positive(name, value):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class LineDist:
    """Real amplitudes uniform on [-L, L]."""

    L: float

    def __post_init__(self):
        _positive("L", self.L)


@dataclass(frozen=True)
class CircleDist:
    """Known amplitude A, uniformly random phase."""

    A: float

    def __post_init__(self):
        if not (math.isfinite(self.A) and self.A >= 0.0):
            raise DomainError(f"A must be finite and >= 0, got {self.A!r}")


@dataclass(frozen=True)
class GaussDist:
    """P(alpha) = exp(-|alpha|^2 / chi) / (pi chi)."""

    var_chi: float

    def __post_init__(self):
        _positive("var_chi", self.var_chi)


@dataclass(frozen=True)
class LineAuxiliary:
    M: float


@dataclass(frozen=True)
class CircleAuxiliaries:
    """Exponents of the circle average and the coefficients of its r-stationarity conditions.

    ``Theta_big``, ``b`` and ``c`` refer to the balanced point theta = pi/4,
    g_q = g_p = g, where R2 vanishes and the average is exp(-R1)/Theta.
    """

    R1: float
    R2: float
    Theta_big: float
    b: float
    c: float


def _mismatch(p: TeleporterParams) -> tuple[float, float]:
    root = math.sqrt(2.0 * p.T)
    return 1.0 - root * p.g_q * math.cos(p.theta), 1.0 - root * p.g_p * math.sin(p.theta)


def line_auxiliary(p: TeleporterParams, c: ChannelParams) -> LineAuxiliary:
    a, _ = _mismatch(p)
    return LineAuxiliary(M=a * a * h_function(p.g_p, math.cos(p.theta), p.T, c))


def avg_fidelity_line(p: TeleporterParams, c: ChannelParams, d: LineDist) -> float:
    """Average over real amplitudes in [-L, L].

    Written as ``phi(z) / sqrt(G)`` with ``phi(z) = sqrt(pi) erf(z) / (2z)``,
    which stays finite at the amplitude-independent gains where M = 0.
    """
    return _line_raw(p.theta, p.g_q, p.g_p, p.T, channel_constants(c), d.L)


def _line_raw(theta, g_q, g_p, T, consts, L):
    _, _, _, _, plus, minus = kernel_terms(theta, g_q, g_p, T, consts)
    a = 1.0 - math.sqrt(2.0 * T) * g_q * math.cos(theta)
    return sqrt_pi_erf_over_2z(abs(a) * L / math.sqrt(plus)) / math.sqrt(plus * minus)


def gp_opt_line(theta: float, T: float, c: ChannelParams) -> float:
    """Gain g_p minimizing H(g_p, cos theta); does not depend on n_bar."""
    cos_t = math.cos(theta)
    return (
        math.exp(-c.kappa_t) * math.sqrt(2.0 * T) * cos_t * math.sinh(2.0 * c.r)
        / (2.0 * (1.0 + 2.0 * T * cos_t**2 * math.sinh(c.r) ** 2))
    )


def circle_exponents(p: TeleporterParams, c: ChannelParams, d: CircleDist) -> tuple[float, float]:
    """(R1, R2): the average is exp(-R1) I0(2 R2) / sqrt(G)."""
    R1, R2, _ = _circle_terms(p.theta, p.g_q, p.g_p, p.T, channel_constants(c), d.A)
    return R1, R2


def _circle_terms(theta, g_q, g_p, T, consts, A):
    f1, f2, K1, K2, plus, minus = kernel_terms(theta, g_q, g_p, T, consts)
    G = plus * minus
    u, v = 1.0 - f1, f2
    R1 = A * A * (K1 * (u * u + v * v) + 4.0 * K2 * u * v) / G
    R2 = A * A * (K1 * u * v + K2 * (u * u + v * v)) / G
    return R1, R2, G


def _circle_raw(theta, g_q, g_p, T, consts, A):
    R1, R2, G = _circle_terms(theta, g_q, g_p, T, consts, A)
    return math.exp(-R1 + log_bessel_i0(2.0 * abs(R2))) / math.sqrt(G)


def avg_fidelity_circle(p: TeleporterParams, c: ChannelParams, d: CircleDist) -> float:
    """Average over the phase of a coherent state with known amplitude A."""
    return _circle_raw(p.theta, p.g_q, p.g_p, p.T, channel_constants(c), d.A)


def _theta_big(g: float, T: float, c: ChannelParams) -> float:
    s, e = g * math.sqrt(T), math.exp(-c.kappa_t)
    return c.Gamma + (
        g * g * (2.0 - T) + 1.0 + (s - e) ** 2 * math.cosh(2.0 * c.r) + 2.0 * s * e * math.exp(-2.0 * c.r)
    ) / 2.0


def circle_balanced(g: float, T: float, c: ChannelParams, d: CircleDist) -> CircleAuxiliaries:
    s, e = g * math.sqrt(T), math.exp(-c.kappa_t)
    theta_big = _theta_big(g, T, c)
    D = d.A**2 * (1.0 - s) ** 2
    if s == e:
        b = cc = math.inf
    else:
        b = (4.0 * (D - c.Gamma) - 2.0 * (g * g * (2.0 - T) + 1.0)) / (s - e) ** 2
        cc = (s + e) / (s - e)
    return CircleAuxiliaries(R1=D / theta_big, R2=0.0, Theta_big=theta_big, b=b, c=cc)


def circle_opt_fidelity(g: float, T: float, c: ChannelParams, d: CircleDist) -> float:
    """Circle average at theta = pi/4, g_q = g_p = g: exp(-A^2 (1 - g sqrt T)^2 / Theta) / Theta."""
    if not (math.isfinite(g) and g >= 0.0):
        raise DomainError(f"gain must be finite and >= 0, got {g!r}")
    theta_big = _theta_big(g, T, c)
    return math.exp(-(d.A**2) * (1.0 - g * math.sqrt(T)) ** 2 / theta_big) / theta_big


def _circle_r_candidates(g, T, c, d):
    s, e = g * math.sqrt(T), math.exp(-c.kappa_t)
    D = d.A**2 * (1.0 - s) ** 2
    offset = g * g * (2.0 - T) + 1.0
    if abs(s - e) <= 1e-12 * (s + e):
        # Theta = Gamma + (offset + 2 s^2 exp(-2r)) / 2 is monotone; only Theta = D can be stationary
        w = (2.0 * (D - c.Gamma) - offset) / (2.0 * s * s) if s > 0 else -1.0
        return [-0.5 * math.log(w)] if 0.0 < w < 1.0 else []
    found = []
    ratio = 2.0 * s * e / (s * s + e * e)
    if 0.0 < ratio < 1.0:
        found.append(0.5 * math.atanh(ratio))
    # Theta = D  <=>  u^2 - b u + c^2 = 0 with u = exp(2r)
    b = (4.0 * (D - c.Gamma) - 2.0 * offset) / (s - e) ** 2
    cc = (s + e) / (s - e)
    disc = b * b - 4.0 * cc * cc
    if disc >= 0.0:
        for u in ((b + math.sqrt(disc)) / 2.0, (b - math.sqrt(disc)) / 2.0):
            if u > 1.0:
                found.append(0.5 * math.log(u))
    return found


def r_max_circle(g: float, T: float, c: ChannelParams, d: CircleDist, r_cap: float = R_CAP) -> float:
    """Squeezing maximizing the balanced circle average, from its stationarity conditions.

    Candidates are the minimum of Theta(r) and the roots of Theta(r) = A^2 (1 - g sqrt T)^2;
    the best local maximum in (0, r_cap] is returned.
    """

    def f(r):
        return circle_opt_fidelity(g, T, c.replace(r=r), d)

    best = None
    for r in _circle_r_candidates(g, T, c, d):
        if not 0.0 < r <= r_cap:
            continue
        h = 1e-3 * max(1.0, r)
        fr = f(r)
        if f(r - h) - 2.0 * fr + f(r + h) >= 0.0:
            continue
        if best is None or fr > best[1]:
            best = (r, fr)
    if best is None:
        raise NoInteriorMax(f"no interior maximum in r for g={g}, T={T}, {c}, {d}")
    return best[0]


def avg_fidelity_gauss(p: TeleporterParams, c: ChannelParams, d: GaussDist) -> float:
    """Average over the 2D Gaussian distribution of amplitudes with variance parameter chi."""
    return _gauss_raw(p.theta, p.g_q, p.g_p, p.T, channel_constants(c), d.var_chi)


def _gauss_raw(theta, g_q, g_p, T, consts, chi):
    _, _, _, _, plus, minus = kernel_terms(theta, g_q, g_p, T, consts)
    root = math.sqrt(2.0 * T)
    a = 1.0 - root * g_q * math.cos(theta)
    b = 1.0 - root * g_p * math.sin(theta)
    return ((minus + chi * b * b) * (plus + chi * a * a)) ** -0.5


def gauss_opt_gain(T: float, c: ChannelParams, d: GaussDist) -> float:
    chi = d.var_chi
    return (
        math.sqrt(T) * (math.exp(-c.kappa_t) * math.sinh(2.0 * c.r) + 2.0 * chi)
        / (2.0 * (1.0 + T * (math.sinh(c.r) ** 2 + chi)))
    )


def gauss_opt_fidelity(T: float, c: ChannelParams, d: GaussDist) -> float:
    g = gauss_opt_gain(T, c, d)
    return 1.0 / (h_function(g, math.sqrt(0.5), T, c) + d.var_chi * (1.0 - g * math.sqrt(T)) ** 2)


def r_max_gauss(T: float, kappa_t: float, d: GaussDist) -> float:
    """Squeezing maximizing the optimized Gaussian average; independent of n_bar."""
    chi = d.var_chi
    denom = math.expm1(kappa_t) * T * chi - 1.0
    if not denom > 0.0:
        raise NoInteriorMax(f"(e^kt - 1) T chi = {denom + 1.0!r} <= 1: fidelity is monotone in r")
    return 0.5 * math.log(((math.exp(kappa_t) + 1.0) * T * chi + 1.0) / denom)


# fixed-order quadrature rules over each distribution, used for numerical averaging


@lru_cache(maxsize=None)
def _legendre(n):
    return np.polynomial.legendre.leggauss(n)


@lru_cache(maxsize=None)
def _laguerre(n):
    return np.polynomial.laguerre.laggauss(n)


def distribution_nodes(d) -> tuple[np.ndarray, np.ndarray]:
    """Complex amplitudes and weights (summing to 1) of the fixed quadrature rule for ``d``."""
    if isinstance(d, LineDist):
        x, w = _legendre(LINE_NODES)
        return (d.L * x).astype(complex), w / 2.0
    if isinstance(d, CircleDist):
        phi = 2.0 * np.pi * np.arange(CIRCLE_NODES) / CIRCLE_NODES
        return d.A * np.exp(1j * phi), np.full(CIRCLE_NODES, 1.0 / CIRCLE_NODES)
    if isinstance(d, GaussDist):
        t, wt = _laguerre(GAUSS_RADIAL_NODES)
        phi = 2.0 * np.pi * np.arange(GAUSS_ANGULAR_NODES) / GAUSS_ANGULAR_NODES
        rho = np.sqrt(d.var_chi * t)
        nodes = (rho[:, None] * np.exp(1j * phi)[None, :]).ravel()
        weights = (wt[:, None] * np.full(GAUSS_ANGULAR_NODES, 1.0 / GAUSS_ANGULAR_NODES)).ravel()
        return nodes, weights
    raise TypeError(f"unknown distribution {d!r}")


def average_numerically(fidelity, d) -> float:
    """Average ``fidelity`` (vectorized over complex amplitudes) with the fixed rule for ``d``."""
    nodes, weights = distribution_nodes(d)
    return float(np.dot(weights, fidelity(nodes)))


def raw_average(d):
    """``(f, parameter)`` with ``f(theta, g_q, g_p, T, consts, parameter)`` the closed-form average for ``d``."""
    if isinstance(d, LineDist):
        return _line_raw, d.L
    if isinstance(d, CircleDist):
        return _circle_raw, d.A
    if isinstance(d, GaussDist):
        return _gauss_raw, d.var_chi
    raise TypeError(f"unknown distribution {d!r}")


def avg_fidelity(p: TeleporterParams, c: ChannelParams, d) -> float:
    """Closed-form average for any of the three distributions."""
    f, parameter = raw_average(d)
    return f(p.theta, p.g_q, p.g_p, p.T, channel_constants(c), parameter)
