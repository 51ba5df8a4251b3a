"""Closed-form fidelity for coherent inputs teleported with a two-mode squeezed vacuum.

All hyperbolic combinations are written as ``exp(2r)`` / ``exp(-2r)``
weighted squares, which avoids the cancellation between ``cosh 2r`` and
``sinh 2r`` terms at large squeezing.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    ChannelParams,
    DerivedCoeffs,
    DomainError,
    NonPositiveG,
    TeleporterParams,
    amplitude_independent_gains,
    derived_coeffs,
)

THETA_GRID_POINTS = 2000


class ThresholdWarning(UserWarning):
    """theta = pi/4 is no longer the only stationary point; a numerical search was used."""


@dataclass(frozen=True)
class FidelityKernel:
    K1: float
    K2: float
    G: float

    @property
    def plus(self) -> float:
        """K1 + 2 K2."""
        return self.K1 + 2.0 * self.K2

    @property
    def minus(self) -> float:
        """K1 - 2 K2."""
        return self.K1 - 2.0 * self.K2


@dataclass(frozen=True)
class CoherentAmplitude:
    re: float = 0.0
    im: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise DomainError("coherent amplitude must be finite")

    @classmethod
    def from_complex(cls, z: complex) -> CoherentAmplitude:
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self) -> complex:
        return complex(self.re, self.im)

    def delta(self, coeffs: DerivedCoeffs) -> complex:
        """Amplitude mismatch (1 - f1) eps* - eps f2."""
        eps = complex(self)
        return (1.0 - coeffs.f1) * eps.conjugate() - eps * coeffs.f2


def _exp(x: float) -> float:
    """exp(x), saturating to inf instead of raising on overflow."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _hyperbolic_mix(a: float, b: float, r: float) -> float:
    """(a^2 + b^2) cosh(2r)/2 - a b sinh(2r), without cancellation."""
    return 0.25 * (_exp(2.0 * r) * (a - b) ** 2 + math.exp(-2.0 * r) * (a + b) ** 2)


def channel_constants(c: ChannelParams) -> tuple[float, float, float, float, float]:
    """(exp(-kt), exp(2r), exp(-2r), cosh(2r), Gamma), reused across many kernel evaluations.

    At extreme squeezing exp(2r) saturates to inf, which the kernel reports as :class:`NonPositiveG`.
    """
    up = _exp(2.0 * c.r)
    return math.exp(-c.kappa_t), up, math.exp(-2.0 * c.r), 0.5 * (up + math.exp(-2.0 * c.r)), c.Gamma


def kernel_terms(theta: float, g_q: float, g_p: float, T: float, consts) -> tuple[float, ...]:
    """(f1, f2, K1, K2, K1 + 2K2, K1 - 2K2) from raw floats; ``consts`` from :func:`channel_constants`."""
    decay, up, down, ch2, gamma = consts
    s = math.sqrt(T / 2.0)
    cos_t, sin_t = math.cos(theta), math.sin(theta)
    f1 = s * (g_q * cos_t + g_p * sin_t)
    f2 = s * (g_q * cos_t - g_p * sin_t)
    f3 = s * (g_q * sin_t + g_p * cos_t)
    f4 = s * (g_q * sin_t - g_p * cos_t)
    R = 1.0 - T
    K1 = (
        0.5 * (1.0 + f1 * f1 + f2 * f2 + 2.0 * gamma)
        + 0.5 * R * (g_p * g_p + g_q * g_q)
        + 0.5 * f4 * f4 * ch2
        + 0.25 * (up * (f3 - decay) ** 2 + down * (f3 + decay) ** 2)
    )
    # f3 cosh 2r - e^{-kt} sinh 2r
    f3_mix = 0.5 * (up * (f3 - decay) + down * (f3 + decay))
    K2 = 0.5 * (f1 * f2 - 0.5 * R * (g_p * g_p - g_q * g_q) + f4 * f3_mix)
    plus, minus = K1 + 2.0 * K2, K1 - 2.0 * K2
    if not (plus > 0.0 and minus > 0.0 and math.isfinite(plus * minus)):
        raise NonPositiveG(
            f"G = (K1+2K2)(K1-2K2) = {plus!r} * {minus!r} is not positive "
            f"(theta={theta!r}, g_q={g_q!r}, g_p={g_p!r}, T={T!r})"
        )
    return f1, f2, K1, K2, plus, minus


def kernel(p: TeleporterParams, c: ChannelParams) -> FidelityKernel:
    """Kernel coefficients K1, K2 and G = K1^2 - 4 K2^2 of the coherent-state fidelity."""
    _, _, K1, K2, plus, minus = kernel_terms(p.theta, p.g_q, p.g_p, p.T, channel_constants(c))
    return FidelityKernel(K1=K1, K2=K2, G=plus * minus)


def fidelity_from_kernel(coeffs: DerivedCoeffs, kern: FidelityKernel, eps):
    """Point fidelity for one or many complex amplitudes ``eps`` (array-friendly)."""
    eps = np.asarray(eps, dtype=complex)
    delta = (1.0 - coeffs.f1) * np.conj(eps) - eps * coeffs.f2
    exponent = (-kern.K1 * np.abs(delta) ** 2 + 2.0 * kern.K2 * (delta**2).real) / kern.G
    out = np.exp(exponent) / math.sqrt(kern.G)
    return float(out) if out.ndim == 0 else out


def point_fidelity(p: TeleporterParams, c: ChannelParams, eps=CoherentAmplitude()) -> float:
    """Fidelity of teleporting the coherent state with amplitude ``eps``.

    ``eps`` may be a :class:`CoherentAmplitude` or a Python complex.
    """
    if isinstance(eps, CoherentAmplitude):
        eps = complex(eps)
    return fidelity_from_kernel(derived_coeffs(p, c), kernel(p, c), eps)


def h_function(x: float, y: float, T: float, c: ChannelParams) -> float:
    """H(x, y); K1 + 2K2 = H(g_q, sin theta) and K1 - 2K2 = H(g_p, cos theta)."""
    s = math.sqrt(2.0 * T) * x * y
    return 0.5 + c.Gamma + x * x - 0.5 * s * s + _hyperbolic_mix(s, math.exp(-c.kappa_t), c.r)


def eps_independent_fidelity(theta: float, T: float, c: ChannelParams) -> float:
    """Fidelity at the amplitude-independent gains for beam-splitter angle ``theta``."""
    g_q, g_p = amplitude_independent_gains(theta, T)
    return (h_function(g_q, math.sin(theta), T, c) * h_function(g_p, math.cos(theta), T, c)) ** -0.5


def _stationarity_terms(T: float, c: ChannelParams) -> tuple[float, float]:
    decay = math.exp(-c.kappa_t)
    sh2 = math.sinh(2.0 * c.r)
    first = decay * sh2 / (1.0 / T + 2.0 * math.sinh(c.r) ** 2)
    second = decay * sh2 / (1.0 / T + 1.0 + 2.0 * c.Gamma + decay**2 * math.cosh(2.0 * c.r))
    return first, second


def theta_stationarity_gap(T: float, c: ChannelParams) -> float:
    """1 - (FI + SI)/2. Positive means theta = pi/4 is the only stationary angle."""
    first, second = _stationarity_terms(T, c)
    return 1.0 - 0.5 * (first + second)


def _golden_max(f, lo, hi, tol=1e-12, max_iter=200):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - invphi * (b - a), a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
    x = (a + b) / 2.0
    return x, f(x)


def grid_argmax(f, lo: float, hi: float, points: int = THETA_GRID_POINTS) -> tuple[float, float]:
    """Dense-grid maximum refined by golden-section search in the neighbouring cells."""
    xs = np.linspace(lo, hi, points)
    values = np.array([f(x) for x in xs])
    i = int(np.argmax(values))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, points - 1)]
    x, fx = _golden_max(f, a, b)
    if values[i] > fx:
        return float(xs[i]), float(values[i])
    return x, fx


def optimal_theta_eps_independent(T: float, c: ChannelParams) -> tuple[float, float, bool]:
    """Best angle, its fidelity, and whether the closed-form optimum theta = pi/4 applies."""
    if theta_stationarity_gap(T, c) > 0.0:
        return math.pi / 4, _eps_independent_at_quarter(T, c), True
    eps = 1e-6
    theta, value = grid_argmax(lambda th: eps_independent_fidelity(th, T, c), eps, math.pi / 2 - eps)
    return theta, value, False


def _eps_independent_at_quarter(T: float, c: ChannelParams) -> float:
    decay = math.exp(-c.kappa_t)
    return 1.0 / (1.0 / T + c.Gamma + _hyperbolic_mix(1.0, decay, c.r))


def optimal_eps_independent_fidelity(T: float, c: ChannelParams) -> float:
    """Amplitude-independent fidelity maximized over the beam-splitter angle.

    Below the squeezing threshold this is
    ``1 / (1/T + Gamma + exp(-kt) (cosh(kt) cosh(2r) - sinh(2r)))``; above it
    a grid search over theta is used and a :class:`ThresholdWarning` issued.
    """
    if not 0.0 < T <= 1.0:
        raise DomainError(f"T must lie in (0, 1], got {T!r}")
    _, value, closed_form = optimal_theta_eps_independent(T, c)
    if not closed_form:
        warnings.warn(
            f"r={c.r} is above the stationarity threshold; fidelity maximized numerically over theta",
            ThresholdWarning,
            stacklevel=2,
        )
    return value


def r_max_eps_independent(kappa_t: float) -> float:
    """Squeezing that maximizes the optimal amplitude-independent fidelity: (1/2) ln coth(kt/2)."""
    if not (math.isfinite(kappa_t) and kappa_t > 0.0):
        raise DomainError(f"kappa_t must be > 0 for a finite optimum, got {kappa_t!r}")
    return -0.5 * math.log(math.tanh(kappa_t / 2.0))
