"""Physical parameters of the teleporter and channel, and the coefficients derived from them."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

G_MAX = 20.0
PHYSICALITY_FLOOR = 1e-12

# symplectic form on (Re beta, Im beta, Re gamma, Im gamma)
_OMEGA = np.kron(np.eye(2), np.array([[0.0, 1.0], [-1.0, 0.0]]))


class DomainError(ValueError):
    """A parameter lies outside the domain where the model is defined."""


class NonPositiveG(ArithmeticError):
    """The fidelity kernel determinant G is not strictly positive."""


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class TeleporterParams:
    """The three tunables plus the Bell-measurement transmissivity.

    ``theta`` is the sender's beam-splitter angle in radians, ``g_q`` and
    ``g_p`` the receiver's gains and ``T`` the transmissivity of the beam
    splitters modelling imperfect Bell measurements.
    """

    theta: float
    g_q: float = 1.0
    g_p: float = 1.0
    T: float = 1.0
    g_max: float = field(default=G_MAX, compare=False, repr=False)

    def __post_init__(self):
        theta = _finite("theta", self.theta)
        if not 0.0 < theta < math.pi / 2:
            raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")
        T = _finite("T", self.T)
        if not 0.0 < T <= 1.0:
            raise DomainError(f"T must lie in (0, 1], got {T!r}")
        for name in ("g_q", "g_p"):
            g = _finite(name, getattr(self, name))
            if not 0.0 <= g <= self.g_max:
                raise DomainError(f"{name} must lie in [0, {self.g_max}], got {g!r}")

    @property
    def R(self) -> float:
        return 1.0 - self.T

    def replace(self, **changes) -> TeleporterParams:
        values = dict(theta=self.theta, g_q=self.g_q, g_p=self.g_p, T=self.T, g_max=self.g_max)
        values.update(changes)
        return TeleporterParams(**values)


@dataclass(frozen=True)
class ChannelParams:
    """Decoherence of the receiver's mode and squeezing of the resource.

    Only the product ``kappa_t`` of damping rate and time ever matters.
    """

    kappa_t: float = 0.0
    n_bar: float = 0.0
    r: float = 0.0

    def __post_init__(self):
        for name in ("kappa_t", "n_bar", "r"):
            if _finite(name, getattr(self, name)) < 0.0:
                raise DomainError(f"{name} must be >= 0, got {getattr(self, name)!r}")

    @property
    def Gamma(self) -> float:
        return gamma_thermal(self.kappa_t, self.n_bar)

    def replace(self, **changes) -> ChannelParams:
        values = dict(kappa_t=self.kappa_t, n_bar=self.n_bar, r=self.r)
        values.update(changes)
        return ChannelParams(**values)


def gamma_thermal(kappa_t: float, n_bar: float) -> float:
    """Gaussian broadening (2 n_bar + 1)(1 - exp(-2 kappa_t)) / 2 added by the thermal channel."""
    return (2.0 * n_bar + 1.0) * -math.expm1(-2.0 * kappa_t) / 2.0


@dataclass(frozen=True)
class DerivedCoeffs:
    f1: float
    f2: float
    f3: float
    f4: float
    R: float
    Gamma: float


def derived_coeffs(p: TeleporterParams, c: ChannelParams) -> DerivedCoeffs:
    """Mixing coefficients f1..f4 of the averaged output CF, with R and Gamma."""
    s = math.sqrt(p.T / 2.0)
    cos_t, sin_t = math.cos(p.theta), math.sin(p.theta)
    return DerivedCoeffs(
        f1=s * (p.g_q * cos_t + p.g_p * sin_t),
        f2=s * (p.g_q * cos_t - p.g_p * sin_t),
        f3=s * (p.g_q * sin_t + p.g_p * cos_t),
        f4=s * (p.g_q * sin_t - p.g_p * cos_t),
        R=p.R,
        Gamma=c.Gamma,
    )


def amplitude_independent_gains(theta: float, T: float) -> tuple[float, float]:
    """Gains that make the teleported fidelity independent of the input amplitude.

    They zero the amplitude-dependent term for every entangled resource:
    g_q = 1 / (sqrt(2T) cos theta), g_p = 1 / (sqrt(2T) sin theta).
    """
    theta = _finite("theta", theta)
    T = _finite("T", T)
    if not 0.0 < theta < math.pi / 2:
        raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")
    if not 0.0 < T <= 1.0:
        raise DomainError(f"T must lie in (0, 1], got {T!r}")
    root = math.sqrt(2.0 * T)
    return 1.0 / (root * math.cos(theta)), 1.0 / (root * math.sin(theta))


@dataclass(frozen=True, eq=False)
class GaussianCF2:
    """Zero-mean two-mode Gaussian characteristic function.

    ``chi(beta, gamma) = exp(-v.T @ sigma @ v / 2)`` with
    ``v = (Re beta, Im beta, Re gamma, Im gamma)``. The vacuum has
    ``sigma = I``; physical states satisfy ``sigma + i*Omega >= 0``.
    """

    sigma: np.ndarray
    floor: float = PHYSICALITY_FLOOR

    def __post_init__(self):
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (4, 4) or not np.all(np.isfinite(sigma)):
            raise DomainError("sigma must be a finite 4x4 matrix")
        scale = max(1.0, float(np.abs(sigma).max()))
        if np.abs(sigma - sigma.T).max() > 1e-14 * scale:
            raise DomainError("sigma is not symmetric")
        sigma = (sigma + sigma.T) / 2.0
        if self.floor < 0:
            raise DomainError("physicality floor must be >= 0")
        lowest = np.linalg.eigvalsh(sigma + 1j * _OMEGA)[0]
        if lowest < -self.floor * scale:
            raise DomainError(f"sigma violates the uncertainty relation (eigenvalue {lowest:.3e})")
        sigma.setflags(write=False)
        object.__setattr__(self, "sigma", sigma)

    def evaluate(self, beta, gamma):
        beta = np.asarray(beta, dtype=complex)
        gamma = np.asarray(gamma, dtype=complex)
        v = np.stack([beta.real, beta.imag, gamma.real, gamma.imag], axis=-1)
        return np.exp(-0.5 * np.einsum("...i,ij,...j->...", v, self.sigma, v))


def tmsv_cf(r: float) -> GaussianCF2:
    """Characteristic function of the two-mode squeezed vacuum with squeezing ``r``."""
    r = _finite("r", r)
    if r < 0:
        raise DomainError(f"r must be >= 0, got {r!r}")
    ch, sh = math.cosh(2.0 * r), math.sinh(2.0 * r)
    coupling = -sh * np.diag([1.0, -1.0])
    sigma = np.block([[ch * np.eye(2), coupling], [coupling, ch * np.eye(2)]])
    return GaussianCF2(sigma)
