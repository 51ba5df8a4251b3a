"""Fidelity by direct integration of the characteristic-function overlap.

Every factor of the integrand ``chi_in(lambda) chi_out(-lambda)`` is Gaussian
in ``u = (Re lambda, Im lambda)``, so the overlap collapses to one 2x2
Gaussian integral. The integrand can also be evaluated pointwise from the
complex CFs and integrated on a grid; both paths serve as ground truth for
the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .averaging import CircleDist, GaussDist, LineDist, avg_fidelity, average_numerically
from .core import (
    ChannelParams,
    DomainError,
    GaussianCF2,
    TeleporterParams,
    amplitude_independent_gains,
    derived_coeffs,
    tmsv_cf,
)
from .fidelity import point_fidelity

PD_THRESHOLD = 1e-10
GRID_POINTS = 201
GRID_SIGMAS = 8.0


class Divergent(ArithmeticError):
    """The quadratic form of the integrand is not positive definite."""


@dataclass(frozen=True, eq=False)
class QuadraticExponent:
    """Integrand ``exp(-u.T a u / 2 + l.u + s)`` over ``u = (Re lambda, Im lambda)``.

    ``l`` may be complex (an oscillating factor) and may carry leading batch
    dimensions, shape ``(..., 2)``.
    """

    a: np.ndarray
    l: np.ndarray = field(default_factory=lambda: np.zeros(2))
    s: float = 0.0

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.shape != (2, 2) or abs(a[0, 1] - a[1, 0]) > 1e-12 * max(1.0, np.abs(a).max()):
            raise DomainError("a must be a symmetric 2x2 matrix")
        object.__setattr__(self, "a", (a + a.T) / 2.0)
        object.__setattr__(self, "l", np.asarray(self.l))

    def __call__(self, u):
        u = np.asarray(u)
        quad = np.einsum("...i,ij,...j->...", u, self.a, u)
        return np.exp(-0.5 * quad + u @ self.l + self.s)


def gaussian_integral_2d(q: QuadraticExponent):
    """``int d^2 lambda / pi exp(-u.a.u/2 + l.u + s) = 2 exp(s + l.a^{-1}.l / 2) / sqrt(det a)``.

    Returns a float for real ``l`` and a complex value otherwise.
    """
    lowest = np.linalg.eigvalsh(q.a)[0]
    if not lowest > PD_THRESHOLD:
        raise Divergent(f"quadratic form is not positive definite (smallest eigenvalue {lowest:.3e})")
    l = q.l
    solved = np.linalg.solve(q.a, np.moveaxis(l, -1, 0).reshape(2, -1)).reshape(np.moveaxis(l, -1, 0).shape)
    quad = np.einsum("...i,i...->...", l, solved)
    value = 2.0 * np.exp(q.s + 0.5 * quad) / math.sqrt(np.linalg.det(q.a))
    if np.ndim(value) == 0:
        return complex(value) if np.iscomplexobj(value) else float(value)
    return value


def grid_integral_2d(func, a: np.ndarray, points: int = GRID_POINTS, sigmas: float = GRID_SIGMAS, center=(0.0, 0.0)):
    """``int d^2 lambda / pi func(u)`` by composite Simpson on the principal axes of ``a``.

    Each axis is truncated at ``sigmas`` standard deviations of the envelope
    ``exp(-(u - center).a.(u - center)/2)``. ``func`` receives points of shape ``(n, n, 2)``.
    """
    if points % 2 == 0:
        raise ValueError("Simpson's rule needs an odd number of points")
    evals, evecs = np.linalg.eigh(np.asarray(a, dtype=float))
    if not evals[0] > PD_THRESHOLD:
        raise Divergent(f"envelope is not positive definite (smallest eigenvalue {evals[0]:.3e})")
    half = sigmas / np.sqrt(evals)
    t = np.linspace(-1.0, 1.0, points)
    simpson = np.ones(points)
    simpson[1:-1:2], simpson[2:-1:2] = 4.0, 2.0
    simpson *= (t[1] - t[0]) / 3.0
    s1, s2 = np.meshgrid(t * half[0], t * half[1], indexing="ij")
    u = s1[..., None] * evecs[:, 0] + s2[..., None] * evecs[:, 1] + np.asarray(center, dtype=float)
    values = func(u)
    total = np.einsum("i,ij,j->", simpson, values, simpson) * half[0] * half[1]
    return total / math.pi


@dataclass(frozen=True, eq=False)
class OutputCFSpec:
    """Everything that fixes the teleported output CF, plus the coherent input amplitude."""

    params: TeleporterParams
    channel: ChannelParams
    resource: GaussianCF2 | None = None
    eps: complex = 0j

    def __post_init__(self):
        if self.resource is None:
            object.__setattr__(self, "resource", tmsv_cf(self.channel.r))
        object.__setattr__(self, "eps", complex(self.eps))


def coherent_cf(lam, eps):
    """CF of the coherent state |eps>: exp(-|lam|^2/2 + lam eps* - eps lam*)."""
    lam = np.asarray(lam, dtype=complex)
    return np.exp(-0.5 * np.abs(lam) ** 2 + lam * np.conj(eps) - eps * np.conj(lam))


def output_cf(spec: OutputCFSpec, beta):
    """Averaged CF of the teleported state at Bob's location, evaluated pointwise."""
    p, c = spec.params, spec.channel
    d = derived_coeffs(p, c)
    beta = np.asarray(beta, dtype=complex)
    return (
        np.exp(-d.Gamma * np.abs(beta) ** 2)
        * coherent_cf(d.f1 * beta - d.f2 * np.conj(beta), spec.eps)
        * spec.resource.evaluate(np.conj(beta) * d.f3 - beta * d.f4, beta * math.exp(-c.kappa_t))
        * np.exp(-d.R * (p.g_p**2 * beta.real**2 + p.g_q**2 * beta.imag**2))
    )


def overlap_integrand(spec: OutputCFSpec, u):
    """chi_in(lambda) chi_out(-lambda) at real coordinates ``u = (Re, Im)``."""
    u = np.asarray(u, dtype=float)
    lam = u[..., 0] + 1j * u[..., 1]
    return coherent_cf(lam, spec.eps) * output_cf(spec, -lam)


def _coherent_terms(m: np.ndarray, eps):
    """Quadratic and linear parts of coherent_cf(mu) where (Re mu, Im mu) = m @ u."""
    eps = np.asarray(eps, dtype=complex)
    # mu eps* - eps mu* = 2i Im(mu eps*) = 2i (Im mu Re eps - Re mu Im eps)
    direction = np.stack([-eps.imag, eps.real], axis=-1)
    return m.T @ m, 2j * direction @ m


def overlap_exponent(spec: OutputCFSpec, eps=None, form: str = "input-output") -> QuadraticExponent:
    """Quadratic form of the overlap integrand.

    ``form="input-output"`` composes the output CF in its own argument and
    substitutes ``beta = -lambda``; ``form="overlap"`` writes every factor
    directly in ``lambda``. ``eps`` may be an array of amplitudes, which
    batches the linear term.
    """
    p, c = spec.params, spec.channel
    d = derived_coeffs(p, c)
    decay = math.exp(-c.kappa_t)
    eps = spec.eps if eps is None else eps
    a_in, l_in = _coherent_terms(np.eye(2), eps)
    a = a_in + 2.0 * d.Gamma * np.eye(2) + 2.0 * d.R * np.diag([p.g_p**2, p.g_q**2])
    if form == "input-output":
        # in beta: first CF argument f1 beta - f2 beta*, resource arguments (beta* f3 - beta f4, beta e^{-kt})
        mu = np.diag([d.f1 - d.f2, d.f1 + d.f2])
        nu = np.vstack([np.diag([d.f3 - d.f4, -(d.f3 + d.f4)]), decay * np.eye(2)])
        a_mu, l_mu = _coherent_terms(mu, eps)
        a = a + a_mu + nu.T @ spec.resource.sigma @ nu
        l = l_in - l_mu  # beta = -lambda flips the linear term only
    elif form == "overlap":
        # in lambda: first CF argument -f1 lambda + f2 lambda*, resource arguments (lambda f4 - lambda* f3, -lambda e^{-kt})
        mu = np.diag([d.f2 - d.f1, -(d.f1 + d.f2)])
        nu = np.vstack([np.diag([d.f4 - d.f3, d.f3 + d.f4]), -decay * np.eye(2)])
        a_mu, l_mu = _coherent_terms(mu, eps)
        a = a + a_mu + nu.T @ spec.resource.sigma @ nu
        l = l_in + l_mu
    else:
        raise ValueError(f"unknown form {form!r}")
    return QuadraticExponent(a=a, l=l)


def fidelity_by_quadrature(spec: OutputCFSpec, method: str = "gaussian", eps=None):
    """Teleportation fidelity as the overlap of input and output CFs.

    ``method="gaussian"`` integrates the assembled quadratic form exactly;
    ``method="grid"`` integrates the pointwise CF product numerically.
    ``eps`` optionally overrides the amplitude with an array (gaussian method only).
    """
    if method == "gaussian":
        value = gaussian_integral_2d(overlap_exponent(spec, eps))
        return np.real(value) if eps is not None else float(np.real(value))
    if method == "grid":
        envelope = overlap_exponent(spec).a
        return float(np.real(grid_integral_2d(lambda u: overlap_integrand(spec, u), envelope)))
    raise ValueError(f"unknown method {method!r}")


def avg_by_quadrature(p: TeleporterParams, c: ChannelParams, dist, resource: GaussianCF2 | None = None) -> float:
    """Oracle fidelity averaged over ``dist`` with the fixed quadrature rules."""
    spec = OutputCFSpec(p, c, resource)
    return average_numerically(lambda eps: fidelity_by_quadrature(spec, eps=eps), dist)


# random physical resources and scenarios


def _rotation(phi1, phi2):
    def rot(phi):
        return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])

    out = np.zeros((4, 4))
    out[:2, :2], out[2:, 2:] = rot(phi1), rot(phi2)
    return out


def _beam_splitter(angle):
    cs, sn = math.cos(angle), math.sin(angle)
    return np.block([[cs * np.eye(2), sn * np.eye(2)], [-sn * np.eye(2), cs * np.eye(2)]])


def random_gaussian_cf2(rng: np.random.Generator, max_squeeze: float = 1.0, max_thermal: float = 1.0) -> GaussianCF2:
    """A random physical two-mode Gaussian resource: thermal noise dressed by a random symplectic map."""
    r1, r2 = rng.uniform(-max_squeeze, max_squeeze, 2)
    squeeze = np.diag(np.exp([-r1, r1, -r2, r2]))
    symplectic = (
        _rotation(*rng.uniform(0, 2 * np.pi, 2))
        @ _beam_splitter(rng.uniform(0, np.pi))
        @ squeeze
        @ _rotation(*rng.uniform(0, 2 * np.pi, 2))
        @ _beam_splitter(rng.uniform(0, np.pi))
    )
    nu1, nu2 = 1.0 + rng.uniform(0, max_thermal, 2)
    sigma = symplectic @ np.diag([nu1, nu1, nu2, nu2]) @ symplectic.T
    return GaussianCF2((sigma + sigma.T) / 2.0)


def random_scenario(rng: np.random.Generator, max_amplitude: float = 4.0):
    """Random valid (TeleporterParams, ChannelParams, eps) with |eps| <= max_amplitude."""
    p = TeleporterParams(
        theta=rng.uniform(0.05, math.pi / 2 - 0.05),
        g_q=rng.uniform(0.0, 2.5),
        g_p=rng.uniform(0.0, 2.5),
        T=rng.uniform(0.5, 1.0),
    )
    c = ChannelParams(kappa_t=rng.uniform(0.0, 2.0), n_bar=rng.uniform(0.0, 2.0), r=rng.uniform(0.0, 2.5))
    eps = max_amplitude * math.sqrt(rng.uniform()) * complex(np.exp(2j * np.pi * rng.uniform()))
    return p, c, eps


def eps_independent_spread(theta: float, T: float, c: ChannelParams, resource: GaussianCF2, amplitudes) -> float:
    """Sample standard deviation of the oracle fidelity over ``amplitudes`` at the amplitude-independent gains."""
    g_q, g_p = amplitude_independent_gains(theta, T)
    spec = OutputCFSpec(TeleporterParams(theta, g_q, g_p, T), c, resource)
    values = fidelity_by_quadrature(spec, eps=np.asarray(amplitudes, dtype=complex))
    return float(np.std(values, ddof=1))


def _scenario_doc(p: TeleporterParams, c: ChannelParams) -> dict:
    return {
        "theta": p.theta, "g_q": p.g_q, "g_p": p.g_p, "T": p.T,
        "kappa_t": c.kappa_t, "n_bar": c.n_bar, "r": c.r,
    }


def _random_distribution(rng: np.random.Generator):
    kind = int(rng.integers(3))
    if kind == 0:
        return LineDist(rng.uniform(0.1, 4.0))
    if kind == 1:
        return CircleDist(rng.uniform(0.0, 4.0))
    return GaussDist(rng.uniform(0.1, 4.0))


def run_oracle(trials: int, seed: int, tol: float, ideal: bool = False) -> dict:
    """Compare closed forms against the oracle on ``trials`` seeded random scenarios.

    Each trial checks the point fidelity at a random amplitude and one
    distribution average. With ``ideal`` every scenario is the standard scheme
    without loss, noise or squeezing. Returns ``max_abs_dev``, the number of
    comparisons whose deviation exceeds ``tol`` and the worst case.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if not (tol >= 0.0 and math.isfinite(tol)):
        raise DomainError(f"tol must be finite and >= 0, got {tol}")
    rng = np.random.default_rng(seed % 2**64)
    max_dev, failures, worst = -1.0, 0, None
    for trial in range(trials):
        p, c, eps = random_scenario(rng)
        dist = _random_distribution(rng)
        if ideal:
            p, c = TeleporterParams(math.pi / 4), ChannelParams()
        checks = (
            ("point", {"eps": [eps.real, eps.imag]},
             point_fidelity(p, c, eps), fidelity_by_quadrature(OutputCFSpec(p, c, eps=eps))),
            (type(dist).__name__, {"dist": dist.__dict__.copy()},
             avg_fidelity(p, c, dist), avg_by_quadrature(p, c, dist)),
        )
        for kind, extra, closed, oracle in checks:
            dev = abs(closed - oracle)
            if not dev <= tol:
                failures += 1
            if dev > max_dev:
                max_dev = dev
                worst = {"trial": trial, "kind": kind, **extra, "closed_form": closed, "oracle": oracle,
                         "deviation": dev, "scenario": _scenario_doc(p, c)}
    return {"max_abs_dev": max_dev, "failures": failures, "worst_case": worst}
