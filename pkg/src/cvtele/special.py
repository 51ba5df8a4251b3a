"""Error function and log-domain modified Bessel function I0."""

import math

SERIES_LIMIT = 30.0


def erf(a: float) -> float:
    return math.erf(a)


def sqrt_pi_erf_over_2z(z: float) -> float:
    """sqrt(pi) erf(z) / (2 z), continued to 1 at z = 0."""
    z = abs(z)
    if z < 1e-6:
        z2 = z * z
        return 1.0 - z2 / 3.0 + z2 * z2 / 10.0
    return math.sqrt(math.pi) * math.erf(z) / (2.0 * z)


def _log_i0_series(x: float) -> float:
    q = 0.25 * x * x
    if q == 0.0:
        return 0.0
    term = tail = q
    k = 1
    while term >= 1e-17 * (1.0 + tail):
        k += 1
        term *= q / (k * k)
        tail += term
    return math.log1p(tail)


def _log_i0_asymptotic(x: float) -> float:
    term = total = 1.0
    k = 0
    while True:
        k += 1
        ratio = (2 * k - 1) ** 2 / (8.0 * k * x)
        if ratio >= 1.0:
            break
        term *= ratio
        total += term
        if term < 1e-17 * total:
            break
    return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(total)


def log_bessel_i0(x: float) -> float:
    """ln I0(x) for x >= 0, finite for arguments where I0 itself overflows."""
    x = float(x)
    if not (x >= 0.0 and math.isfinite(x)):
        raise ValueError(f"log_bessel_i0 needs a finite x >= 0, got {x!r}")
    if x <= SERIES_LIMIT:
        return _log_i0_series(x)
    return _log_i0_asymptotic(x)
