import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from cvtele.averaging import CircleDist, GaussDist, LineDist, avg_fidelity, circle_opt_fidelity
from cvtele.core import ChannelParams, GaussianCF2, TeleporterParams, amplitude_independent_gains, tmsv_cf
from cvtele.fidelity import point_fidelity
from cvtele.oracle import (
    Divergent,
    OutputCFSpec,
    QuadraticExponent,
    avg_by_quadrature,
    eps_independent_spread,
    fidelity_by_quadrature,
    gaussian_integral_2d,
    grid_integral_2d,
    overlap_exponent,
    random_gaussian_cf2,
    random_scenario,
    run_oracle,
)

QUARTER = math.pi / 4


def random_pd(rng, complex_l=False):
    m = rng.normal(size=(2, 2))
    a = m @ m.T + rng.uniform(0.2, 2.0) * np.eye(2)
    l = rng.normal(size=2)
    if complex_l:
        l = l + 1j * rng.normal(size=2)
    return QuadraticExponent(a, l, rng.normal(scale=0.3))


def test_vacuum_purity():
    # |chi_vac(lambda)|^2 = exp(-|lambda|^2): the integral of a pure state's squared CF is 1
    assert gaussian_integral_2d(QuadraticExponent(2 * np.eye(2))) == pytest.approx(1.0, rel=1e-15)


def test_complex_form_example():
    # exp(zeta |lambda|^2) with zeta = -2 integrates to 1/sqrt(zeta^2) = 1/2
    assert gaussian_integral_2d(QuadraticExponent(4 * np.eye(2))) == pytest.approx(0.5, rel=1e-15)


def test_divergent():
    with pytest.raises(Divergent):
        gaussian_integral_2d(QuadraticExponent(np.diag([1.0, -0.1])))
    with pytest.raises(Divergent):
        gaussian_integral_2d(QuadraticExponent(np.diag([1.0, 1e-12])))


def test_real_linear_term_returns_float():
    assert isinstance(gaussian_integral_2d(QuadraticExponent(np.eye(2), np.array([0.3, 0.1]))), float)


@pytest.mark.parametrize("complex_l", [False, True])
def test_gaussian_integral_against_grid(rng, complex_l):
    for _ in range(100):
        q = random_pd(rng, complex_l)
        exact = gaussian_integral_2d(q)
        grid = grid_integral_2d(q, q.a, center=np.linalg.solve(q.a, q.l.real))
        assert abs(grid - exact) <= 1e-10 * max(1.0, abs(exact))


def test_gaussian_integral_against_adaptive(rng):
    for _ in range(5):
        q = random_pd(rng)
        s = 10 / math.sqrt(np.linalg.eigvalsh(q.a)[0])
        shift = np.linalg.solve(q.a, q.l)
        val, _ = dblquad(lambda y, x: float(q(np.array([x, y]))), shift[0] - s, shift[0] + s,
                         shift[1] - s, shift[1] + s, epsabs=1e-13, epsrel=1e-12)
        assert gaussian_integral_2d(q) == pytest.approx(val / math.pi, rel=1e-10)


def test_batched_linear_terms(rng):
    q = random_pd(rng, complex_l=True)
    ls = rng.normal(size=(3, 4, 2)) + 1j * rng.normal(size=(3, 4, 2))
    batched = gaussian_integral_2d(QuadraticExponent(q.a, ls, q.s))
    for idx in np.ndindex(3, 4):
        assert batched[idx] == pytest.approx(gaussian_integral_2d(QuadraticExponent(q.a, ls[idx], q.s)), rel=1e-14)


def test_tmsv_oracle_matches_closed_form(rng):
    for _ in range(200):
        p, c, eps = random_scenario(rng)
        assert fidelity_by_quadrature(OutputCFSpec(p, c, eps=eps)) == pytest.approx(point_fidelity(p, c, eps), abs=1e-8)


def test_both_overlap_forms_agree(rng):
    for _ in range(50):
        p, c, eps = random_scenario(rng)
        spec = OutputCFSpec(p, c, random_gaussian_cf2(rng), eps)
        a = gaussian_integral_2d(overlap_exponent(spec, form="input-output"))
        b = gaussian_integral_2d(overlap_exponent(spec, form="overlap"))
        assert a == pytest.approx(b, rel=1e-12)


def test_grid_method_matches_gaussian(rng):
    for _ in range(10):
        p, c, eps = random_scenario(rng, max_amplitude=1.5)
        spec = OutputCFSpec(p, c, eps=eps)
        assert fidelity_by_quadrature(spec, "grid") == pytest.approx(fidelity_by_quadrature(spec), abs=1e-10)


def test_standard_scheme_without_entanglement():
    spec = OutputCFSpec(TeleporterParams(QUARTER), ChannelParams(), eps=1.3 - 0.4j)
    assert fidelity_by_quadrature(spec) == pytest.approx(0.5, rel=1e-14)


def test_ideal_limit_normalization():
    for eps in (0j, 0.5 + 0.5j, -2.0):
        f = fidelity_by_quadrature(OutputCFSpec(TeleporterParams(QUARTER), ChannelParams(r=8.0), eps=eps))
        assert 1 - 1e-6 < f <= 1 + 1e-12


def test_unknown_method():
    with pytest.raises(ValueError):
        fidelity_by_quadrature(OutputCFSpec(TeleporterParams(QUARTER), ChannelParams()), "monte-carlo")


def test_random_resources_are_physical_and_seeded():
    a = random_gaussian_cf2(np.random.default_rng(5))
    b = random_gaussian_cf2(np.random.default_rng(5))
    assert np.array_equal(a.sigma, b.sigma)
    GaussianCF2(a.sigma)  # passes the uncertainty-relation check


def test_eps_independence_for_generic_resources(rng):
    for _ in range(10):
        resource = random_gaussian_cf2(rng, max_squeeze=1.5, max_thermal=1.0)
        theta, T = rng.uniform(0.1, 1.4), rng.uniform(0.5, 1.0)
        c = ChannelParams(rng.uniform(0, 2), rng.uniform(0, 2), 0.0)
        amplitudes = rng.normal(scale=2, size=100) + 1j * rng.normal(scale=2, size=100)
        assert eps_independent_spread(theta, T, c, resource, amplitudes) < 1e-12


def test_eps_independence_twenty_amplitudes(rng):
    resource = random_gaussian_cf2(rng)
    g_q, g_p = amplitude_independent_gains(0.5, 0.9)
    spec = OutputCFSpec(TeleporterParams(0.5, g_q, g_p, 0.9), ChannelParams(0.2, 0.5, 0.0), resource)
    values = [fidelity_by_quadrature(spec, eps=e) for e in rng.normal(size=20) + 1j * rng.normal(size=20)]
    assert np.std(values) < 1e-10


def test_mismatched_gains_depend_on_amplitude(rng):
    spec = OutputCFSpec(TeleporterParams(0.5, 1.0, 1.0, 0.9), ChannelParams(0.2, 0.5, 0.7))
    assert np.std(fidelity_by_quadrature(spec, eps=np.array([0, 1, 2j]))) > 1e-3


def test_avg_by_quadrature_examples(rng):
    p, c = TeleporterParams(0.7, 1.1, 0.9, 0.9), ChannelParams(0.2, 0.3, 0.8)
    assert avg_by_quadrature(p, c, LineDist(1e-8)) == pytest.approx(point_fidelity(p, c, 0j), rel=1e-6)
    g = 0.85
    balanced = TeleporterParams(QUARTER, g, g, 0.9)
    assert avg_by_quadrature(balanced, c, CircleDist(1.2)) == pytest.approx(
        circle_opt_fidelity(g, 0.9, c, CircleDist(1.2)), abs=1e-9)
    assert avg_by_quadrature(p, c, GaussDist(1.0)) == pytest.approx(avg_fidelity(p, c, GaussDist(1.0)), abs=1e-9)


def test_avg_by_quadrature_generic_resource_reduces_to_tmsv():
    p, c = TeleporterParams(0.7, 1.1, 0.9, 0.9), ChannelParams(0.2, 0.3, 0.8)
    assert avg_by_quadrature(p, c, CircleDist(1.0), tmsv_cf(0.8)) == pytest.approx(
        avg_fidelity(p, c, CircleDist(1.0)), abs=1e-12)


def test_run_oracle_report():
    report = run_oracle(50, 7, 1e-8)
    assert report["failures"] == 0 and report["max_abs_dev"] < 1e-8
    assert report == run_oracle(50, 7, 1e-8)
    assert set(report["worst_case"]) >= {"trial", "kind", "closed_form", "oracle", "deviation", "scenario"}


def test_run_oracle_ideal_and_zero_tolerance():
    ideal = run_oracle(1, 123, 1e-8, ideal=True)
    assert ideal["max_abs_dev"] < 1e-13
    assert ideal["worst_case"]["scenario"]["r"] == 0.0
    assert run_oracle(5, 1, 0.0)["failures"] > 0


def test_run_oracle_accepts_64_bit_seeds():
    assert run_oracle(1, 2**64 - 1, 1e-8)["failures"] == 0
    assert run_oracle(1, -5, 1e-8)["failures"] == 0
