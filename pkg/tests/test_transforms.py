"""CDF transforms: built-in densities, inverses, extension margin, sampling."""

import io
import math

import numpy as np
import pytest
from scipy import integrate, stats

from wavereg.transforms import (
    DomainKind,
    ProductTransform,
    Transform1D,
    beta_symmetric,
    beta_torus,
    cauchy,
    default_eta,
    default_eta_exact,
    density_by_name,
    exponential,
    gaussian_mixture,
    laplace,
    standard_normal,
    tabulated_density,
    uniform_torus,
    uniform_unit,
)

ALL_BUILTINS = [
    standard_normal,
    cauchy,
    laplace,
    exponential,
    gaussian_mixture,
    lambda: beta_symmetric(0.5),
    lambda: beta_symmetric(2.0),
    lambda: beta_symmetric(3.0),
    lambda: beta_symmetric(1.3),
    uniform_unit,
    uniform_torus,
    lambda: beta_torus(1.15),
]


def test_transform_point_examples():
    assert standard_normal().transform(0.0) == 0.0
    assert cauchy().transform(1.0) == pytest.approx(0.25, abs=1e-15)
    assert laplace().transform(2.0) == 0.0
    assert beta_symmetric(0.5).transform(1.0) == pytest.approx(0.5, abs=1e-15)


def test_inverse_point_examples():
    assert uniform_unit().inverse(0.3) == pytest.approx(0.8, abs=1e-15)
    assert standard_normal().inverse(0.0) == pytest.approx(0.0, abs=1e-15)
    assert cauchy().inverse(0.25) == pytest.approx(1.0, rel=1e-12)


def test_default_eta():
    assert default_eta(2, 5, 1) == 1 / 64
    assert default_eta(3, 6, 2) == 0.125
    assert default_eta(1, 9, 3) == 0.0
    assert float(default_eta_exact(2, 2, 1)) == 0.125
    with pytest.raises(ValueError):
        default_eta(0, 1, 1)


def test_domain_errors():
    with pytest.raises(ValueError):
        uniform_unit().transform(1.5)
    with pytest.raises(ValueError):
        uniform_torus().transform(0.75)
    with pytest.raises(ValueError):
        standard_normal().transform(np.nan)
    with pytest.raises(ValueError):
        standard_normal().inverse(0.75)


def test_clamping_at_open_ends():
    t = standard_normal()
    # float fuzz just past +-1/2 is pulled back inside, not rejected
    y = t.inverse(0.5 + 5e-16)
    assert np.isfinite(y)
    assert t.inverse(-0.5) < -8.0


def test_unit_interval_range_with_eta():
    t = uniform_unit(eta=0.125)
    assert t.transform(0.0) == pytest.approx(-0.375)
    assert t.transform(1.0) == pytest.approx(0.5)
    assert t.range == (-0.375, 0.5)
    assert t.inverse(-0.375) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        t.inverse(-0.45)


@pytest.mark.parametrize("maker", ALL_BUILTINS)
def test_monotone_on_probe_grid(maker):
    t = maker()
    rng = np.random.default_rng(0)
    ys = np.sort(t.sample(10**4, rng))
    vals = t.transform(ys)
    assert np.all(np.diff(vals) >= 0.0)
    interior = (vals > -0.499) & (vals < 0.4999)
    assert np.all(np.diff(vals[interior]) >= 0.0)


@pytest.mark.parametrize("maker", ALL_BUILTINS)
def test_derivative_identity(maker):
    # d/dy transform = (1-eta) * rho via central differences
    t = maker()
    rng = np.random.default_rng(1)
    ys = t.sample(2000, rng)
    lo, hi = np.quantile(ys, [0.05, 0.95])
    probes = np.linspace(lo, hi, 100)
    h = 1e-5
    if t.domain is DomainKind.UNIT_INTERVAL:
        probes = np.clip(probes, 2 * h, 1 - 2 * h)
    if t.domain is DomainKind.TORUS:
        probes = np.clip(probes, -0.5 + 2 * h, 0.5 - 2 * h)
    num = (t.transform(probes + h) - t.transform(probes - h)) / (2 * h)
    ref = t.derivative(probes)
    mask = ref > 1e-8
    rel = np.abs(num[mask] - ref[mask]) / ref[mask]
    assert np.max(rel) < 1e-4


@pytest.mark.parametrize("maker", ALL_BUILTINS)
def test_roundtrip(maker):
    t = maker()
    rng = np.random.default_rng(2)
    ys = t.sample(500, rng)
    xs = t.transform(ys)
    back = t.transform(t.inverse(xs))
    assert np.max(np.abs(back - xs)) < 1e-10


def test_norm_equality_under_transform():
    # ||f||_{L2(R, rho_N)} equals ||f o inverse||_{L2(-1/2,1/2)} by quadrature
    t = standard_normal()
    f = lambda y: np.exp(-(y**2))
    lhs = integrate.quad(lambda y: f(y) ** 2 * t.pdf(y), -np.inf, np.inf)[0]
    rhs = integrate.quad(
        lambda x: f(t.inverse(x)) ** 2, -0.5, 0.5, limit=200
    )[0]
    assert abs(lhs - rhs) < 1e-6


def test_sampling_uniform_stays_inside():
    t = uniform_unit()
    ys = t.sample(1000, np.random.default_rng(3))
    assert np.all((ys >= 0.0) & (ys <= 1.0))


def test_sampling_matches_density_ks():
    ys = standard_normal().sample(10**5, np.random.default_rng(4))
    ks = stats.kstest(ys, stats.norm.cdf).statistic
    assert ks < 0.01


def test_mixture_density_normalized():
    t = gaussian_mixture()
    mass = integrate.quad(t.pdf, -np.inf, np.inf, limit=200)[0]
    assert abs(mass - 1.0) < 1e-10
    assert t.transform(np.array([-50.0]))[0] == pytest.approx(-0.5, abs=1e-12)


def test_product_transform_shapes():
    pt = ProductTransform([standard_normal(), beta_symmetric(2.0), cauchy()])
    Y = pt.sample(10, np.random.default_rng(5))
    assert Y.shape == (10, 3)
    X = pt.transform(Y)
    assert X.shape == (10, 3)
    assert np.max(np.abs(pt.inverse(X) - Y)) < 1e-8


def test_density_by_name():
    t = density_by_name("beta", alpha=0.5)
    assert t.params["alpha"] == 0.5
    with pytest.raises(ValueError):
        density_by_name("nope")


def test_tabulated_density_from_csv():
    ys = np.linspace(0.0, 1.0, 201)
    rho = 0.5 + ys  # unnormalized ramp; CDF should be (y + y^2)/1.5... scaled
    buf = io.StringIO(
        "y,rho\n" + "\n".join(f"{y},{r}" for y, r in zip(ys, rho))
    )
    t = tabulated_density(buf, DomainKind.UNIT_INTERVAL)
    assert t.transform(0.0) == pytest.approx(-0.5, abs=1e-12)
    assert t.transform(1.0) == pytest.approx(0.5, abs=1e-12)
    # mass of the normalized ramp below 0.5: (0.5*0.5 + 0.5*0.25) / 1.0
    ref = (0.5 * 0.5 + 0.5 * 0.25) / (0.5 + 0.5)
    assert t.transform(0.5) == pytest.approx(ref - 0.5, abs=1e-6)
    xs = np.linspace(-0.49, 0.49, 21)
    assert np.max(np.abs(t.transform(t.inverse(xs)) - xs)) < 1e-10


def test_eta_rejected_off_unit_interval():
    with pytest.raises(ValueError):
        Transform1D(
            DomainKind.REAL_LINE,
            pdf=lambda y: y,
            cdf_core=lambda y: y,
            eta=0.1,
        )
