import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hermvol.errors import BackendMismatch, BandwidthOverflow, CapabilityError
from hermvol.fields import (
    CoframeBackend,
    FourierBackend,
    FourierField,
    PolyBackend,
    PolyField,
    field_from_json,
    field_mul,
)

from conftest import poly_fields, random_fourier


def test_fourier_evaluation_matches_explicit_cosine():
    # cos(2 pi x_1) on T^1
    f = FourierField(1, [[1, 0], [-1, 0]], [0.5, 0.5])
    x = np.array([[0.0, 0.3], [0.25, 0.1], [0.125, 0.9]])
    assert np.allclose(f.evaluate(x), np.cos(2 * np.pi * x[:, 0]), atol=1e-15)


def test_wirtinger_derivatives_of_single_modes():
    # d/dz of exp(2 pi i x) with z = x + i y is pi i; d/dzbar equals the same (x-only mode)
    ex = FourierField(1, [[1, 0]], [1.0])
    assert ex.deriv(1).amps[0] == pytest.approx(np.pi * 1j)
    assert ex.deriv(1, bar=True).amps[0] == pytest.approx(np.pi * 1j)
    # exp(2 pi i y): d/dz -> pi, d/dzbar -> -pi
    ey = FourierField(1, [[0, 1]], [1.0])
    assert ey.deriv(1).amps[0] == pytest.approx(np.pi)
    assert ey.deriv(1, bar=True).amps[0] == pytest.approx(-np.pi)


def test_wirtinger_against_finite_differences(rng):
    f = random_fourier(2, rng, band=2, modes=4)
    x = rng.random((5, 4))
    h = 1e-6
    for j in (1, 2):
        ex, ey = np.zeros(4), np.zeros(4)
        ex[j - 1], ey[j + 1] = h, h
        fx = (f.evaluate(x + ex) - f.evaluate(x - ex)) / (2 * h)
        fy = (f.evaluate(x + ey) - f.evaluate(x - ey)) / (2 * h)
        assert np.allclose(f.deriv(j).evaluate(x), 0.5 * (fx - 1j * fy), atol=1e-6)
        assert np.allclose(f.deriv(j, bar=True).evaluate(x), 0.5 * (fx + 1j * fy), atol=1e-6)


def test_product_is_pointwise(rng):
    f, g = random_fourier(2, rng), random_fourier(2, rng)
    x = rng.random((20, 4))
    assert np.allclose((f * g).evaluate(x), f.evaluate(x) * g.evaluate(x), atol=1e-13)


def test_bandwidth_is_bookkept_and_capped():
    f = FourierField(1, [[2, 0]], [1.0], cap=3)
    assert f.bandwidth == 2
    with pytest.raises(BandwidthOverflow):
        f * f
    with pytest.raises(BandwidthOverflow):
        FourierField(1, [[5, 0]], [1.0], cap=3)
    with pytest.raises(ValueError):
        FourierField(1, [[2, 0]], [1.0], bandwidth=1)


def test_mean_is_zero_mode():
    f = FourierField(1, [[0, 0], [1, 1]], [2.5, 7.0])
    assert f.mean() == 2.5
    assert FourierField(1, [[1, 0]], [1.0]).mean() == 0


def test_grid_values_match_pointwise_evaluation(rng):
    f = random_fourier(1, rng, band=3)
    N = 8
    vals = f.grid_values(N)
    axis = (np.arange(N) + 0.5) / N
    pts = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    assert np.allclose(vals.reshape(-1), f.evaluate(pts), atol=1e-12)


def test_reality_flag_is_checked():
    FourierField(1, [[1, 0], [-1, 0]], [1 + 1j, 1 - 1j], real=True)
    with pytest.raises(ValueError):
        FourierField(1, [[1, 0], [-1, 0]], [1 + 1j, 1 + 1j], real=True)


def test_real_part_values(rng):
    f = random_fourier(2, rng)
    x = rng.random((10, 4))
    r = f.real_part()
    assert r.real
    assert np.allclose(r.evaluate(x), f.evaluate(x).real, atol=1e-14)


def test_embed_and_translate(rng):
    f = random_fourier(1, rng)
    e = f.embed(3, 1)
    x = rng.random((6, 6))
    # axis 1 of f becomes axis 2 of the product (x_2 at column 1, y_2 at column 4)
    assert np.allclose(e.evaluate(x), f.evaluate(x[:, [1, 4]]), atol=1e-14)
    s = np.array([0.1, 0.7])
    assert np.allclose(f.translate(s).evaluate(x[:, :2]), f.evaluate(x[:, :2] + s), atol=1e-13)


def test_json_round_trip_is_exact(rng):
    f = random_fourier(2, rng) * (1 / 3)
    g = field_from_json(f.to_json())
    assert g == f and g.bandwidth == f.bandwidth
    p = PolyField(2, {(1, 0, 0, 2): 1 / 7 + 2j})
    assert field_from_json(p.to_json()) == p
    c = CoframeBackend(2).const(0.1 + 0.2j)
    assert field_from_json(c.to_json(), CoframeBackend(2)) == c


def test_backends_do_not_mix():
    with pytest.raises(BackendMismatch):
        field_mul(FourierBackend(1).const(1), PolyBackend(1).const(1))
    with pytest.raises(BackendMismatch):
        FourierField(1, [[1, 0]], [1.0]) + FourierField(2, [[1, 0, 0, 0]], [1.0])


def test_poly_fields_are_not_integrable():
    with pytest.raises(CapabilityError, match="not integrable"):
        PolyField.variable(2, 1).mean()


def test_poly_wirtinger_rules():
    z, zb = PolyField.variable(1, 1), PolyField.variable(1, 1, bar=True)
    assert (z * zb).deriv(1) == zb
    assert (z * zb).deriv(1, bar=True) == z
    assert z.deriv(1, bar=True).is_zero()


@given(poly_fields(2), poly_fields(2), poly_fields(2))
def test_poly_ring_axioms(a, b, c):
    assert a * (b + c) == a * b + a * c
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a


@given(poly_fields(2), poly_fields(2), st.integers(1, 2), st.booleans())
def test_poly_leibniz_and_conjugation(a, b, j, bar):
    assert (a * b).deriv(j, bar) == a.deriv(j, bar) * b + a * b.deriv(j, bar)
    assert a.deriv(j, bar).conj() == a.conj().deriv(j, not bar)


@given(st.integers(0, 2**32 - 1), st.integers(1, 2))
def test_fourier_leibniz(seed, j):
    rng = np.random.default_rng(seed)
    f, g = random_fourier(2, rng), random_fourier(2, rng)
    lhs = (f * g).deriv(j, True)
    rhs = f.deriv(j, True) * g + f * g.deriv(j, True)
    assert (lhs - rhs).norm() <= 1e-13 * max(1.0, lhs.norm())
