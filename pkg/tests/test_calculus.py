import numpy as np
import pytest
from hypothesis import given

from hermvol.calculus import (
    StructureConstants,
    del_,
    delbar,
    exterior_d,
    i_ddbar,
    i_ddbar_form,
    i_del_wedge_delbar,
    iwasawa,
)
from hermvol.exterior import Form, conjugate, wedge
from hermvol.fields import FourierField, PolyBackend, PolyField

from conftest import IWASAWA, coframe_forms, poly_forms, random_fourier_form


def homogeneous_parts(a):
    for d in sorted(a.degrees):
        yield d, Form(a.n, a.backend, {k: c for k, c in a.terms.items() if len(k[0]) + len(k[1]) == d})


def fourier_close(a, b, rtol=1e-13):
    scale = max(1.0, a.norm(), b.norm())
    return (a - b).norm() <= rtol * scale


def test_i_ddbar_of_modulus_squared():
    n = 2
    z1, z1b = PolyField.variable(n, 1), PolyField.variable(n, 1, bar=True)
    assert i_ddbar(z1 * z1b) == Form.basis(PolyBackend(n), (1,), (1,), 1j)


def test_i_ddbar_of_single_cosine_by_hand():
    # d/dz d/dzbar cos(2 pi x_1) = (1/4) Laplacian = -pi^2 cos(2 pi x_1)
    u = FourierField(1, [[1, 0], [-1, 0]], [0.5, 0.5], real=True)
    H = i_ddbar(u)
    c = H.coefficient((1,), (1,))
    assert np.allclose(c.amps, 1j * -np.pi**2 * 0.5, rtol=1e-15)
    assert H.bidegrees == {(1, 1)}


def test_i_ddbar_requires_real_input():
    with pytest.raises(ValueError):
        i_ddbar(FourierField(1, [[1, 0]], [1.0]))
    i_ddbar(FourierField(1, [[1, 0]], [1.0]), require_real=False)


@given(poly_forms(3))
def test_poly_differentials_square_to_zero(a):
    assert del_(del_(a)).is_zero()
    assert delbar(delbar(a)).is_zero()
    assert (del_(delbar(a)) + delbar(del_(a))).is_zero()


@given(poly_forms(2), poly_forms(2))
def test_poly_leibniz(a, b):
    for da, ah in homogeneous_parts(a):
        s = -1 if da % 2 else 1
        for op in (del_, delbar):
            assert op(wedge(ah, b)) == wedge(op(ah), b) + wedge(ah, op(b)) * s


@given(poly_forms(3))
def test_poly_conjugation_swaps_operators(a):
    assert conjugate(del_(a)) == delbar(conjugate(a))
    assert conjugate(delbar(a)) == del_(conjugate(a))


@given(coframe_forms())
def test_coframe_d_squares_to_zero(a):
    assert exterior_d(exterior_d(a)).is_zero()
    assert del_(del_(a)).is_zero()
    assert delbar(delbar(a)).is_zero()
    assert (del_(delbar(a)) + delbar(del_(a))).is_zero()


@given(coframe_forms(max_terms=2), coframe_forms(max_terms=2))
def test_coframe_leibniz_and_conjugation(a, b):
    for da, ah in homogeneous_parts(a):
        s = -1 if da % 2 else 1
        assert exterior_d(wedge(ah, b)) == wedge(exterior_d(ah), b) + wedge(ah, exterior_d(b)) * s
    assert conjugate(exterior_d(a)) == exterior_d(conjugate(a))
    assert conjugate(del_(a)) == delbar(conjugate(a))


def test_iwasawa_structure_by_hand():
    b = IWASAWA.backend
    phi3 = Form.basis(b, (3,), ())
    assert exterior_d(phi3) == Form.basis(b, (1, 2), (), -1)
    assert exterior_d(Form.basis(b, (1,), ())).is_zero()
    assert IWASAWA.integrable
    # d(phi3 ^ phibar3) = -phi12 ^ phibar3 + phi3 ^ (-phibar12)
    f = Form.basis(b, (3,), (3,))
    expect = Form.basis(b, (1, 2), (3,), -1) + Form.basis(b, (3,), (1, 2), 1)
    assert exterior_d(f) == expect


def test_structure_constants_reject_d_squared_nonzero():
    # d phi1 = phi2 ^ phibar2, d phi2 = phi1 ^ phi2 gives d d phi1 = phi12 phibar2 - phi2 phibar12
    with pytest.raises(ValueError, match="d\\^2"):
        StructureConstants(3, {1: {((2,), (2,)): 1}, 2: {((1, 2), ()): 1}})


def test_structure_constants_json_round_trip():
    sc = StructureConstants.from_json(iwasawa().to_json())
    assert sc.name == "iwasawa"
    b = sc.backend
    assert exterior_d(Form.basis(b, (3,), ())) == Form.basis(b, (1, 2), (), -1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_fourier_identities(n):
    rng = np.random.default_rng(n)
    for _ in range(15):
        a = random_fourier_form(n, rng)
        assert del_(del_(a)).norm() <= 1e-13 * max(1, a.norm())
        assert delbar(delbar(a)).norm() <= 1e-13 * max(1, a.norm())
        assert fourier_close(del_(delbar(a)), -delbar(del_(a)))
        assert fourier_close(conjugate(del_(a)), delbar(conjugate(a)))
        b = random_fourier_form(n, rng, terms=2)
        for da, ah in homogeneous_parts(a):
            s = -1 if da % 2 else 1
            assert fourier_close(del_(wedge(ah, b)), wedge(del_(ah), b) + wedge(ah, del_(b)) * s)


def test_exterior_d_on_coordinates_is_del_plus_delbar():
    rng = np.random.default_rng(5)
    a = random_fourier_form(2, rng, degree=1)
    assert exterior_d(a) == del_(a) + delbar(a)


def test_i_ddbar_form_agrees_with_i_ddbar_on_functions():
    rng = np.random.default_rng(2)
    u = random_fourier_form(2, rng, degree=0).terms[((), ())].real_part()
    assert i_ddbar(u) == i_ddbar_form(Form.scalar(u))


def test_i_del_wedge_delbar_is_real_for_real_forms():
    from hermvol.exterior import is_real
    from hermvol.presets import conformal
    from hermvol.manifolds import torus

    g = conformal(torus(3))
    assert is_real(i_del_wedge_delbar(g.form))
    assert is_real(i_ddbar_form(g.form))
