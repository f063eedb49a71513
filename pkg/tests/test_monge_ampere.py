import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hermvol.calculus import i_ddbar, i_ddbar_form
from hermvol.errors import BackendMismatch, CapabilityError
from hermvol.fields import FourierField
from hermvol.manifolds import hermitian_matrices, integrate_top, is_positive_11, sample_points, torus
from hermvol.monge_ampere import (
    comparison_integrals,
    epsilon_expansion,
    ma_volume,
    mixed_term,
    perturbed,
    polarization_from_mixed,
    polarized_mixed_term,
    psh_epsilon0,
    psh_family,
    threefold_decomposition,
)
from hermvol.presets import conformal, flat, iwasawa_standard, kahler_perturbed, mode_pool, random_metric, random_real_field


def cosine(n, axis=1, amp=1.0):
    k = np.zeros(2 * n, dtype=int)
    k[axis - 1] = 1
    return FourierField(n, [k, -k], [amp / 2, amp / 2], real=True)


def pooled(g, rng, count):
    pool = mode_pool(g)
    return [random_real_field(g.model, rng, 2, 3, pool=pool if len(pool) else None) for _ in range(count)]


def test_flat_volumes_are_invariant():
    for n, vol in ((2, 8), (3, 48)):
        g = flat(torus(n))
        assert ma_volume(g) == vol
        for p in psh_family(g, 3, seed=1):
            assert ma_volume(g, p.u) == pytest.approx(vol, rel=1e-12)


def test_epsilon0_closed_form_for_single_cosine():
    # g0 + eps i ddbar cos(2 pi x1) has a11 = 1 - eps pi^2 cos(2 pi x1)
    g = flat(torus(2))
    e0 = psh_epsilon0(g, cosine(2))
    assert not e0.capped
    assert e0.value == pytest.approx(1 / np.pi**2, rel=1e-9)


def test_epsilon0_is_sharp_on_samples():
    g = conformal(torus(2))
    u = pooled(g, np.random.default_rng(4), 1)[0]
    e0 = psh_epsilon0(g, u).value
    pts = sample_points(g.model)
    A = hermitian_matrices(g.form, pts)
    B = hermitian_matrices(i_ddbar(u), pts)

    def min_eig(eps):
        return min(np.linalg.eigvalsh(A + eps * B).min(), np.linalg.eigvalsh(A - eps * B).min())

    assert min_eig(e0 * (1 - 1e-6)) >= 0
    assert min_eig(e0 * (1 + 1e-6)) < 0


def test_constant_functions_are_capped():
    g = flat(torus(2))
    e0 = psh_epsilon0(g, FourierField.constant(2, 3.0))
    assert e0.capped


def test_psh_family_is_certified():
    g = conformal(torus(2))
    fam = psh_family(g, 3, seed=2)
    assert len(fam) == 3
    for p in fam:
        assert is_positive_11(perturbed(g, p.u), g.model).semi_positive
    assert [p.u == q.u for p, q in zip(fam, psh_family(g, 3, seed=2))] == [True] * 3


def test_psh_family_needs_a_torus():
    with pytest.raises(CapabilityError):
        psh_family(iwasawa_standard(), 1)


def test_backend_mismatch_rejected():
    with pytest.raises(BackendMismatch):
        ma_volume(flat(torus(2)), cosine(3))


def test_flat_mixed_terms():
    g = flat(torus(2))
    u = cosine(2)
    assert mixed_term(g, u, 2) == 8
    assert mixed_term(g, u, 1) == 0
    assert mixed_term(g, u, 0) == 0


@settings(max_examples=10)
@given(st.integers(0, 10**6))
def test_surface_gap_is_twice_u_against_ddbar_g(seed):
    rng = np.random.default_rng(seed)
    g = random_metric(torus(2), rng)
    u = pooled(g, rng, 1)[0] * 0.01
    gap = ma_volume(g, u) - ma_volume(g)
    predicted = 2 * integrate_top(i_ddbar_form(g.form) * u, g.model).real
    assert gap == pytest.approx(predicted, rel=1e-9, abs=1e-14)


def test_expansion_fit_matches_direct_terms():
    g = conformal(torus(2))
    u = pooled(g, np.random.default_rng(1), 1)[0]
    p = epsilon_expansion(g, u)
    assert p.ok
    assert p.coefficient_error <= 1e-8
    assert abs(p.direct_coeffs[1]) > 1e-3
    with pytest.raises(ValueError):
        epsilon_expansion(g, u, num_eps=3)


def test_expansion_for_closed_metric_is_constant():
    g = kahler_perturbed(torus(2), seed=3)
    u = pooled(g, np.random.default_rng(3), 1)[0]
    p = epsilon_expansion(g, u)
    assert p.coefficient_error <= 1e-8
    w = p.epsilon0 ** np.arange(3)
    assert np.all(np.abs(p.direct_coeffs[1:] * w[1:]) <= 1e-10 * p.direct_coeffs[0])


def test_polarization_symmetry_and_recovery():
    rng = np.random.default_rng(7)
    g = random_metric(torus(3), rng)
    us = pooled(g, rng, 3)
    k = 1
    a = polarized_mixed_term(g, us[:2], k)
    b = polarized_mixed_term(g, us[1::-1], k)
    assert a == pytest.approx(b, rel=1e-10)
    assert polarization_from_mixed(g, us[:2], k) == pytest.approx(a, rel=1e-10)
    lin = polarized_mixed_term(g, [us[0] * 2.0 + us[2] * -3.0, us[1]], k)
    assert lin == pytest.approx(2 * a - 3 * polarized_mixed_term(g, [us[2], us[1]], k), rel=1e-10, abs=1e-12)
    with pytest.raises(ValueError):
        polarized_mixed_term(g, us, k)


def test_comparison_integrals_trivial_pair():
    g = flat(torus(2))
    u = cosine(2)
    r = comparison_integrals(g, u, u, grid=8)
    assert r.lhs == 0 and r.rhs == 0 and not r.violated


def test_comparison_integrals_against_explicit_sum():
    g = flat(torus(2))
    u = cosine(2, 1, 0.05)
    v = cosine(2, 2, 0.03)
    N = 8
    r = comparison_integrals(g, u, v, grid=N)
    ax = (np.arange(N) + 0.5) / N
    pts = np.stack(np.meshgrid(ax, ax, ax, ax, indexing="ij"), axis=-1).reshape(-1, 4)
    mask = (u - v).evaluate(pts).real < 0
    from hermvol.monge_ampere import ma_density

    fv = ma_density(g, v).evaluate(pts).real
    assert r.lhs == pytest.approx(fv[mask].sum() * 4 / N**4, rel=1e-12)
    assert 0 < r.boundary_fraction < 1


def test_comparison_needs_torus():
    g = iwasawa_standard()
    with pytest.raises(CapabilityError):
        comparison_integrals(g, None, None)


def test_threefold_decomposition_random_metrics():
    rng = np.random.default_rng(11)
    for _ in range(3):
        g = random_metric(torus(3), rng)
        u = pooled(g, rng, 1)[0] * 0.01
        d = threefold_decomposition(g, u)
        assert d.residual_T3 <= 1e-12
        assert d.residual_binomial <= 1e-10
        assert d.residual_stokes <= 1e-10
        assert d.ok


def test_threefold_decomposition_rejects_other_dimensions():
    with pytest.raises(ValueError):
        threefold_decomposition(flat(torus(2)), cosine(2))
