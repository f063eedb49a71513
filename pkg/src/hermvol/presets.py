"""Metric presets and seeded random generators."""
from __future__ import annotations

import numpy as np

from .calculus import i_ddbar
from .exterior import Form
from .fields import FourierField
from .manifolds import HermitianMetric, ManifoldModel, SamplingSpec, model_from_name, nilmanifold
from .calculus import iwasawa


def _cos_field(model: ManifoldModel, freq, amplitude: float) -> FourierField:
    """``amplitude * cos(2 pi freq . x)`` for an integer frequency vector."""
    k = np.asarray(freq, dtype=np.int64)
    return FourierField(model.n, [k, -k], [amplitude / 2, amplitude / 2], cap=model.cap, real=True)


def flat_form(model: ManifoldModel) -> Form:
    b = model.backend
    out = Form.zero(b)
    for j in range(1, model.n + 1):
        out = out + Form.basis(b, (j,), (j,), 1j)
    return out


def flat(model: ManifoldModel) -> HermitianMetric:
    """``g_0 = i sum dz_j ^ dzbar_j``."""
    return HermitianMetric(flat_form(model), model, name="flat")


def conformal(model: ManifoldModel, a: float = 0.5, axis: int = 1) -> HermitianMetric:
    """``(1 + a cos 2 pi x_axis) g_0``; not Gauduchon for ``a != 0``."""
    if not abs(a) < 1:
        raise ValueError("conformal factor needs |a| < 1")
    k = np.zeros(2 * model.n, dtype=np.int64)
    k[axis - 1] = 1
    factor = _cos_field(model, k, a) + 1
    return HermitianMetric(flat_form(model) * factor, model, name=f"conformal(a={a})")


def gauduchon_surface(model: ManifoldModel, eps: float = 0.5) -> HermitianMetric:
    """Non-Kahler metric on a 2-torus with ``i ddbar g = 0``.

    ``g = i (1 + eps c) dz_1 ^ dzbar_1 + i (1 - eps c) dz_2 ^ dzbar_2`` with
    ``c = cos 2 pi (x_1 + x_2)``; the two ``ddbar`` contributions cancel.
    """
    if model.n != 2:
        raise ValueError("gauduchon_surface lives on a complex surface")
    k = np.array([1, 1, 0, 0])
    c = _cos_field(model, k, eps)
    b = model.backend
    form = Form.basis(b, (1,), (1,), 1j) * (c + 1) + Form.basis(b, (2,), (2,), 1j) * (1 - c)
    return HermitianMetric(form, model, name=f"gauduchon(eps={eps})")


def random_real_field(model: ManifoldModel, rng: np.random.Generator, band: int = 2, modes: int = 3,
                      amplitude: float = 1.0, pool: np.ndarray | None = None) -> FourierField:
    """Real field with ``modes`` random frequency pairs ``+-k``, sup-norm bound ``amplitude``.

    Frequencies are uniform in ``[-band, band]^{2n}``, or drawn from the rows of
    ``pool`` when given (see :func:`mode_pool`).
    """
    d = 2 * model.n
    if pool is not None and len(pool):
        ks = pool[rng.integers(0, len(pool), size=modes)]
        band = max(band, int(np.abs(ks).max()))
    else:
        ks = rng.integers(-band, band + 1, size=(modes, d))
        ks[np.all(ks == 0, axis=1), 0] = 1
    amps = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    f = FourierField(model.n, ks, amps, cap=model.cap, bandwidth=band).real_part()
    return f * (amplitude / f.norm())


def mode_pool(g: HermitianMetric, sums: bool = True) -> np.ndarray:
    """Nonzero frequencies of the metric coefficients, optionally with pairwise sums.

    Test functions drawn from this pool interact with ``g`` in every mixed term;
    functions with unrelated frequencies integrate to exactly zero against it.
    """
    base = {tuple(k) for c in g.form.terms.values() for k in c.modes.tolist()}
    base = {k for k in base if any(k)}
    out = set(base)
    if sums:
        out |= {tuple(a + b for a, b in zip(p, q)) for p in base for q in base}
    out = sorted(k for k in out if any(k))
    return np.array(out, dtype=np.int64).reshape(-1, 2 * g.n)


def random_complex_field(model: ManifoldModel, rng: np.random.Generator, band: int = 2,
                         modes: int = 3, amplitude: float = 1.0) -> FourierField:
    d = 2 * model.n
    ks = rng.integers(-band, band + 1, size=(modes, d))
    amps = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    f = FourierField(model.n, ks, amps, cap=model.cap, bandwidth=band)
    return f * (amplitude / f.norm())


def random_metric(model: ManifoldModel, rng: np.random.Generator, band: int = 2, modes: int = 2,
                  strength: float = 0.6) -> HermitianMetric:
    """``i sum (delta_jk + h_jk) dz_j ^ dzbar_k`` with a random Hermitian field matrix ``h``.

    Each entry has sup-norm bound ``strength / n``, so by Gershgorin the matrix
    stays positive definite for ``strength < 1``.
    """
    n, b = model.n, model.backend
    amp = strength / n
    form = flat_form(model)
    for j in range(1, n + 1):
        h = random_real_field(model, rng, band, modes, amp)
        form = form + Form.basis(b, (j,), (j,), 1j) * h
        for k in range(j + 1, n + 1):
            h = random_complex_field(model, rng, band, modes, amp)
            form = form + Form.basis(b, (j,), (k,), 1j) * h + Form.basis(b, (k,), (j,), 1j) * h.conj()
    return HermitianMetric(form, model, name="random")


def kahler_perturbed(model: ManifoldModel, seed: int = 0, band: int = 2, scale: float = 0.5) -> HermitianMetric:
    """``g_0 + i ddbar rho`` with a seeded band-limited ``rho`` scaled to ``scale * eps0``."""
    from .monge_ampere import psh_epsilon0

    rng = np.random.default_rng(seed)
    g0 = flat(model)
    rho = random_real_field(model, rng, band=band, modes=3)
    rho = rho * (scale * psh_epsilon0(g0, rho).value)
    return HermitianMetric(g0.form + i_ddbar(rho), model, name="kahler-perturbed")


def iwasawa_standard() -> HermitianMetric:
    """``i sum phi_j ^ phibar_j`` on the Iwasawa manifold."""
    m = nilmanifold(iwasawa())
    return HermitianMetric(flat_form(m), m, name="iwasawa-standard")


def metric_from_terms(model: ManifoldModel, terms: list, samples: SamplingSpec = SamplingSpec()) -> HermitianMetric:
    """Build a metric from ``[(I, J, coefficient), ...]`` with coefficients in the model backend."""
    b = model.backend
    out = Form.zero(b)
    for I, J, c in terms:
        out = out + Form.basis(b, tuple(I), tuple(J), c)
    return HermitianMetric(out, model, samples, name="literal")


METRIC_PRESETS = ("flat", "kahler-perturbed", "conformal", "gauduchon", "iwasawa-standard", "product")


def metric_preset(name: str, model: ManifoldModel | str, **params) -> HermitianMetric:
    """Resolve a preset by name.

    ``product`` takes ``factors=[(model, preset, params), (model, preset, params)]``.
    """
    if isinstance(model, str):
        model = model_from_name(model)
    if name == "flat":
        return flat(model)
    if name == "conformal":
        return conformal(model, **params)
    if name == "kahler-perturbed":
        return kahler_perturbed(model, **params)
    if name == "gauduchon":
        return gauduchon_surface(model, **params)
    if name == "iwasawa-standard":
        return iwasawa_standard()
    if name == "product":
        from .characterize import product_metric

        (ma, pa, qa), (mb, pb, qb) = params["factors"]
        return product_metric(metric_preset(pa, ma, **(qa or {})), metric_preset(pb, mb, **(qb or {})))
    raise ValueError(f"unknown metric preset {name!r}")
