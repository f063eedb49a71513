"""Monge-Ampere volumes of perturbed Hermitian metrics.

For a metric ``g`` and a real function ``u`` the perturbed form is
``g + i ddbar u`` and its Monge-Ampere volume is ``int (g + i ddbar u)^n``.
Expanding in ``eps`` for ``u -> eps u`` gives

    int (g + eps i ddbar u)^n = sum_k C(n, k) eps^k int g^{n-k} ^ (i ddbar u)^k,

whose mixed terms are what this module computes, fits and polarizes.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb, factorial
from typing import NamedTuple, Sequence

import numpy as np

from .calculus import del_, delbar, i_ddbar, i_ddbar_form
from .errors import BackendMismatch, CapabilityError
from .exterior import Form, power, wedge
from .fields import FourierField
from .manifolds import (
    HermitianMetric,
    SamplingSpec,
    PSD_RTOL,
    hermitian_matrices,
    integrate_top,
    is_positive_11,
    is_weakly_positive_kk,
    sample_points,
    top_density,
)

EPS_MAX = 1e6
FIT_RTOL = 1e-9


def _as_form(u, g: HermitianMetric) -> Form:
    f = u if isinstance(u, Form) else Form.scalar(u)
    if f.backend != g.model.backend:
        raise BackendMismatch("function and metric live on different models")
    return f


def _field(u):
    """Underlying coefficient field of a function given as a field or 0-form."""
    if isinstance(u, Form):
        return u.terms.get(((), ()))
    return u


# ---------------------------------------------------------------------------
# Admissibility
# ---------------------------------------------------------------------------

class Epsilon0(NamedTuple):
    value: float
    capped: bool


def psh_epsilon0(g: HermitianMetric, u, samples: SamplingSpec = SamplingSpec(),
                 eps_max: float = EPS_MAX, rtol: float = 1e-10) -> Epsilon0:
    """Largest ``eps`` with ``g + i ddbar(+-eps u) >= 0`` on the sample points.

    Doubling/halving line search followed by bisection down to ``rtol``.  When
    ``i ddbar u`` vanishes (constant ``u``) the search is capped at ``eps_max``.
    """
    H = i_ddbar(_as_form(u, g))
    if H.is_zero():
        return Epsilon0(eps_max, True)
    pts = sample_points(g.model, samples)
    A = hermitian_matrices(g.form, pts)
    B = hermitian_matrices(H, pts)
    # whiten by the metric: A + eps B >= 0  iff  1 + eps lam >= 0 for lam in spec(L^-1 B L^-*)
    Linv = np.linalg.inv(np.linalg.cholesky(A))
    C = Linv @ B @ np.conj(np.swapaxes(Linv, -1, -2))
    lam = np.linalg.eigvalsh(0.5 * (C + np.conj(np.swapaxes(C, -1, -2))))
    lo_eig, hi_eig = lam[:, 0], lam[:, -1]
    top = np.abs(lam).max(axis=1)

    def ok(eps: float) -> bool:
        tol = PSD_RTOL * (1 + eps * top)
        return bool(np.all(1 + eps * lo_eig >= -tol) and np.all(1 - eps * hi_eig >= -tol))

    lo, hi = 0.0, 1.0
    while ok(hi):
        lo, hi = hi, 2 * hi
        if hi > eps_max:
            return Epsilon0(eps_max, True)
    while lo == 0.0:
        if ok(hi / 2):
            lo = hi / 2
        else:
            hi /= 2
    while hi - lo > rtol * lo:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return Epsilon0(lo, False)


@dataclass
class PshFunction:
    """A function certified (by sampling) to be ``g``-plurisubharmonic."""

    u: FourierField
    metric: HermitianMetric
    certificate: float

    @classmethod
    def certify(cls, g: HermitianMetric, u, samples: SamplingSpec = SamplingSpec()) -> "PshFunction":
        res = is_positive_11(perturbed(g, u), g.model, samples)
        if not res.semi_positive:
            raise ValueError(f"function is not g-psh (min eigenvalue {res.min_eigenvalue:.3e})")
        return cls(_field(u), g, res.min_eigenvalue)


def psh_family(g: HermitianMetric, size: int, seed: int = 0, band: int = 3, modes: int = 3,
               samples: SamplingSpec = SamplingSpec()) -> list[PshFunction]:
    """Seeded random real fields of bandwidth <= ``band`` scaled to ``0.8 eps0``."""
    from .presets import random_real_field

    if not g.model.is_torus:
        raise CapabilityError("psh families need a torus model")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(size):
        u = random_real_field(g.model, rng, band=int(rng.integers(1, band + 1)), modes=modes)
        e0 = psh_epsilon0(g, u, samples)
        out.append(PshFunction.certify(g, u * (0.8 * e0.value), samples))
    return out


# ---------------------------------------------------------------------------
# Volumes and mixed terms
# ---------------------------------------------------------------------------

def perturbed(g: HermitianMetric, u) -> Form:
    """``g + i ddbar u``."""
    return g.form + i_ddbar(_as_form(u, g))


def ma_volume(g: HermitianMetric, u=None) -> float:
    """``int_X (g + i ddbar u)^n``; ``u=None`` gives ``int g^n``."""
    form = g.form if u is None else perturbed(g, u)
    return integrate_top(power(form, g.n), g.model).real


def mixed_term(g: HermitianMetric, u, k: int) -> float:
    """``int g^k ^ (i ddbar u)^{n-k}``."""
    n = g.n
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in 0..{n}")
    H = i_ddbar(_as_form(u, g))
    return integrate_top(wedge(power(g.form, k), power(H, n - k)), g.model).real


def polarized_mixed_term(g: HermitianMetric, us: Sequence, k: int) -> float:
    """``int g^k ^ i ddbar u_1 ^ ... ^ i ddbar u_{n-k}``."""
    n = g.n
    if len(us) != n - k:
        raise ValueError(f"need {n - k} functions for k={k}, got {len(us)}")
    out = power(g.form, k)
    for u in us:
        out = wedge(out, i_ddbar(_as_form(u, g)))
    return integrate_top(out, g.model).real


def polarization_from_mixed(g: HermitianMetric, us: Sequence, k: int) -> float:
    """Recover the polarized term from diagonal values ``mixed_term(g, sum t_i u_i, k)``.

    Uses the inclusion-exclusion form of the polarization identity with
    ``t_i`` in ``{0, 1}``, which is an exact multilinear solve.
    """
    m = len(us)
    if m != g.n - k:
        raise ValueError(f"need {g.n - k} functions for k={k}, got {m}")
    total = 0.0
    for r in range(1, m + 1):
        for S in combinations(range(m), r):
            u = us[S[0]]
            for i in S[1:]:
                u = u + us[i]
            total += (-1) ** (m - r) * mixed_term(g, u, k)
    return total / factorial(m)


@dataclass
class ExpansionProbe:
    u: object
    epsilon0: float
    capped: bool
    epsilons: np.ndarray
    volumes: np.ndarray
    fitted_coeffs: np.ndarray
    direct_coeffs: np.ndarray
    fit_residual: float

    @property
    def ok(self) -> bool:
        return self.fit_residual <= FIT_RTOL

    @property
    def coefficient_error(self) -> float:
        """Largest fitted-vs-direct discrepancy relative to the largest coefficient.

        Compared in the sampled variable ``t = eps / eps0`` (coefficients times
        ``eps0^k``); raw ``eps``-coefficients carry an ``eps0^-k`` roundoff factor.
        """
        w = self.epsilon0 ** np.arange(len(self.direct_coeffs))
        a, b = self.fitted_coeffs * w, self.direct_coeffs * w
        return float(np.abs(a - b).max() / np.abs(b).max())

    def table(self) -> list[tuple[int, float, float]]:
        return [(k, float(a), float(b)) for k, (a, b) in enumerate(zip(self.fitted_coeffs, self.direct_coeffs))]


def epsilon_expansion(g: HermitianMetric, u, num_eps: int | None = None,
                      samples: SamplingSpec = SamplingSpec()) -> ExpansionProbe:
    """Fit ``eps -> ma_volume(g, eps u)`` by a degree-``n`` polynomial.

    Samples are equispaced and symmetric in ``[-0.9 eps0, 0.9 eps0]``; the fit is
    done in the rescaled variable ``eps / eps0`` for conditioning.  The direct
    coefficients ``C(n, k) mixed_term(g, u, n - k)`` are computed alongside.
    """
    n = g.n
    num_eps = n + 3 if num_eps is None else num_eps
    if num_eps < n + 3:
        raise ValueError(f"num_eps must be at least n + 3 = {n + 3}")
    e0 = psh_epsilon0(g, u, samples)
    t = np.linspace(-0.9, 0.9, num_eps)
    eps = t * e0.value
    f = _as_form(u, g)
    vols = np.array([ma_volume(g, f * float(e)) for e in eps])
    a = np.polynomial.polynomial.polyfit(t, vols, n)
    fit = np.polynomial.polynomial.polyval(t, a)
    resid = float(np.abs(fit - vols).max() / max(np.abs(vols).max(), 1e-300))
    fitted = a / e0.value ** np.arange(n + 1)
    direct = np.array([comb(n, k) * mixed_term(g, f, n - k) for k in range(n + 1)])
    return ExpansionProbe(u, e0.value, e0.capped, eps, vols, fitted, direct, resid)


# ---------------------------------------------------------------------------
# Comparison principle integrals
# ---------------------------------------------------------------------------

@dataclass
class ComparisonResult:
    lhs: float
    rhs: float
    boundary_fraction: float
    density_bound: float
    grid: int
    total_volume: float = field(repr=False, default=1.0)

    @property
    def margin(self) -> float:
        """``rhs - lhs``; non-negative when the comparison inequality holds."""
        return self.rhs - self.lhs

    @property
    def allowance(self) -> float:
        """Grid error allowance: boundary fraction times density bound times volume."""
        return self.boundary_fraction * self.density_bound * self.total_volume

    @property
    def violated(self) -> bool:
        return self.margin < -self.allowance


def ma_density(g: HermitianMetric, u) -> FourierField:
    """Real density ``f`` with ``(g + i ddbar u)^n = f omega_std``."""
    return top_density(power(perturbed(g, u), g.n), g.model).real_part()


def _real_gradient(w: FourierField) -> list[FourierField]:
    out = []
    for j in range(1, w.n + 1):
        dz, dzb = w.deriv(j), w.deriv(j, bar=True)
        out.append(dz + dzb)              # d/dx_j
        out.append((dz - dzb) * 1j)       # d/dy_j
    return out


def comparison_integrals(g: HermitianMetric, u, v, grid: int = 32) -> ComparisonResult:
    """Midpoint-cell integrals of both MA densities over ``{u < v}``.

    Returns ``lhs = int_{u<v} (g + i ddbar v)^n`` and
    ``rhs = int_{u<v} (g + i ddbar u)^n`` on a ``grid^{2n}`` cell grid, the
    fraction of cells within one cell diameter of ``{u = v}`` (first-order
    estimate ``|u - v| <= |grad(u - v)| diam``) and a bound on the densities.
    """
    if not g.model.is_torus:
        raise CapabilityError("comparison integrals need a torus model")
    uf = _field(u.u if isinstance(u, PshFunction) else u)
    vf = _field(v.u if isinstance(v, PshFunction) else v)
    mu, mv = ma_density(g, uf), ma_density(g, vf)
    w = uf - vf
    grads = _real_gradient(w)
    n, N = g.n, grid
    diam = np.sqrt(2 * n) / N
    lhs = rhs = 0.0
    near = 0
    bound = 0.0
    for i0 in range(N):
        ws = w.grid_slab(N, i0).real
        fu = mu.grid_slab(N, i0).real
        fv = mv.grid_slab(N, i0).real
        gn = np.sqrt(sum(gf.grid_slab(N, i0).real ** 2 for gf in grads))
        mask = ws < 0
        lhs += float(fv[mask].sum())
        rhs += float(fu[mask].sum())
        near += int(np.count_nonzero(np.abs(ws) <= gn * diam))
        bound = max(bound, float(np.abs(fu).max()), float(np.abs(fv).max()))
    cells = N ** (2 * n)
    vol = g.model.total_volume
    return ComparisonResult(lhs * vol / cells, rhs * vol / cells, near / cells, bound, N, vol)


# ---------------------------------------------------------------------------
# n = 3 decomposition
# ---------------------------------------------------------------------------

@dataclass
class ThreefoldDecomposition:
    T0: float
    T1: float
    T2: float
    T3: float
    volume: float
    stokes_form: float
    residual_T3: float
    residual_binomial: float
    residual_stokes: float
    ddbar_g_weakly_positive: bool
    T2_sign_ok: bool

    TOL_T3 = 1e-12
    TOL_BINOMIAL = 1e-10
    TOL_STOKES = 1e-10

    @property
    def ok(self) -> bool:
        return (self.residual_T3 <= self.TOL_T3 and self.residual_binomial <= self.TOL_BINOMIAL
                and self.residual_stokes <= self.TOL_STOKES and self.T2_sign_ok)

    def rows(self) -> list[tuple[str, float]]:
        return [("T0", self.T0), ("T1", self.T1), ("T2", self.T2), ("T3", self.T3),
                ("volume", self.volume), ("minus_int_iddbar_g_idu_dbaru", self.stokes_form)]


def threefold_decomposition(g: HermitianMetric, u, samples: SamplingSpec = SamplingSpec(),
                            trials: int = 16, seed: int = 0) -> ThreefoldDecomposition:
    """Split ``int (g + i ddbar u)^3`` into its binomial terms.

    ``T_j = int g^{3-j} ^ (i ddbar u)^j``.  Residuals are relative to
    ``max(1, |T0|)`` for ``T3`` and to the compared quantities otherwise.
    """
    if g.n != 3:
        raise ValueError("threefold_decomposition needs n = 3")
    f = _as_form(u, g)
    T0, T1, T2, T3 = (mixed_term(g, f, k) for k in (3, 2, 1, 0))
    vol = ma_volume(g, f)
    ddg = i_ddbar_form(g.form)
    idu_dbaru = wedge(del_(f), delbar(f)) * 1j
    stokes_side = -integrate_top(wedge(idu_dbaru, ddg), g.model).real
    scale = max(1.0, abs(T0))
    r_T3 = abs(T3) / scale
    r_bin = abs(vol - (T0 + 3 * T1 + 3 * T2 + T3)) / max(abs(vol), 1e-300)
    diff = abs(T2 - stokes_side)
    # both sides vanish for closed g; below the T3 floor the difference is roundoff
    r_st = 0.0 if diff <= ThreefoldDecomposition.TOL_T3 * scale else diff / max(abs(T2), abs(stokes_side))
    if ddg.norm() <= 1e-12 * max(1.0, g.form.norm()):
        weak = True
    else:
        weak = is_weakly_positive_kk(ddg, g.model, trials=trials, seed=seed, samples=samples).weakly_positive
    sign_ok = (not weak) or T2 <= 1e-10 * scale
    return ThreefoldDecomposition(T0, T1, T2, T3, vol, stokes_side, r_T3, r_bin, r_st, weak, sign_ok)
