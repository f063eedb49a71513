"""Compact models, integration of top forms and positivity testers.

Volume convention: the standard form ``omega_std = prod_j (i dz_j ^ dzbar_j)``
integrates to ``2^n`` over the unit torus (``i dz ^ dzbar = 2 dx ^ dy``) and
to ``1`` over a nilmanifold with its invariant coframe.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import STRUCTURE_PRESETS, StructureConstants, exterior_d
from .errors import BackendMismatch, CapabilityError
from .exterior import Form, is_real, omega_std, omega_std_coefficient, top_key, wedge
from .fields import DEFAULT_CAP, CoframeConstant, FourierBackend

PSD_RTOL = 1e-10
PD_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class ManifoldModel:
    """A compact complex manifold we can integrate on.

    ``kind`` is ``"torus"`` (unit lattice), ``"nilmanifold"`` (invariant
    coframe with total volume 1) or ``"product"`` of two models of the same
    family.
    """

    n: int
    kind: str
    structure: StructureConstants | None = None
    factors: tuple = ()
    cap: int = DEFAULT_CAP
    name: str = ""
    _backend: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind == "torus":
            b = FourierBackend(self.n, self.cap)
        elif self.kind == "nilmanifold":
            if self.structure is None or self.structure.n != self.n:
                raise ValueError("nilmanifold model needs structure constants of matching dimension")
            b = self.structure.backend
        elif self.kind == "product":
            a, c = self.factors
            if a.family != c.family:
                raise CapabilityError(f"cannot form product of {a.family} and {c.family} models")
            if a.family == "torus":
                b = FourierBackend(self.n, self.cap)
            else:
                sc = _block_structure(a.backend.structure, c.backend.structure)
                object.__setattr__(self, "structure", sc)
                b = sc.backend
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")
        object.__setattr__(self, "_backend", b)

    @property
    def backend(self):
        return self._backend

    @property
    def family(self) -> str:
        """``"torus"`` or ``"nilmanifold"``; products inherit their factors' family."""
        if self.kind == "product":
            return self.factors[0].family
        return self.kind

    @property
    def is_torus(self) -> bool:
        return self.family == "torus"

    @property
    def total_volume(self) -> float:
        """Integral of ``omega_std``."""
        return 2.0 ** self.n if self.is_torus else 1.0

    def omega_std(self) -> Form:
        return omega_std(self.backend)

    def pullback(self, a: Form, factor: int) -> Form:
        """Pull a form on ``factors[factor]`` back to the product."""
        if self.kind != "product":
            raise ValueError("pullback needs a product model")
        src = self.factors[factor]
        if a.backend != src.backend:
            raise BackendMismatch("form does not live on the requested factor")
        off = sum(f.n for f in self.factors[:factor])
        terms = {}
        for (I, J), c in a.terms.items():
            key = (tuple(i + off for i in I), tuple(j + off for j in J))
            if self.is_torus:
                terms[key] = c.embed(self.n, off)
            else:
                terms[key] = CoframeConstant(c.value, self.backend)
        return Form(self.n, self.backend, terms)

    def __repr__(self) -> str:
        return f"ManifoldModel({self.name or self.kind}, n={self.n})"


def _block_structure(a: StructureConstants, b: StructureConstants) -> StructureConstants:
    table = {}
    for sc, off in ((a, 0), (b, a.n)):
        for m, f in enumerate(sc.d_phi):
            table[m + 1 + off] = {(tuple(i + off for i in I), tuple(j + off for j in J)): c.value
                                  for (I, J), c in f.terms.items()}
    return StructureConstants(a.n + b.n, table, name=f"{a.name}x{b.name}")


def torus(n: int, cap: int = DEFAULT_CAP) -> ManifoldModel:
    return ManifoldModel(n, "torus", cap=cap, name=f"torus{n}")


def nilmanifold(structure: StructureConstants) -> ManifoldModel:
    return ManifoldModel(structure.n, "nilmanifold", structure=structure, name=structure.name)


def product(a: ManifoldModel, b: ManifoldModel) -> ManifoldModel:
    cap = a.cap if a.is_torus else DEFAULT_CAP
    return ManifoldModel(a.n + b.n, "product", factors=(a, b), cap=cap, name=f"product({a.name},{b.name})")


def _split_top(s: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in s:
        if ch == "," and depth == 0:
            parts.append(cur.strip())
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    parts.append(cur.strip())
    return parts


def model_from_name(name: str, cap: int = DEFAULT_CAP) -> ManifoldModel:
    """Resolve ``torus<n>``, ``iwasawa`` or ``product(<a>,<b>)``."""
    name = name.strip()
    if name.startswith("product(") and name.endswith(")"):
        parts = _split_top(name[len("product("):-1])
        if len(parts) != 2:
            raise ValueError(f"product needs two factors: {name!r}")
        return product(model_from_name(parts[0], cap), model_from_name(parts[1], cap))
    if name.startswith("torus") and name[5:].isdigit():
        return torus(int(name[5:]), cap)
    if name in STRUCTURE_PRESETS:
        return nilmanifold(STRUCTURE_PRESETS[name]())
    raise ValueError(f"unknown model {name!r}")


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

def _check_backend(a: Form, m: ManifoldModel) -> None:
    if a.backend.name == "poly":
        raise CapabilityError("chart-local field not integrable")
    if a.backend != m.backend:
        raise BackendMismatch(f"form backend does not match model {m!r}")


def top_density(a: Form, m: ManifoldModel):
    """The coefficient field ``f`` with ``a = f * omega_std``."""
    _check_backend(a, m)
    if a.bidegree not in (None, (m.n, m.n)):
        raise ValueError(f"expected an ({m.n},{m.n})-form, got bidegree {a.bidegree}")
    c = a.terms.get(top_key(m.n), m.backend.const(0))
    return c * (1 / omega_std_coefficient(m.n))


def integrate_top(a: Form, m: ManifoldModel) -> complex:
    return top_density(a, m).mean() * m.total_volume


def stokes_residual(a: Form, m: ManifoldModel) -> float:
    """``|int_X d a|`` for a form of total degree ``2n - 1``."""
    if a.degree not in (None, 2 * m.n - 1):
        raise ValueError(f"stokes_residual needs degree {2 * m.n - 1}, got {a.degree}")
    return abs(integrate_top(exterior_d(a), m))


# ---------------------------------------------------------------------------
# Sampling and positivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingSpec:
    grid: int = 5
    random: int = 256
    seed: int = 0


def sample_points(m: ManifoldModel, spec: SamplingSpec = SamplingSpec()) -> np.ndarray:
    """Deterministic grid plus seeded uniform points on the torus; one point otherwise."""
    d = 2 * m.n
    if not m.is_torus:
        return np.zeros((1, d))
    axes = [np.arange(spec.grid) / spec.grid] * d
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    rng = np.random.default_rng(spec.seed)
    return np.concatenate([grid, rng.random((spec.random, d))])


def hermitian_matrices(a: Form, points: np.ndarray) -> np.ndarray:
    """Matrices ``A[p, j, k] = a_{j kbar}(x_p)`` for ``a = i sum a_{j kbar} dz_j ^ dzbar_k``."""
    n = a.n
    H = np.zeros((len(points), n, n), dtype=complex)
    for (I, J), c in a.terms.items():
        if len(I) != 1 or len(J) != 1:
            raise ValueError("hermitian_matrices needs a (1,1)-form")
        H[:, I[0] - 1, J[0] - 1] = c.evaluate(points) / 1j
    return H


def min_eigenvalues(H: np.ndarray):
    """Pointwise smallest eigenvalue and tolerance ``PSD_RTOL * sum |eig|``."""
    H = 0.5 * (H + np.conj(np.swapaxes(H, -1, -2)))
    w = np.linalg.eigvalsh(H)
    return w[:, 0], PSD_RTOL * np.abs(w).sum(axis=1)


@dataclass
class PositivityResult:
    verdict: str
    min_eigenvalue: float
    worst_point: list

    @property
    def semi_positive(self) -> bool:
        return self.verdict != "NOT_SEMI_POSITIVE"


def is_positive_11(a: Form, m: ManifoldModel, samples: SamplingSpec = SamplingSpec()) -> PositivityResult:
    """Sampled positivity of a real (1,1)-form.

    Verdict is ``POSITIVE_DEFINITE`` when the smallest sampled eigenvalue
    exceeds ``PD_TOL``, ``SEMI_POSITIVE`` when it is at least ``-psd_tol``
    everywhere sampled, else ``NOT_SEMI_POSITIVE``.
    """
    _check_backend(a, m)
    if a.bidegree not in (None, (1, 1)):
        raise ValueError(f"expected a (1,1)-form, got {a.bidegree}")
    if not is_real(a):
        raise ValueError("is_positive_11 needs a real form")
    pts = sample_points(m, samples)
    lam, tol = min_eigenvalues(hermitian_matrices(a, pts))
    i = int(np.argmin(lam))
    worst = float(lam[i])
    if np.any(lam < -tol):
        verdict = "NOT_SEMI_POSITIVE"
    elif worst > PD_TOL:
        verdict = "POSITIVE_DEFINITE"
    else:
        verdict = "SEMI_POSITIVE"
    return PositivityResult(verdict, worst, pts[i].tolist())


@dataclass
class WeakPositivityResult:
    verdict: str
    worst_pairing: float
    trials: int
    statistical: bool = True
    note: str = "randomized simple-form pairing: rejection is sound, acceptance is statistical"

    @property
    def weakly_positive(self) -> bool:
        return self.verdict == "WEAKLY_POSITIVE"


def _random_simple_form(m: ManifoldModel, k: int, rng: np.random.Generator) -> Form:
    b = m.backend
    out = Form.scalar(b.const(1), b)
    for _ in range(m.n - k):
        v = rng.normal(size=m.n) + 1j * rng.normal(size=m.n)
        v /= np.linalg.norm(v)
        sigma = Form.zero(b)
        sigmabar = Form.zero(b)
        for j in range(m.n):
            sigma = sigma + Form.dz(b, j + 1) * complex(v[j])
            sigmabar = sigmabar + Form.dzbar(b, j + 1) * complex(np.conj(v[j]))
        out = wedge(out, wedge(sigma, sigmabar) * 1j)
    return out


def is_weakly_positive_kk(a: Form, m: ManifoldModel, trials: int = 32, seed: int = 0,
                          samples: SamplingSpec = SamplingSpec()) -> WeakPositivityResult:
    """Randomized weak-positivity test of a real (k,k)-form.

    Pairs ``a`` with ``trials`` random simple positive ``(n-k, n-k)``-forms and
    scans the resulting density against ``omega_std`` at the sample points.
    For ``k == n`` a single density scan is done.
    """
    _check_backend(a, m)
    bd = a.bidegree
    if bd is not None and bd[0] != bd[1]:
        raise ValueError(f"expected a (k,k)-form, got {bd}")
    if not is_real(a):
        raise ValueError("is_weakly_positive_kk needs a real form")
    if bd is None:
        return WeakPositivityResult("WEAKLY_POSITIVE", 0.0, 0, statistical=False, note="zero form")
    k = bd[0]
    pts = sample_points(m, samples)
    rng = np.random.default_rng(seed)
    ntrials = 1 if k == m.n else trials
    worst, scale = np.inf, 0.0
    for _ in range(ntrials):
        beta = _random_simple_form(m, k, rng)
        vals = top_density(wedge(a, beta), m).evaluate(pts).real
        worst = min(worst, float(vals.min()))
        scale = max(scale, float(np.abs(vals).max()))
    verdict = "WEAKLY_POSITIVE" if worst >= -PSD_RTOL * scale else "NOT_WEAKLY_POSITIVE"
    return WeakPositivityResult(verdict, worst, ntrials)


class HermitianMetric:
    """A positive definite real (1,1)-form on a model.

    ``form = i sum a_{j kbar} dz_j ^ dzbar_k`` with ``(a_{j kbar})`` Hermitian and
    positive definite at every sampled point.
    """

    def __init__(self, form: Form, model: ManifoldModel, samples: SamplingSpec = SamplingSpec(),
                 name: str = ""):
        _check_backend(form, model)
        if form.bidegree != (1, 1):
            raise ValueError(f"metric must be a (1,1)-form, got {form.bidegree}")
        if not is_real(form):
            raise ValueError("metric form is not real (coefficient matrix not Hermitian)")
        pts = sample_points(model, samples)
        H = hermitian_matrices(form, pts)
        if not np.allclose(H, np.conj(np.swapaxes(H, -1, -2)), rtol=0, atol=1e-12 * max(1.0, np.abs(H).max())):
            raise ValueError("metric coefficient matrix not Hermitian")
        lam, _ = min_eigenvalues(H)
        self.min_eigenvalue = float(lam.min())
        if self.min_eigenvalue <= PD_TOL:
            raise ValueError(f"metric not positive definite (min eigenvalue {self.min_eigenvalue:.3e})")
        self.form = form
        self.model = model
        self.name = name

    @property
    def n(self) -> int:
        return self.model.n

    def __repr__(self) -> str:
        return f"HermitianMetric({self.name or 'custom'}, model={self.model!r})"
