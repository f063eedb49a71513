"""Evaluate the six equivalent conditions on a Hermitian metric.

The conditions, for a metric ``g`` on a compact ``n``-fold:

    i)   i ddbar g = 0 and i dg ^ dbar g = 0
    ii)  i ddbar g = 0 and i ddbar g^2 = 0
    iii) i ddbar g^k = 0 for k = 1..n-1
    iv)  i ddbar g >= 0 and i dg ^ dbar g >= 0
    v)   comparison principle for g-psh functions
    vi)  int (g + i ddbar u)^n = int g^n for every g-psh u

i)-iv) are decided from exact form computations and sampled positivity.
v) and vi) quantify over functions; they FAIL only by an explicit witness and
HOLD only through iii).  Sampling alone gives HOLDS_ON_SAMPLES or UNDECIDED.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .calculus import delbar, exterior_d, i_ddbar, i_ddbar_form, i_del_wedge_delbar
from .errors import CapabilityError, HermvolError
from .exterior import Form, FormCoefficientTable, permutation_sign, power, wedge
from .fields import FourierField, PolyField
from .manifolds import (
    HermitianMetric,
    SamplingSpec,
    integrate_top,
    is_weakly_positive_kk,
    product,
    top_density,
)
from .monge_ampere import (
    ComparisonResult,
    PshFunction,
    comparison_integrals,
    epsilon_expansion,
    ma_volume,
    psh_epsilon0,
    psh_family,
)

HOLDS = "HOLDS"
FAILS = "FAILS"
UNDECIDED = "UNDECIDED"
HOLDS_ON_SAMPLES = "HOLDS_ON_SAMPLES"

EXACT_RTOL = 1e-12
WITNESS_TOL = 1e-6
PREDICTION_RTOL = 1e-9
REPORT_SCHEMA = "hermvol.condition-report/1"


@dataclass
class Witness:
    """A function whose Monge-Ampere volume differs from ``int g^n``."""

    u: FourierField
    gap: float
    predicted_gap: float | None
    method: str
    epsilon0: float
    fitted_coeffs: list | None = None
    direct_coeffs: list | None = None

    @property
    def prediction_error(self) -> float | None:
        if self.predicted_gap is None:
            return None
        return abs(self.gap - self.predicted_gap) / max(abs(self.predicted_gap), 1e-300)

    def to_json(self) -> dict:
        return {
            "method": self.method, "gap": self.gap, "predicted_gap": self.predicted_gap,
            "prediction_error": self.prediction_error, "epsilon0": self.epsilon0,
            "fitted_coeffs": self.fitted_coeffs, "direct_coeffs": self.direct_coeffs,
            "u": self.u.to_json(),
        }


class SearchFailed(HermvolError):
    """A nonzero defect was found but no volume gap above tolerance."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass
class ConditionResult:
    name: str
    verdict: str
    defect: float
    details: dict = field(default_factory=dict)
    witness: Witness | None = None
    evidence: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "defect": self.defect, "details": self.details,
               "evidence": self.evidence}
        if self.witness is not None:
            out["witness"] = self.witness.to_json()
        return out


def metric_scale(g: HermitianMetric) -> float:
    return g.form.norm()


def _exact_verdict(defects: dict, g: HermitianMetric, tol_scale: float) -> tuple[str, float]:
    worst = max(defects.values(), default=0.0)
    return (HOLDS if worst <= EXACT_RTOL * tol_scale * metric_scale(g) else FAILS), worst


def ddbar_power(g: HermitianMetric, k: int) -> Form:
    """``i ddbar (g^k)``."""
    return i_ddbar_form(power(g.form, k))


def condition_i(g: HermitianMetric, tol_scale: float = 1.0) -> ConditionResult:
    defects = {"i_ddbar_g": ddbar_power(g, 1).norm(), "i_dg_dbarg": i_del_wedge_delbar(g.form).norm()}
    verdict, worst = _exact_verdict(defects, g, tol_scale)
    return ConditionResult("i", verdict, worst, defects)


def condition_ii(g: HermitianMetric, tol_scale: float = 1.0) -> ConditionResult:
    defects = {"i_ddbar_g": ddbar_power(g, 1).norm(), "i_ddbar_g2": ddbar_power(g, 2).norm()}
    verdict, worst = _exact_verdict(defects, g, tol_scale)
    return ConditionResult("ii", verdict, worst, defects)


def condition_iii(g: HermitianMetric, tol_scale: float = 1.0) -> ConditionResult:
    defects = {f"k={k}": ddbar_power(g, k).norm() for k in range(1, g.n)}
    verdict, worst = _exact_verdict(defects, g, tol_scale)
    return ConditionResult("iii", verdict, worst, defects)


def condition_iv(g: HermitianMetric, trials: int = 32, seed: int = 0,
                 samples: SamplingSpec = SamplingSpec(), tol_scale: float = 1.0) -> ConditionResult:
    """Weak positivity of ``i ddbar g`` and ``i dg ^ dbar g``.

    Both are (k,k)-forms with k >= 2, so both go through the randomized
    weak-positivity test; identically vanishing forms short-circuit to HOLDS.
    """
    forms = {"i_ddbar_g": ddbar_power(g, 1), "i_dg_dbarg": i_del_wedge_delbar(g.form)}
    cut = EXACT_RTOL * tol_scale * metric_scale(g)
    details = {}
    negative = False
    for name, f in forms.items():
        if f.norm() <= cut:
            details[name] = {"zero": True, "norm": f.norm()}
            continue
        res = is_weakly_positive_kk(f, g.model, trials=trials, seed=seed, samples=samples)
        details[name] = {"zero": False, "norm": f.norm(), "verdict": res.verdict,
                         "worst_pairing": res.worst_pairing, "trials": res.trials, "note": res.note}
        negative |= not res.weakly_positive
    worst = min((d.get("worst_pairing", 0.0) for d in details.values()), default=0.0)
    if negative:
        verdict = FAILS
    elif all(d["zero"] for d in details.values()):
        verdict = HOLDS
    else:
        verdict = HOLDS_ON_SAMPLES
    return ConditionResult("iv", verdict, max(0.0, -worst), details)


# ---------------------------------------------------------------------------
# v) comparison principle
# ---------------------------------------------------------------------------

def _field_of(u):
    return u.u if isinstance(u, PshFunction) else u


def volume_sandwich(g: HermitianMetric, u) -> list[ComparisonResult]:
    """The pairs ``(0, u + C)`` and ``(u - C, 0)`` with ``C = sup-bound(u) + 1``.

    Both sublevel sets are all of ``X``, so the comparison integrals are full
    Monge-Ampere volumes and are computed exactly.  Together the two
    inequalities force ``int (g + i ddbar u)^n = int g^n``.
    """
    uf = _field_of(u)
    vol_u, vol_0 = ma_volume(g, uf), ma_volume(g)
    return [ComparisonResult(vol_u, vol_0, 0.0, 0.0, 0, g.model.total_volume),
            ComparisonResult(vol_0, vol_u, 0.0, 0.0, 0, g.model.total_volume)]


def condition_v(g: HermitianMetric, pairs=(), device=(), grid: int = 32,
                tol_scale: float = 1.0) -> ConditionResult:
    """Sampled comparison principle.

    ``pairs`` are ``(u, v)`` tuples checked with grid integrals over ``{u < v}``;
    each ``u`` in ``device`` is checked through :func:`volume_sandwich`.
    """
    if not g.model.is_torus:
        raise CapabilityError("condition v) is evaluated on torus models only")
    evidence, worst = [], 0.0
    failed = False
    vol_tol = 1e-10 * tol_scale * abs(ma_volume(g))
    for u, v in pairs:
        r = comparison_integrals(g, _field_of(u), _field_of(v), grid)
        viol = max(0.0, -r.margin)
        evidence.append({"kind": "grid", "lhs": r.lhs, "rhs": r.rhs, "margin": r.margin,
                         "boundary_fraction": r.boundary_fraction, "allowance": r.allowance, "grid": grid})
        worst = max(worst, viol)
        failed |= r.violated and viol > vol_tol
    for u in device:
        for r, label in zip(volume_sandwich(g, u), ("(0,u+C)", "(u-C,0)")):
            viol = max(0.0, -r.margin)
            evidence.append({"kind": "sandwich", "pair": label, "lhs": r.lhs, "rhs": r.rhs, "margin": r.margin})
            worst = max(worst, viol)
            failed |= viol > max(vol_tol, WITNESS_TOL)
    if failed:
        verdict = FAILS
    elif evidence:
        verdict = HOLDS_ON_SAMPLES
    else:
        verdict = UNDECIDED
    return ConditionResult("v", verdict, worst, {"grid": grid, "pairs": len(pairs), "device": len(device)},
                           evidence=evidence)


# ---------------------------------------------------------------------------
# vi) volume invariance and witnesses
# ---------------------------------------------------------------------------

def _real_density(form: Form, g: HermitianMetric) -> FourierField:
    return top_density(form, g.model).real_part()


def witness_search(g: HermitianMetric, family_size: int = 4, seed: int = 0,
                   samples: SamplingSpec = SamplingSpec(), tol_scale: float = 1.0) -> Witness | None:
    """Find ``u`` with ``ma_volume(g, u) != int g^n``; ``None`` if condition iii) holds.

    For ``n = 2`` the witness is the density ``h`` of ``i ddbar g`` against
    ``omega_std``: then ``gap = 2 int u i ddbar g = 2 int u h omega_std > 0``.
    For ``n >= 3`` candidates (densities of ``i ddbar g^k ^ g^{n-1-k}`` and a
    seeded random family) are ranked by their largest fitted eps-coefficient.
    Raises :class:`SearchFailed` if a nonzero defect yields no gap.
    """
    if not g.model.is_torus:
        raise CapabilityError("witness search needs a torus model")
    iii = condition_iii(g, tol_scale)
    if iii.verdict == HOLDS:
        return None
    n = g.n
    vol0 = ma_volume(g)
    if n == 2:
        h = _real_density(ddbar_power(g, 1), g)
        u = h * (1 / h.norm())
        e0 = psh_epsilon0(g, u, samples).value
        u = u * (0.8 * e0)
        gap = ma_volume(g, u) - vol0
        predicted = 2 * integrate_top(ddbar_power(g, 1) * u, g.model).real
        w = Witness(u, gap, predicted, "defect-density", e0)
        if abs(gap) <= WITNESS_TOL:
            raise SearchFailed("defect density gave no volume gap", {"gap": gap, "defects": iii.details})
        return w

    candidates = []
    for k in range(1, n):
        D = ddbar_power(g, k)
        if D.norm() <= EXACT_RTOL * tol_scale * metric_scale(g):
            continue
        h = _real_density(wedge(D, power(g.form, n - 1 - k)), g)
        if not h.is_zero():
            candidates.append((f"defect-density(k={k})", h * (1 / h.norm())))
    candidates += [(f"family[{i}]", p.u) for i, p in enumerate(psh_family(g, family_size, seed, samples=samples))]
    scored = []
    for label, u in candidates:
        probe = epsilon_expansion(g, u, samples=samples)
        t_coeffs = np.abs(probe.fitted_coeffs[1:]) * probe.epsilon0 ** np.arange(1, n + 1)
        scored.append((float(t_coeffs.max()), label, u, probe))
    scored.sort(key=lambda s: -s[0])
    tried = []
    for score, label, u, probe in scored:
        eps = 0.8 * probe.epsilon0
        gap = ma_volume(g, u * eps) - vol0
        tried.append({"candidate": label, "score": score, "gap": gap})
        if abs(gap) > WITNESS_TOL:
            return Witness(u * eps, gap, None, f"eps-expansion:{label}", probe.epsilon0,
                           probe.fitted_coeffs.tolist(), probe.direct_coeffs.tolist())
    raise SearchFailed("no candidate produced a volume gap", {"tried": tried, "defects": iii.details})


def condition_vi(g: HermitianMetric, family=(), iii: ConditionResult | None = None,
                 seed: int = 0, samples: SamplingSpec = SamplingSpec(), tol_scale: float = 1.0) -> ConditionResult:
    iii = iii if iii is not None else condition_iii(g, tol_scale)
    evidence = []
    vol0 = ma_volume(g) if g.model.is_torus else integrate_top(power(g.form, g.n), g.model).real
    worst = 0.0
    for p in family:
        vol = ma_volume(g, _field_of(p))
        rel = abs(vol - vol0) / abs(vol0)
        worst = max(worst, rel)
        evidence.append({"volume": vol, "relative_deviation": rel})
    if iii.verdict == HOLDS:
        return ConditionResult("vi", HOLDS, worst, {"route": "iii holds exactly", "volume": vol0}, evidence=evidence)
    if not g.model.is_torus:
        return ConditionResult("vi", UNDECIDED, worst, {"reason": "no function sampling on this model"},
                               evidence=evidence)
    try:
        w = witness_search(g, seed=seed, samples=samples, tol_scale=tol_scale)
    except SearchFailed as exc:
        return ConditionResult("vi", UNDECIDED, worst, {"search": "SEARCH_FAILED", **exc.diagnostics},
                               evidence=evidence)
    return ConditionResult("vi", FAILS, abs(w.gap), {"volume": vol0}, witness=w, evidence=evidence)


# ---------------------------------------------------------------------------
# Coefficient extraction with elementary test functions
# ---------------------------------------------------------------------------

def _extraction_sign(n: int, I, J, L, M) -> int:
    # rank dz_i as i and dzbar_j as n + j, then sort the whole word
    word = list(I) + [n + j for j in J]
    for l, m in zip(L, M):
        word += [l, n + m]
    return permutation_sign(word)


def theorem1_extraction(F: Form, k: int | None = None) -> FormCoefficientTable:
    """Recover the coefficients of a chart ``(k+1, k+1)``-form by test wedges.

    For each target ``(I, J)`` the form is wedged with ``i ddbar(z_l zbar_m)``
    over the complements ``L`` of ``I`` and ``M`` of ``J``; only the ``(I, J)``
    term survives in the top degree, and its coefficient is read back.
    """
    if F.backend.name != "poly":
        raise CapabilityError("coefficient extraction works in a chart (poly backend)")
    n = F.n
    if k is None:
        if F.bidegree is None:
            raise ValueError("k is required for the zero form")
        p, q = F.bidegree
        if p != q:
            raise ValueError(f"expected a (k+1,k+1)-form, got {(p, q)}")
        k = p - 1
    if k + 1 > n:
        raise ValueError(f"k + 1 = {k + 1} exceeds n = {n}")
    full = tuple(range(1, n + 1))
    r = n - k - 1
    recovered = {}
    for I in combinations(full, k + 1):
        L = tuple(sorted(set(full) - set(I)))
        for J in combinations(full, k + 1):
            M = tuple(sorted(set(full) - set(J)))
            tests = [i_ddbar(PolyField.variable(n, l) * PolyField.variable(n, m, bar=True), require_real=False)
                     for l, m in zip(L, M)]
            top = wedge(F, *tests) if tests else F
            c = top.coefficient(full, full)
            recovered[(I, J)] = c * (1 / ((1j ** r) * _extraction_sign(n, I, J, L, M)))
    return FormCoefficientTable(Form(n, F.backend, recovered))


# ---------------------------------------------------------------------------
# The d(i g^{n-2} ^ dbar g) identity
# ---------------------------------------------------------------------------

@dataclass
class Remark2Record:
    residual: float
    scale: float
    integral_dg_dbarg: float
    integral_ddbar_g: float
    integral_sum: float

    TOL = 1e-12

    @property
    def ok(self) -> bool:
        return self.residual <= self.TOL * max(1.0, self.scale) and \
            abs(self.integral_sum) <= self.TOL * max(1.0, abs(self.integral_dg_dbarg), abs(self.integral_ddbar_g))

    def to_json(self) -> dict:
        return {"residual": self.residual, "scale": self.scale, "integral_dg_dbarg": self.integral_dg_dbarg,
                "integral_ddbar_g": self.integral_ddbar_g, "integral_sum": self.integral_sum, "ok": self.ok}


def remark2_identity(g: HermitianMetric) -> Remark2Record:
    """Check ``d(i g^{n-2} ^ dbar g) = (n-2) g^{n-3} ^ i dg ^ dbar g + g^{n-2} ^ i ddbar g``.

    Also integrates the right side; Stokes forces
    ``(n-2) int g^{n-3} ^ i dg ^ dbar g + int g^{n-2} ^ i ddbar g = 0`` for every metric.
    """
    n = g.n
    if n < 3:
        raise ValueError("the identity needs n >= 3")
    gf = g.form
    lhs = exterior_d(wedge(power(gf, n - 2), delbar(gf)) * 1j)
    a = wedge(power(gf, n - 3), i_del_wedge_delbar(gf))
    b = wedge(power(gf, n - 2), i_ddbar_form(gf))
    rhs = a * (n - 2) + b
    Ia = (n - 2) * integrate_top(a, g.model).real
    Ib = integrate_top(b, g.model).real
    scale = max(lhs.norm(), rhs.norm())
    return Remark2Record((lhs - rhs).norm(), scale, Ia, Ib, Ia + Ib)


# ---------------------------------------------------------------------------
# Products
# ---------------------------------------------------------------------------

def is_kahler(g: HermitianMetric, tol_scale: float = 1.0) -> bool:
    return exterior_d(g.form).norm() <= EXACT_RTOL * tol_scale * metric_scale(g)


def product_metric(gX: HermitianMetric, hY: HermitianMetric) -> HermitianMetric:
    """``p_X^* g + p_Y^* h`` on the product model."""
    m = product(gX.model, hY.model)
    form = m.pullback(gX.form, 0) + m.pullback(hY.form, 1)
    return HermitianMetric(form, m, name=f"product({gX.name},{hY.name})")


# ---------------------------------------------------------------------------
# Full report
# ---------------------------------------------------------------------------

@dataclass
class ConditionReport:
    metric: str
    model: str
    conditions: dict
    consistent: bool
    problems: list
    metadata: dict

    def verdicts(self) -> dict:
        return {k: c.verdict for k, c in self.conditions.items()}

    def to_json(self) -> dict:
        return {"schema": REPORT_SCHEMA, "metric": self.metric, "model": self.model,
                "conditions": {k: c.to_json() for k, c in self.conditions.items()},
                "consistent": self.consistent, "problems": self.problems, "metadata": self.metadata}


def check_consistency(conditions: dict) -> list[str]:
    """Verdict combinations ruled out by the equivalence of i)-vi)."""
    v = {k: c.verdict for k, c in conditions.items()}
    problems = []
    first = [v[k] for k in ("i", "ii", "iii") if k in v]
    if HOLDS in first and FAILS in first:
        problems.append("i)-iii) disagree although they are algebraically equivalent")
    if v.get("iii") == HOLDS:
        for k in ("iv", "v", "vi"):
            if v.get(k) == FAILS:
                problems.append(f"iii) holds but {k}) fails")
    if v.get("iii") == FAILS:
        for k in ("iv", "v", "vi"):
            if v.get(k) == HOLDS:
                problems.append(f"iii) fails but {k}) holds")
    if v.get("vi") == HOLDS and v.get("iii") != HOLDS:
        problems.append("vi) marked HOLDS without the exact route through iii)")
    return problems


def equivalence_report(g: HermitianMetric, seed: int = 0, family_size: int = 3, grid: int | None = None,
                       trials: int = 32, samples: SamplingSpec = SamplingSpec(),
                       tol_scale: float = 1.0) -> ConditionReport:
    """Run every applicable condition and cross-check the verdicts."""
    conds = {
        "i": condition_i(g, tol_scale),
        "ii": condition_ii(g, tol_scale),
        "iii": condition_iii(g, tol_scale),
    }
    conds["iv"] = condition_iv(g, trials, seed, samples, tol_scale)
    iii = conds["iii"]
    if g.model.is_torus:
        grid = grid if grid is not None else (32 if g.n <= 2 else 8)
        family = psh_family(g, family_size, seed, samples=samples)
        conds["vi"] = condition_vi(g, family, iii, seed, samples, tol_scale)
        pairs = [(family[i].u, family[i + 1].u) for i in range(len(family) - 1)]
        if family:
            pairs.append((family[0].u, family[0].u))
        device = [p.u for p in family]
        if conds["vi"].witness is not None:
            device.append(conds["vi"].witness.u)
        v = condition_v(g, pairs, device, grid, tol_scale)
        if iii.verdict == HOLDS and v.verdict != FAILS:
            v.verdict = HOLDS
            v.details["route"] = "iii holds exactly; iii => iv => v"
        conds["v"] = v
    else:
        grid = None
        for name in ("v", "vi"):
            if iii.verdict == HOLDS:
                conds[name] = ConditionResult(name, HOLDS, 0.0, {"route": "iii holds exactly"})
            else:
                conds[name] = ConditionResult(name, UNDECIDED, 0.0, {"reason": "no function sampling on this model"})
    conds = {k: conds[k] for k in ("i", "ii", "iii", "iv", "v", "vi")}
    problems = check_consistency(conds)
    meta = {"convention": "omega_std = prod(i dz_j ^ dzbar_j); torus volume 2^n",
            "tolerances": {"exact_rtol": EXACT_RTOL * tol_scale, "witness_tol": WITNESS_TOL,
                           "prediction_rtol": PREDICTION_RTOL},
            "seed": seed, "family_size": family_size, "grid": grid, "trials": trials,
            "sampling": {"grid": samples.grid, "random": samples.random, "seed": samples.seed}}
    return ConditionReport(g.name, g.model.name, conds, not problems, problems, meta)
