"""Scenario runner.

Loads a JSON scenario, runs the selected checks in declared order and writes
``report.json`` (deterministic), ``timing.json`` (wall clock, kept apart so the
report stays byte-identical) and optional CSV tables.

Every flag has an environment mirror with prefix ``HERMVOL_``; precedence is
flag > environment > config file > built-in default.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .calculus import StructureConstants
from .characterize import (
    SearchFailed,
    condition_iii,
    condition_v,
    equivalence_report,
    is_kahler,
    product_metric,
    remark2_identity,
    witness_search,
)
from .errors import BackendMismatch, BandwidthOverflow, CapabilityError, ConfigError
from .fields import FourierField
from .manifolds import DEFAULT_CAP, HermitianMetric, ManifoldModel, SamplingSpec, model_from_name, nilmanifold
from .monge_ampere import (
    epsilon_expansion,
    mixed_term,
    polarization_from_mixed,
    polarized_mixed_term,
    psh_family,
    threefold_decomposition,
)
from .presets import METRIC_PRESETS, metric_preset, metric_from_terms, mode_pool, random_real_field

SCHEMA_VERSION = 1
REPORT_SCHEMA = "hermvol.run-report/1"
CHECKS = ("conditions", "expansion", "polarization", "comparison", "threefold", "remark2", "witness", "product")
FORMATS = ("json", "csv", "both")
ENV_PREFIX = "HERMVOL_"

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BANDWIDTH = 3
EXIT_CAPABILITY = 4
EXIT_INCONSISTENT = 5
EXIT_OUTPUT = 6

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "model": "torus2",
    "metric": {"preset": "flat", "params": {}},
    "checks": ["conditions"],
    "seed": 0,
    "family_size": 3,
    "grid": None,
    "bandwidth_cap": DEFAULT_CAP,
    "trials": 32,
    "sampling": {"grid": 5, "random": 256, "seed": 0},
    "tolerances": {"scale": 1.0, "expansion_rtol": 1e-8, "polarization_rtol": 1e-10},
    "product": {"model": "torus1", "metric": {"preset": "flat", "params": {}}},
    "output": {"dir": "hermvol-out", "format": "json"},
}
_NESTED = {"sampling", "tolerances", "output"}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass
class ScenarioConfig:
    model: object
    metric: dict
    checks: list
    seed: int
    family_size: int
    grid: int | None
    bandwidth_cap: int
    trials: int
    sampling: dict
    tolerances: dict
    product: dict
    output: dict
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if data.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {data.get('schema_version')!r}")
        merged = json.loads(json.dumps(DEFAULTS))
        for key, value in data.items():
            if key in _NESTED:
                if not isinstance(value, dict):
                    raise ConfigError(f"{key} must be an object")
                bad = set(value) - set(DEFAULTS[key])
                if bad:
                    raise ConfigError(f"unknown keys in {key}: {sorted(bad)}")
                merged[key].update(value)
            else:
                merged[key] = value
        cfg = cls(**merged)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}")
        if self.output["format"] not in FORMATS:
            raise ConfigError(f"format must be one of {list(FORMATS)}")
        for key in ("seed", "family_size", "bandwidth_cap", "trials"):
            v = getattr(self, key)
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ConfigError(f"{key} must be a non-negative integer")
        if self.grid is not None and (not isinstance(self.grid, int) or self.grid < 2):
            raise ConfigError("grid must be an integer >= 2")
        if not float(self.tolerances["scale"]) > 0:
            raise ConfigError("tolerances.scale must be positive")
        if not isinstance(self.metric, dict) or not ({"preset"} <= set(self.metric) or {"terms"} <= set(self.metric)):
            raise ConfigError("metric needs either 'preset' or 'terms'")

    def echo(self) -> dict:
        """Effective scenario with all defaults filled in; output location excluded."""
        return {"schema_version": self.schema_version, "model": self.model, "metric": self.metric,
                "checks": list(self.checks), "seed": self.seed, "family_size": self.family_size,
                "grid": self.grid, "bandwidth_cap": self.bandwidth_cap, "trials": self.trials,
                "sampling": self.sampling, "tolerances": self.tolerances, "product": self.product}

    @property
    def samples(self) -> SamplingSpec:
        s = self.sampling
        return SamplingSpec(int(s["grid"]), int(s["random"]), int(s["seed"]))

    @property
    def tol_scale(self) -> float:
        return float(self.tolerances["scale"])


def _parse_amp(a) -> complex:
    if isinstance(a, (list, tuple)) and len(a) == 2:
        return complex(float(a[0]), float(a[1]))
    if isinstance(a, (int, float)) and not isinstance(a, bool):
        return complex(a)
    raise ConfigError(f"cannot read amplitude {a!r}")


def parse_coefficient(value, model: ManifoldModel):
    """A coefficient literal: number, ``[re, im]``, or list of ``[frequency, amplitude]`` pairs."""
    b = model.backend
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return b.const(complex(value))
    if isinstance(value, list) and len(value) == 2 and all(isinstance(x, (int, float)) for x in value):
        return b.const(_parse_amp(value))
    if isinstance(value, list):
        if not model.is_torus:
            raise CapabilityError("frequency literals need a torus model")
        modes, amps = [], []
        for pair in value:
            if not (isinstance(pair, list) and len(pair) == 2):
                raise ConfigError(f"expected [frequency, amplitude], got {pair!r}")
            modes.append([int(k) for k in pair[0]])
            amps.append(_parse_amp(pair[1]))
        if any(len(k) != 2 * model.n for k in modes):
            raise ConfigError(f"frequency vectors need {2 * model.n} entries")
        return FourierField(model.n, modes, amps, cap=model.cap)
    raise ConfigError(f"cannot read coefficient {value!r}")


def build_model(spec, cap: int) -> ManifoldModel:
    if isinstance(spec, str):
        try:
            return model_from_name(spec, cap)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if isinstance(spec, dict) and set(spec) == {"structure"}:
        try:
            return nilmanifold(StructureConstants.from_json(spec["structure"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad structure table: {exc}") from exc
    raise ConfigError(f"cannot read model {spec!r}")


def build_metric(spec: dict, model: ManifoldModel, cfg: ScenarioConfig) -> HermitianMetric:
    unknown = set(spec) - {"preset", "params", "terms"}
    if unknown:
        raise ConfigError(f"unknown metric keys {sorted(unknown)}")
    if "terms" in spec:
        terms = [(tuple(I), tuple(J), parse_coefficient(c, model)) for I, J, c in spec["terms"]]
        try:
            return metric_from_terms(model, terms, cfg.samples)
        except (BandwidthOverflow, CapabilityError, BackendMismatch):
            raise
        except ValueError as exc:
            raise ConfigError(f"literal metric rejected: {exc}") from exc
    name, params = spec["preset"], dict(spec.get("params") or {})
    if name not in METRIC_PRESETS:
        raise ConfigError(f"unknown metric preset {name!r}")
    if name == "product":
        raise ConfigError("use a product model with per-factor presets via the 'product' check instead")
    try:
        return metric_preset(name, model, **params)
    except TypeError as exc:
        raise ConfigError(f"bad preset parameters: {exc}") from exc


def load_config(path: str | os.PathLike) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


# ---------------------------------------------------------------------------
# Checks
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    data: dict
    tables: dict = field(default_factory=dict)
    problems: list = field(default_factory=list)


def _need_torus(g: HermitianMetric, check: str) -> None:
    if not g.model.is_torus:
        raise CapabilityError(f"check {check!r} needs a torus model")


def _test_functions(g: HermitianMetric, cfg: ScenarioConfig, count: int) -> list[FourierField]:
    """Seeded fields sharing frequencies with ``g`` (falls back to random bands for flat ``g``)."""
    rng = np.random.default_rng(cfg.seed)
    pool = mode_pool(g)
    return [random_real_field(g.model, rng, band=2, modes=3, pool=pool if len(pool) else None)
            for _ in range(count)]


def check_conditions(g, cfg):
    rep = equivalence_report(g, seed=cfg.seed, family_size=cfg.family_size, grid=cfg.grid,
                             trials=cfg.trials, samples=cfg.samples, tol_scale=cfg.tol_scale)
    return CheckResult("conditions", rep.to_json(), problems=list(rep.problems))


def check_expansion(g, cfg):
    _need_torus(g, "expansion")
    (u,) = _test_functions(g, cfg, 1)
    p = epsilon_expansion(g, u, samples=cfg.samples)
    rtol = cfg.tolerances["expansion_rtol"] * cfg.tol_scale
    data = {"epsilon0": p.epsilon0, "capped": p.capped, "fit_residual": p.fit_residual,
            "coefficient_error": p.coefficient_error, "fitted": p.fitted_coeffs.tolist(),
            "direct": p.direct_coeffs.tolist(), "u": u.to_json()}
    problems = [] if p.coefficient_error <= rtol else [
        f"fitted eps-coefficients deviate from direct wedge terms by {p.coefficient_error:.3e}"]
    rows = [(k, a) for k, a, _ in p.table()]
    return CheckResult("expansion", data, {"expansion": rows}, problems)


def check_polarization(g, cfg):
    _need_torus(g, "polarization")
    n = g.n
    us = _test_functions(g, cfg, n)
    (u,) = us[:1]
    mixed = [(k, mixed_term(g, u, k)) for k in range(n + 1)]
    k = 0 if n <= 2 else n - 2
    m = n - k
    direct = polarized_mixed_term(g, us[:m], k)
    swapped = polarized_mixed_term(g, list(reversed(us[:m])), k)
    recovered = polarization_from_mixed(g, us[:m], k)
    scale = max(1.0, abs(direct))
    rtol = cfg.tolerances["polarization_rtol"] * cfg.tol_scale
    sym, rec = abs(direct - swapped) / scale, abs(direct - recovered) / scale
    problems = []
    if sym > rtol:
        problems.append(f"polarized term not symmetric ({sym:.3e})")
    if rec > rtol:
        problems.append(f"polarization identity residual {rec:.3e}")
    data = {"k": k, "polarized": direct, "symmetry_residual": sym, "identity_residual": rec,
            "mixed_terms": [[a, b] for a, b in mixed]}
    return CheckResult("polarization", data, {"mixed_terms": mixed}, problems)


def check_comparison(g, cfg):
    _need_torus(g, "comparison")
    fam = psh_family(g, max(2, cfg.family_size), cfg.seed, samples=cfg.samples)
    pairs = [(fam[i].u, fam[i + 1].u) for i in range(len(fam) - 1)]
    grid = cfg.grid if cfg.grid is not None else (32 if g.n <= 2 else 8)
    res = condition_v(g, pairs, [p.u for p in fam], grid, cfg.tol_scale)
    return CheckResult("comparison", res.to_json())


def check_threefold(g, cfg):
    if g.n != 3:
        raise CapabilityError("threefold check needs n = 3")
    _need_torus(g, "threefold")
    (u,) = _test_functions(g, cfg, 1)
    d = threefold_decomposition(g, u, samples=cfg.samples, trials=cfg.trials, seed=cfg.seed)
    data = {name: val for name, val in d.rows()}
    data.update(residual_T3=d.residual_T3, residual_binomial=d.residual_binomial,
                residual_stokes=d.residual_stokes, ddbar_g_weakly_positive=d.ddbar_g_weakly_positive,
                T2_sign_ok=d.T2_sign_ok, ok=d.ok)
    problems = [] if d.ok else ["threefold decomposition residuals exceed tolerance"]
    return CheckResult("threefold", data, {"threefold": d.rows()}, problems)


def check_remark2(g, cfg):
    if g.n < 3:
        raise CapabilityError("remark2 check needs n >= 3")
    r = remark2_identity(g)
    return CheckResult("remark2", r.to_json(), problems=[] if r.ok else ["d(i g^{n-2} ^ dbar g) identity violated"])


def check_witness(g, cfg):
    _need_torus(g, "witness")
    try:
        w = witness_search(g, family_size=cfg.family_size, seed=cfg.seed, samples=cfg.samples,
                           tol_scale=cfg.tol_scale)
    except SearchFailed as exc:
        return CheckResult("witness", {"status": "SEARCH_FAILED", "message": str(exc),
                                       "diagnostics": exc.diagnostics})
    if w is None:
        return CheckResult("witness", {"status": "NONE", "reason": "condition iii holds"})
    problems = []
    if w.prediction_error is not None and w.prediction_error > 1e-9 * cfg.tol_scale:
        problems.append(f"witness gap disagrees with 2 int u i ddbar g ({w.prediction_error:.3e})")
    return CheckResult("witness", {"status": "FOUND", **w.to_json()}, problems=problems)


def check_product(g, cfg):
    spec = cfg.product
    bad = set(spec) - {"model", "metric"}
    if bad:
        raise ConfigError(f"unknown keys in product: {sorted(bad)}")
    other_model = build_model(spec.get("model", "torus1"), cfg.bandwidth_cap)
    h = build_metric(spec.get("metric", {"preset": "flat"}), other_model, cfg)
    gh = product_metric(g, h)
    a, p = condition_iii(g, cfg.tol_scale), condition_iii(gh, cfg.tol_scale)
    kahler = is_kahler(h, cfg.tol_scale)
    problems = []
    if a.verdict != p.verdict and kahler:
        problems.append(f"factor iii {a.verdict} but product iii {p.verdict}")
    data = {"factor_iii": a.to_json(), "second_factor_kahler": kahler, "product_model": gh.model.name,
            "product_iii": p.to_json()}
    return CheckResult("product", data, problems=problems)


_RUNNERS = {"conditions": check_conditions, "expansion": check_expansion, "polarization": check_polarization,
            "comparison": check_comparison, "threefold": check_threefold, "remark2": check_remark2,
            "witness": check_witness, "product": check_product}


# ---------------------------------------------------------------------------
# Running and writing
# ---------------------------------------------------------------------------

@dataclass
class RunReport:
    config: dict
    metric: str
    model: str
    checks: dict
    problems: list
    timings: dict = field(default_factory=dict)

    @property
    def consistent(self) -> bool:
        return not self.problems

    def to_json(self) -> dict:
        return {"schema": REPORT_SCHEMA, "engine": {"name": "hermvol", "version": __version__,
                                                    "convention": "int omega_std = 2^n on the unit torus"},
                "config": self.config, "metric": self.metric, "model": self.model,
                "checks": {k: v.data for k, v in self.checks.items()},
                "consistent": self.consistent, "problems": self.problems}


def run(cfg: ScenarioConfig) -> RunReport:
    """Execute ``cfg.checks`` in order (single process, fixed reduction order)."""
    model = build_model(cfg.model, cfg.bandwidth_cap)
    g = build_metric(cfg.metric, model, cfg)
    checks, problems, timings = {}, [], {}
    for name in cfg.checks:
        t0 = time.perf_counter()
        res = _RUNNERS[name](g, cfg)
        timings[name] = time.perf_counter() - t0
        checks[name] = res
        problems += [f"{name}: {p}" for p in res.problems]
    return RunReport(cfg.echo(), g.name, model.name, checks, problems, timings)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, float) and not np.isfinite(obj):
        return repr(obj)
    return obj


def report_bytes(report: RunReport) -> bytes:
    """Canonical serialization: floats via ``repr`` (round-trip exact), fixed key order."""
    return (json.dumps(_plain(report.to_json()), indent=2, allow_nan=False) + "\n").encode()


TABLE_HEADERS = {"expansion": ("k", "value"), "mixed_terms": ("k", "value"), "threefold": ("term", "value")}


def emit_tables(report: RunReport, out_dir: str | os.PathLike, fmt: str = "csv") -> list[Path]:
    """Write the CSV tables (headers only when a table is absent) and/or ``report.json``."""
    out = Path(out_dir)
    written = []
    out.mkdir(parents=True, exist_ok=True)
    if fmt in ("json", "both"):
        p = out / "report.json"
        p.write_bytes(report_bytes(report))
        written.append(p)
        t = out / "timing.json"
        t.write_text(json.dumps({k: report.timings[k] for k in report.timings}, indent=2) + "\n")
        written.append(t)
    if fmt in ("csv", "both"):
        rows = {}
        for res in report.checks.values():
            rows.update(res.tables)
        for name, header in TABLE_HEADERS.items():
            p = out / f"{name}.csv"
            with open(p, "w", newline="", encoding="utf-8") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for a, b in rows.get(name, []):
                    w.writerow([a, repr(float(b))])
            written.append(p)
    return written


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hermvol", description="Run Monge-Ampere volume checks on a Hermitian metric.")
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--check", action="append", choices=CHECKS, help="check to run (repeatable; overrides config)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--grid", type=int, help="comparison grid points per real axis")
    p.add_argument("--bandwidth-cap", type=int)
    p.add_argument("--tol-scale", type=float)
    p.add_argument("--format", choices=FORMATS)
    return p


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    path = args.config or _env("CONFIG")
    data = load_config(path) if path else {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)

    def pick(flag, env, conv):
        if flag is not None:
            return flag
        raw = _env(env)
        if raw is None:
            return None
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {ENV_PREFIX}{env}: {raw!r}") from exc

    checks = args.check or (pick(None, "CHECK", lambda s: [c.strip() for c in s.split(",") if c.strip()]))
    if checks:
        data["checks"] = checks
    for key, flag, env, conv in (("seed", args.seed, "SEED", int), ("grid", args.grid, "GRID", int),
                                 ("bandwidth_cap", args.bandwidth_cap, "BANDWIDTH_CAP", int)):
        v = pick(flag, env, conv)
        if v is not None:
            data[key] = v
    scale = pick(args.tol_scale, "TOL_SCALE", float)
    if scale is not None:
        data["tolerances"] = {**data.get("tolerances", {}), "scale": scale}
    out = {}
    d = pick(args.out, "OUT", str)
    if d is not None:
        out["dir"] = d
    f = pick(args.format, "FORMAT", str)
    if f is not None:
        out["format"] = f
    if out:
        data["output"] = {**data.get("output", {}), **out}
    return ScenarioConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        report = run(cfg)
    except ConfigError as exc:
        print(f"hermvol: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BandwidthOverflow as exc:
        print(f"hermvol: bandwidth overflow: {exc}", file=sys.stderr)
        return EXIT_BANDWIDTH
    except (CapabilityError, BackendMismatch) as exc:
        print(f"hermvol: capability mismatch: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    try:
        emit_tables(report, cfg.output["dir"], cfg.output["format"])
    except OSError as exc:
        print(f"hermvol: cannot write output: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    for name, res in report.checks.items():
        print(f"{name:13s} {_summary(name, res.data)}")
    if report.problems:
        for p in report.problems:
            print(f"INCONSISTENT {p}", file=sys.stderr)
        return EXIT_INCONSISTENT
    return EXIT_OK


def _summary(name: str, data: dict) -> str:
    if name == "conditions":
        return " ".join(f"{k}={c['verdict']}" for k, c in data["conditions"].items())
    if name == "witness":
        return data["status"] + (f" gap={data['gap']:.6g}" if "gap" in data else "")
    if name == "expansion":
        return "coefficients " + ", ".join(f"{c:.6g}" for c in data["fitted"])
    if name == "comparison":
        return f"{data['verdict']} worst violation {data['defect']:.3g}"
    if name == "product":
        return f"factor iii {data['factor_iii']['verdict']}, product iii {data['product_iii']['verdict']}"
    if name == "remark2":
        return f"residual {data['residual']:.3g}, integral sum {data['integral_sum']:.3g}"
    if name == "threefold":
        return f"T3 {data['T3']:.3g}, ok={data['ok']}"
    if name == "polarization":
        return f"polarized k={data['k']} {data['polarized']:.6g}"
    return ""


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
