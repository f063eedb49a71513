"""Hermitian metrics whose Monge-Ampere volume is invariant under psh perturbation."""
__version__ = "0.1.0"

from .errors import BackendMismatch, BandwidthOverflow, CapabilityError, ConfigError, HermvolError
from .fields import CoframeConstant, FourierBackend, FourierField, PolyBackend, PolyField
from .exterior import Form, conjugate, is_real, omega_std, power, wedge
from .calculus import (StructureConstants, del_, delbar, exterior_d, i_ddbar, i_ddbar_form,
                       i_del_wedge_delbar, iwasawa)
from .manifolds import (HermitianMetric, ManifoldModel, SamplingSpec, integrate_top, is_positive_11,
                        is_weakly_positive_kk, model_from_name, nilmanifold, product, torus)
from .monge_ampere import (comparison_integrals, epsilon_expansion, ma_volume, mixed_term,
                           polarization_from_mixed, polarized_mixed_term, psh_epsilon0, psh_family,
                           threefold_decomposition)
from .characterize import (condition_i, condition_ii, condition_iii, condition_iv, condition_v,
                           condition_vi, equivalence_report, product_metric, remark2_identity,
                           theorem1_extraction, witness_search)
from .presets import conformal, flat, gauduchon_surface, iwasawa_standard, kahler_perturbed, metric_preset

__all__ = [
    "BackendMismatch",
    "BandwidthOverflow",
    "CapabilityError",
    "ConfigError",
    "HermvolError",
    "CoframeConstant",
    "FourierBackend",
    "FourierField",
    "PolyBackend",
    "PolyField",
    "Form",
    "conjugate",
    "is_real",
    "omega_std",
    "power",
    "wedge",
    "StructureConstants",
    "del_",
    "delbar",
    "exterior_d",
    "i_ddbar",
    "i_ddbar_form",
    "i_del_wedge_delbar",
    "iwasawa",
    "HermitianMetric",
    "ManifoldModel",
    "SamplingSpec",
    "integrate_top",
    "is_positive_11",
    "is_weakly_positive_kk",
    "model_from_name",
    "nilmanifold",
    "product",
    "torus",
    "comparison_integrals",
    "epsilon_expansion",
    "ma_volume",
    "mixed_term",
    "polarization_from_mixed",
    "polarized_mixed_term",
    "psh_epsilon0",
    "psh_family",
    "threefold_decomposition",
    "condition_i",
    "condition_ii",
    "condition_iii",
    "condition_iv",
    "condition_v",
    "condition_vi",
    "equivalence_report",
    "product_metric",
    "remark2_identity",
    "theorem1_extraction",
    "witness_search",
    "conformal",
    "flat",
    "gauduchon_surface",
    "iwasawa_standard",
    "kahler_perturbed",
    "metric_preset",
]
