"""Bergman-space denseness: Delta transform, nested intervals, divergence and twists."""
from .delta import (
    TruncatedExpPoly,
    delta_exact,
    delta_transform,
    exact_moments,
    log10_tail_bound,
    markov_bound,
    poly_max_abs,
    stirling_tail_estimate,
    truncated_exp_poly,
)
from .divergence import DivergenceBlock, divergence_probe, shape_curve
from .domain import BergmanElement, QuadratureGrid, RectDomain, StripConfig, bergman_inner
from .intervals import (
    IntervalSelection,
    NestedIntervalResult,
    StageCheck,
    interval_select,
    locate_max,
    nested_interval_select,
)
from .twist import (
    TwistAssignment,
    TwistFitResult,
    greedy_twist_fit,
    h_norm_series,
    h_norms_sq,
    planted_targets,
    sup_error,
    tail_remainder_check,
    tail_remainder_terms,
    twisted_sum,
)

__all__ = [name for name in dir() if not name.startswith("_")]
