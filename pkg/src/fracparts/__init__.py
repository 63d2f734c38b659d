"""Exact-enclosure experiments on sums of reciprocals of fractional parts."""

from .alpha import AlphaVector, parse_alpha, render_alpha
from .bounds import evaluate_bounds, fit_theorem_constants, shell_difference_check
from .errors import (
    FracPartsError,
    InvariantViolation,
    MissingPhi2Q,
    PairCapExceeded,
    ParseError,
    PrecisionExhausted,
    Resonance,
)
from .lattice import (
    LatticeInstance,
    cardinality_bridge,
    count_M,
    enumerate_M,
    mu,
    nu,
    verify_prop_bound,
    widmer_instance_check,
)
from .phi import compute_phi_table, phi_at, sharpness_sequence, verify_phi_badly_approximable
from .realnum import (
    DecimalLiteral,
    PrecisionBudget,
    QuadraticSurd,
    Rational,
    decide,
    dist_nearest_int,
    eval_real,
    inner_product,
)
from .sums import BoxSpec, dyadic_profile, sandwich_check, sum_reciprocals, verify_gap_principle

__version__ = "0.1.0"
