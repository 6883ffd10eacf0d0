"""Determinant-anomaly functionals and inequality verifiers on the round sphere and circle."""

from .anomaly import (
    AnomalyResult,
    anomaly_dual_check,
    anomaly_general,
    anomaly_gradient,
    anomaly_radial,
    radial_anomaly_result,
)
from .bounds import (
    Lemma3Constants,
    Lemma3Report,
    crossing_points,
    fontana_functional,
    holder_bound_check,
    lemma3_coefficient,
    lemma3_lhs,
    lemma3_report,
    lemma3_threshold,
    mt_deficit,
)
from .errors import (
    AccuracyError,
    DegenerateMetricError,
    DivergenceError,
    DomainError,
    QuadratureError,
    UnknownFamilyError,
    WindowError,
)
from .geometry import (
    BundleDegree,
    RadialProfile,
    SphereField,
    dirichlet_energy,
    l2_orthonormal_basis,
    lift,
    mean_normalize,
    pointwise_gram,
    rho,
    rho_i,
)
from .optimizer import SearchConfig, SearchTrace, profile_family, search_sup
from .rearrangement import (
    HalfLineFunction,
    decreasing_rearrangement,
    monotone_envelope,
)
from .spectral import (
    CircleMetric,
    circle_anomaly_formula,
    circle_det,
    circle_eig_check,
)

__version__ = "0.1.0"
