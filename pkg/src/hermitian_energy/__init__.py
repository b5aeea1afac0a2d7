"""Mabuchi and Aubin-Yau energies on Hermitian (non-Kähler) complex tori.

Four layers:

* ``exact``        exact rational bookkeeping of the coefficient systems
* ``spectral``     band-limited fields and the (p,q)-form algebra on the torus
* ``scenarios``    metrics, admissible potentials, paths and quadrature rules
* ``functionals``  the energies themselves and the identity suites

``cli`` wraps them in a config-driven command line harness.
"""

from .exact import (
    CoefficientVector,
    GaussianRational,
    ay_constants,
    ay_closed_forms,
    c2_solution,
    closed_form,
    mabuchi_weights,
    recursion_expand,
)
from .functionals import (
    cocycle_check,
    err_term,
    i_ay,
    identity_suite_s3,
    inequality_report,
    intermediates,
    j_ay,
    mabuchi_explicit,
    mabuchi_path,
    mabuchi_two_point,
    proof_identity_suite_s2,
    shift_laws,
    volume,
)
from .scenarios import (
    admissible_potential,
    default_grid,
    gauss_legendre,
    make_metric,
    make_path,
    minimal_resolution,
)
from .spectral import AliasRisk, Form, GridSpec, ScalarField

__version__ = "0.1.0"

__all__ = [
    "AliasRisk",
    "CoefficientVector",
    "Form",
    "GaussianRational",
    "GridSpec",
    "ScalarField",
    "admissible_potential",
    "ay_closed_forms",
    "ay_constants",
    "c2_solution",
    "closed_form",
    "cocycle_check",
    "default_grid",
    "err_term",
    "gauss_legendre",
    "i_ay",
    "identity_suite_s3",
    "inequality_report",
    "intermediates",
    "j_ay",
    "mabuchi_explicit",
    "mabuchi_path",
    "mabuchi_two_point",
    "mabuchi_weights",
    "make_metric",
    "make_path",
    "minimal_resolution",
    "proof_identity_suite_s2",
    "recursion_expand",
    "shift_laws",
    "volume",
]
