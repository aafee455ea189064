"""Dirichlet Laplacian spectra, Riesz means and spectral shape optimization on convex domains."""

__version__ = "0.1.0"

from .errors import (
    AccuracyError,
    ContractError,
    NumericError,
    OptimizationError,
    ResourceError,
    ShapelabError,
    ValidationError,
)
from .geometry import (
    BoxDomain,
    ConvexPolygon,
    DiskDomain,
    GeometrySummary,
    geometry_summary,
    hausdorff_distance,
    read_polygon,
    regular_mgon,
    rigid_align,
    write_polygon,
)
from .spectra import Spectrum, box_spectrum, disk_spectrum, exact_spectrum, union_spectrum
from .fem import TriangleMesh, fem_spectrum, triangulate
from .riesz import (
    RieszQuery,
    RieszValue,
    aizenman_lieb_check,
    eigenvalue_sum,
    legendre_identity_check,
    riesz_mean,
    sum_equivalence_check,
)
from .inequalities import (
    InequalityReport,
    berezin_check,
    builtin_corpus,
    hersch_protter_check,
    improved_berezin_check,
    improved_li_yau_check,
    li_yau_check,
    run_suite,
    weyl_residual,
)
from .shape_opt import (
    FamilySpec,
    OptimizationResult,
    convergence_study,
    evaluate_candidate,
    optimize,
    sum_minimization_study,
)

__all__ = [name for name in dir() if not name.startswith("_")]
