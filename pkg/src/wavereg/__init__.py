"""Hyperbolic Chui-Wang wavelet regression for scattered data from arbitrary
product densities, with CDF/KDE transforms onto the torus and ANOVA-based
sensitivity analysis."""

__version__ = "0.1.0"

from .basis import IndexSet, WaveletIndex, anova_class, build_index_set, eval_basis
from .gram import gram_restricted, gram_torus, level_gram
from .kde import (
    EstimatedTransform,
    bandwidth_dpi,
    bandwidth_rot,
    boundary_kde,
    estimate_transform,
)
from .regression import (
    KdePlan,
    RegressionModel,
    SparseDesignMatrix,
    assemble,
    design_condition,
    fit,
    lsqr,
)
from .sensitivity import (
    SensitivityReport,
    active_set,
    effective_dimension,
    gsi,
    term_variance,
)
from .splines import bspline, chui_wang_coefficients, chui_wang_wavelet, psi_m
from .transforms import (
    DomainKind,
    ProductTransform,
    Transform1D,
    default_eta,
    density_by_name,
)

__all__ = [
    "__version__",
    "IndexSet",
    "WaveletIndex",
    "anova_class",
    "build_index_set",
    "eval_basis",
    "gram_restricted",
    "gram_torus",
    "level_gram",
    "EstimatedTransform",
    "bandwidth_dpi",
    "bandwidth_rot",
    "boundary_kde",
    "estimate_transform",
    "KdePlan",
    "RegressionModel",
    "SparseDesignMatrix",
    "assemble",
    "design_condition",
    "fit",
    "lsqr",
    "SensitivityReport",
    "active_set",
    "effective_dimension",
    "gsi",
    "term_variance",
    "bspline",
    "chui_wang_coefficients",
    "chui_wang_wavelet",
    "psi_m",
    "DomainKind",
    "ProductTransform",
    "Transform1D",
    "default_eta",
    "density_by_name",
]
