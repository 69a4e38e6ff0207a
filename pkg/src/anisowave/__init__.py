"""Orthogonal wavelet filterbanks for arbitrary integer dilation matrices.

Exact Smith factorizations turn any expansive integer dilation into a
diagonal of univariate scales; tensoring univariate orthogonal filters
over that diagonal and reindexing with the unimodular factor yields a
critically sampled QMF filterbank for the original dilation.  On top of
the banks sit cascade rendering of scaling/wavelet limit functions, a
multiple-multiresolution tree transform over sheared dilation families,
and directional slope resolution.
"""

from .dictionary import (
    FAMILIES,
    AnisoFilterBank,
    UnivariateQMFSet,
    build_bank,
    chui_lian_ternary,
    daubechies2,
    haar,
    moment_order,
    moment_order_nd,
    reproduction_check,
)
from .lattice import (
    DilationFamily,
    IntMatrix,
    RatMatrix,
    SmithFactorization,
    contractivity_bound,
    contractivity_bound_power,
    coset_representatives,
    determinant,
    dilation_family,
    inverse_unimodular,
    is_expansive,
    is_unimodular,
    smith_normal_form,
    smith_with_target,
    xi_inverse_closed_form,
    xi_product,
)
from .mmra import (
    DecompositionTree,
    MMRAConfig,
    SlopeDigits,
    analyze,
    build_config,
    decompose,
    orthant_config,
    reconstruct,
    slope_digits,
    slope_error,
    synthesize,
)
from .seqcore import (
    CoefSeq,
    Window,
    convolve,
    correlate,
    cross_qmf_residual,
    delta,
    downsample,
    qmf_residual,
    reindex,
    sample_polynomial,
    tensor,
    upsample,
)
from .subdivision import (
    SampledFunction,
    SubdivisionOp,
    cascade,
    conjugation_check,
    convergence_diagnostic,
    gram_check,
    joint_refinement_residual,
    multiple_limit,
    subdivide,
    wavelet_samples,
)

__version__ = "0.1.0"
