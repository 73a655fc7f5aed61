"""Finite sections of Toeplitz and almost periodic band operators.

A numerical laboratory for Szego-type limit behaviour: section determinant
ratios, strong Szego constants, eigenvalue and singular value distribution
means, distinguished section-size sequences from continued fractions, and
Folner trace estimates.
"""

from .numkernel import (
    DenseMatrix,
    LogDet,
    eigvals_general,
    eigvals_hermitian,
    lu_logdet,
    singular_values,
    solve,
)
from .symbols import (
    LogSymbolData,
    TrigPolynomial,
    evaluate,
    geometric_mean,
    log_coefficients,
    strong_szego_constant,
    symbol_average,
    winding_number,
)
from .almostperiodic import (
    APFunction,
    ContinuedFraction,
    DistinguishedSequence,
    distinguished_sequence,
    empirical_mean,
    eval_ap,
    expand_cf,
    mean_value,
    shift_defect,
)
from .operators import (
    AlmostMathieuParams,
    APMultiplier,
    BandAPOperator,
    CompositeOperator,
    ProjectionP,
    ToeplitzFactor,
    almost_mathieu,
    band_ap_section,
    composite_sections,
    flip_section,
    main_diagonal,
    reversed_section,
    toeplitz_section,
)
from .szego import (
    SpectrumSample,
    SzegoReport,
    TestFunction,
    cluster_partial_limits,
    det_ratio_sequence,
    det_ratio_via_cramer,
    eigen_mean,
    eigen_sample,
    folner_discrepancy,
    g_limit_constant,
    limit_prediction,
    singular_mean,
    singular_sample,
    stability_probe,
    strong_szego_ratio,
)

__version__ = "0.1.0"
