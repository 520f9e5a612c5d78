"""weylab: desk-scale laboratory for Weyl calculus and dispersive smoothing estimates."""

from .grid import (
    Field,
    Grid,
    SpectralField,
    apply_bessel,
    gaussian_wavepacket,
    inverse,
    l2_norm,
    make_grid,
    sobolev_norm,
    transform,
    weighted_pairing,
)
from .symbol import (
    SampleSet,
    Symbol,
    SympySymbol,
    VectorFieldSystem,
    build_kdv_type,
    catalog,
    catalog_names,
    check_grad_ellipticity,
    check_im_smallness,
    check_x_decay,
    seminorm_estimate,
)
from .calculus import (
    DenseOperator,
    apply_fast,
    change_quantization,
    compose_symbols,
    poisson_bracket,
    positivity_diagnostic,
    quantize_dense,
)
from .weights import (
    DoiWeight,
    GardingWeight,
    WeightFn,
    admissibility_report,
    doi_slack,
    doi_weight,
    exp_weight_operators,
    garding_weight,
    hamilton_slack,
)
from .hamilton import (
    Trajectory,
    classify_strong_ellipticity,
    hamiltonian_field,
    integrate_bicharacteristic,
    qdelta_monotonicity,
    trapping_probe,
)
from .evolve import (
    Solution,
    WrapGuardError,
    smoothing_report,
    solve_linear,
    weighted_propagator_probe,
    wrap_guard,
)
from .nonlinear import (
    NonlinearitySpec,
    PicardDivergenceError,
    direct_nonlinear_solve,
    nonlinearity_eval,
    picard_solve,
    xts_norm,
)
from .appendix_checks import lemmatec1_residual, lemmatec3_scan

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "Field",
    "SpectralField",
    "make_grid",
    "transform",
    "inverse",
    "apply_bessel",
    "sobolev_norm",
    "l2_norm",
    "weighted_pairing",
    "gaussian_wavepacket",
    "Symbol",
    "SympySymbol",
    "SampleSet",
    "catalog",
    "catalog_names",
    "VectorFieldSystem",
    "build_kdv_type",
    "check_grad_ellipticity",
    "check_x_decay",
    "check_im_smallness",
    "seminorm_estimate",
    "DenseOperator",
    "quantize_dense",
    "apply_fast",
    "compose_symbols",
    "change_quantization",
    "poisson_bracket",
    "positivity_diagnostic",
    "WeightFn",
    "GardingWeight",
    "DoiWeight",
    "garding_weight",
    "hamilton_slack",
    "doi_weight",
    "doi_slack",
    "exp_weight_operators",
    "admissibility_report",
    "Trajectory",
    "hamiltonian_field",
    "integrate_bicharacteristic",
    "classify_strong_ellipticity",
    "trapping_probe",
    "qdelta_monotonicity",
    "Solution",
    "solve_linear",
    "smoothing_report",
    "weighted_propagator_probe",
    "wrap_guard",
    "WrapGuardError",
    "NonlinearitySpec",
    "nonlinearity_eval",
    "picard_solve",
    "direct_nonlinear_solve",
    "xts_norm",
    "PicardDivergenceError",
    "lemmatec1_residual",
    "lemmatec3_scan",
]
