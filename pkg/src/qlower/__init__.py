"""Exact construction, lowering, and evaluation of quantized feedforward
networks, plus certified piecewise-constant approximation of Hoelder
functions on the unit cube."""

from .approx import (
    ApproximatorBundle,
    GridSpec,
    HolderFunctionSpec,
    approximate_continuous,
    build_approximator,
    build_readout,
    build_selector_matrix,
    build_threshold_matrix,
    bundle_from_network,
    cell_index,
    choose_resolution,
    evaluate_implicit,
)
from .errors import (
    CapacityError,
    DimensionError,
    DomainError,
    ParseError,
    QlowerError,
)
from .harness import (
    EquivalenceReport,
    ErrorReport,
    builtin_targets,
    check_holder,
    equivalence_check,
    random_network,
    report_rows,
    sup_error,
    write_report_csv,
)
from .lowering import (
    LoweringCertificate,
    TheoremBoundParams,
    TheoremBoundReport,
    binarize,
    binary_prefix,
    decompose_binary,
    decompose_ternary,
    ternarize,
    ternary_prefix,
    theorem_bounds,
    to_unit_weights,
)
from .network import (
    ActivationKind,
    Network,
    SparsityReport,
    ValidationReport,
    WeightMatrix,
    WeightSet,
    deserialize,
    evaluate,
    forward_trace,
    load_network,
    network_from_dict,
    network_to_dict,
    save_network,
    serialize,
    sparsity,
    validate,
)
from .rationals import as_rational, format_rational

__version__ = "0.1.0"

__all__ = [
    "ActivationKind",
    "ApproximatorBundle",
    "CapacityError",
    "DimensionError",
    "DomainError",
    "EquivalenceReport",
    "ErrorReport",
    "GridSpec",
    "HolderFunctionSpec",
    "LoweringCertificate",
    "Network",
    "ParseError",
    "QlowerError",
    "SparsityReport",
    "TheoremBoundParams",
    "TheoremBoundReport",
    "ValidationReport",
    "WeightMatrix",
    "WeightSet",
    "approximate_continuous",
    "as_rational",
    "binarize",
    "binary_prefix",
    "build_approximator",
    "build_readout",
    "build_selector_matrix",
    "build_threshold_matrix",
    "builtin_targets",
    "bundle_from_network",
    "cell_index",
    "check_holder",
    "choose_resolution",
    "decompose_binary",
    "decompose_ternary",
    "deserialize",
    "equivalence_check",
    "evaluate",
    "evaluate_implicit",
    "format_rational",
    "forward_trace",
    "load_network",
    "network_from_dict",
    "network_to_dict",
    "random_network",
    "report_rows",
    "save_network",
    "serialize",
    "sparsity",
    "sup_error",
    "ternarize",
    "ternary_prefix",
    "theorem_bounds",
    "to_unit_weights",
    "validate",
    "write_report_csv",
]
