"""Conditional entanglement of mutual information: bounds, merging flows and verification suites."""

from . import conditioning, entropy, io, merging, optimize, tensor, verify
from ._accel import backend
from .conditioning import (
    Extension,
    Party,
    asym_conditioned,
    cemi_objective,
    convex_flag_extension,
    esq_objective,
    extension,
    multipartite_cemi_objective,
    product_extension,
    separable_flag_extension,
    sym_conditioned,
    trivial_extension,
)
from .entropy import (
    Partition,
    binary_entropy,
    conditional_entropy,
    conditional_mi,
    holevo,
    multipartite_mi,
    mutual_information,
    subsystem_entropy,
    vn_entropy,
)
from .errors import CemiError, InvariantError, LayoutError
from .optimize import (
    AnsatzDims,
    BoundReport,
    OptimizerConfig,
    cemi_upper_bound,
    esq_upper_bound,
    multipartite_cemi_upper_bound,
)
from .tensor import (
    DensityMatrix,
    Ensemble,
    KrausInstrument,
    PureStateVector,
    SubsystemLayout,
    apply_instrument,
    bell_state,
    classical_correlated,
    dilate_instrument,
    ghz_state,
    partial_trace,
    purify,
    random_density,
    random_instrument,
    random_pure,
    random_unitary,
    tensor as tensor_product,
)

__version__ = "0.1.0"
