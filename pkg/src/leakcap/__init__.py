"""Coherent information, degradability certificates and two-letter
non-additivity for a family of qutrit leakage channels."""

from .qmath import DensityOperator, Spectrum, hermitian_eig, partial_trace, partial_transpose, tensor, von_neumann_entropy
from .channels import (
    LAMBDA_0,
    LAMBDA_1,
    ChannelPair,
    ChoiMatrix,
    DegradingFamily,
    DegradingMapSpec,
    IsometrySpec,
    apply,
    build_b,
    build_b1,
    build_degrading,
    certify_degradability,
    choi,
    choi_distance,
    compose,
    parallel,
    subchannel,
)
from .capacity import OptimizerConfig, entropy_bias, q1_curve, q1_diagonal, q1_general
from .nonadd import (
    TwoLetterAnsatz,
    PerturbationRay,
    asymptotic_delta_star,
    delta_star_curve,
    estimate_rate,
    maximize_delta_star,
    positivity_witness,
    singularity_rates,
    two_letter_bias,
)
from .entwit import ppt_test, tau_states

__version__ = "0.1.0"
