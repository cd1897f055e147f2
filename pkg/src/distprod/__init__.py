"""Regularized products of one-dimensional distributions.

Two regularizations are provided: analytic (Cauchy transform / Poisson
kernel) and mollification by delta sequences. Products are evaluated at
finite regularization index ``n`` and their ``n -> inf`` limits are
classified and compared with closed-form predictions.
"""

from . import analytic_reg
from .analytic_reg import (
    Epsilon,
    NonRealDomain,
    cauchy_transform,
    poisson,
    poisson_derivative,
    poisson_smoothing,
)
from .closedform import (
    Prediction,
    predict_continuous_extension,
    predict_method1_equal_deltas,
    predict_method2_equal_deltas,
    predict_pair_derivatives,
    required_m_pair,
)
from .distributions import (
    CompactFunction,
    DeltaDerivative,
    TestFunction,
    analytic,
    compact_from_csv,
    hat,
    mollify,
    pair,
    standard_test_functions,
    test_function,
)
from .extrapolation import GrowthFit, LimitVerdict, aitken, classify_limit, fit_growth
from .kleingordon import (
    KGConfig,
    ModeAmplitude,
    analytic_smearing_residual,
    delta_plus_equal_time,
    divergence_study,
    i_n,
    i_n_lower_bound,
    kernel_integral,
    mollifier_smearing_residual,
    omega,
)
from .mollifier import (
    DeltaFamily,
    DivergentConstant,
    FourierBumpSpec,
    MollifierSpec,
    a_constant,
    default_bump,
    dirichelet_check,
    make_mollifier,
    mollifier_from_fourier,
    phi_fourier,
)
from .products import (
    AWeights,
    NSchedule,
    RegParams,
    amethod,
    amethod_term,
    nfold_method1,
    nfold_method1_term,
    pair_product,
    pair_term,
)
from .quadrature import NoConvergence, QuadResult, integrate, integrate_semi_infinite

__all__ = sorted(k for k, v in globals().items()
                 if not k.startswith("_") and not isinstance(v, type(analytic_reg)))
__version__ = "0.1.0"
