"""Block-bootstrap tests for equal lag-zero autocovariance operators of functional time series."""

__version__ = "0.1.0"

from .fcore import (  # noqa: E402
    Curve,
    FunctionalSeries,
    Grid,
    GridMismatchError,
    KernelOperator,
    hs_inner,
    hs_norm,
    inner_product,
    kernel_linear_combine,
    l2_norm,
    make_grid,
    tensor_product,
)
from .autocov import (  # noqa: E402
    InvalidLagError,
    TensorSequence,
    empirical_autocov,
    sample_mean_curve,
    squared_difference_kernel,
    tensor_sequence,
)
from .mbb import (  # noqa: E402
    BlockPlan,
    RngSeed,
    bootstrap_autocov,
    mbb_clt_sample,
    mbb_expectation,
    mbb_resample,
)
from .eqtest import (  # noqa: E402
    TestConfig,
    TestReport,
    default_block_size,
    null_pseudo_sample,
    pooled_mean,
    rolling_block_means,
    run_test,
    statistic_tm,
    statistic_tm_multi,
)
