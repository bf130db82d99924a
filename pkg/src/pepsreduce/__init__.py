"""Exact PEPS contraction and its random self-reduction, with the permanent baseline."""
from .errors import (
    AllRepeatsFailedDecoding,
    ConfigInvalid,
    DecodingFailure,
    DegenerateSystem,
    DuplicateAbscissa,
    InsufficientSamples,
    IoError,
    MajorityTie,
    MixedFieldsError,
    NonFiniteInput,
    NonPositiveEpsilon,
    PepsReduceError,
    PointOutsideRadius,
    ReductionFailure,
    ShapeMismatch,
    SingularMatrix,
    SizeCapExceeded,
    SupportOutOfRange,
    ZeroDenominatorAtOne,
    ZeroNorm,
)
from .exact import QI, ComplexRational, PrimeField, PrimeFieldElement, snap_to_dyadic, solve_linear_system
from .peps import (
    LatticeSpec,
    LocalObservable,
    MpsData,
    PepsData,
    build_cluster_peps,
    eta_family_mps,
    product_state_mps,
)
from .contract import (
    build_state_vector,
    contract_nev,
    contract_nev_batch,
    contract_norm,
    contract_norm_batch,
    contract_uev,
    contract_uev_batch,
    mps_transfer_norm,
)
from .interpolation import (
    ExactPolynomial,
    RationalFunction,
    SampleSet,
    berlekamp_welch,
    reconstruct_rational,
    vandermonde_interpolate,
)
from .bounds import noisy_certificate, paturi_bound, rakhmanov_bound
from .reduction import (
    BlendPath,
    DistributionSpec,
    ReductionConfig,
    ReductionReport,
    blend,
    choose_sample_points,
    epsilon_for,
    majority_vote,
    reduce_exact,
    reduce_nev,
    reduce_noisy,
    reduce_uev,
    sample_peps_data,
)
from .oracle import FaultyOracle, OraclePolicy, make_faulty_oracle
from .permanent import LiptonConfig, SquareMatrix, lipton_reduce, permanent_bruteforce
from .experiment import ExperimentConfig, ExperimentReport, run_experiment

__version__ = "0.1.0"
