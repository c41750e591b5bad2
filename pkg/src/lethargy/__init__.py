"""Constructive realization of prescribed best-approximation decay.

Given a sequence-space model with a computable metric functional, a nested
chain of coordinate subspaces, and a decreasing positive null target
sequence, this package builds finite elements whose distances to the chain
levels either match the targets exactly (rapidly decreasing case) or stay
within a factor of 2 or 3 of them (general case), and re-verifies every
certificate independently.
"""

from .chain import (
    ChainSpec,
    DnvEstimate,
    SeminormBound,
    SetChainSpec,
    distance,
    distance_bruteforce,
    dnv_estimate,
    dv_infimum,
    dv_lower_bound_seminorms,
    r_of_chain,
)
from .constructor import (
    Checkpoint,
    ConstructionTrace,
    LevelRecord,
    SandwichResult,
    ShapiroResult,
    TyuremskikhResult,
    ball_chain_distance,
    construct_exact,
    construct_hilbert_exact,
    construct_sandwich,
    construct_wn,
    ivt_smallest_t,
    net_zn,
    select_vn,
    setchain_distance,
    shapiro_witness,
    tyuremskikh_witness,
)
from .errors import (
    BracketError,
    ChainError,
    ConfigError,
    DegenerateChainError,
    DimensionTooLargeError,
    DivergenceRiskError,
    InfeasibleTargetError,
    InvalidSpecError,
    LethargyError,
    ScanLimitError,
    SequenceError,
    SummabilityError,
    ToleranceError,
    UnsupportedSpecError,
)
from .seqtools import (
    DeltaSchedule,
    ExplicitSeq,
    GeometricSeq,
    HarmonicSeq,
    PerturbedSeq,
    PowerSeq,
    RescaleResult,
    ScaledSeq,
    SequenceSpec,
    b_series,
    check_rapid,
    delta_select,
    lemma_ineq_check,
    lemma_ineq_slack,
    perturb_borodin,
    rescale,
    seq_validate,
    sqrt_sequence,
)
from .space import (
    AxiomReport,
    CompositeBounded,
    FNormSpec,
    Homogeneous,
    SConvex,
    Seminorm,
    SeminormFamily,
    Vector,
    fnorm_axiom_check,
    fnorm_eval,
)
from .verify import (
    EquivalenceReport,
    LethargyReport,
    equivalence_dv_test,
    verify_ballchain,
    verify_exact,
    verify_sandwich,
    verify_setchain,
)

__version__ = "0.1.0"
