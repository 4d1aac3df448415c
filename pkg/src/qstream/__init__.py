"""Query-bounded online learning laboratory.

Continuous side: exact mistake integrals, the uniform-sampling learner with
a standard-optimal predictor, the adaptive decode-and-follow learner, and
the adversarial stream constructions they are measured against.  Discrete
side: exact solvers for blind prediction under a query budget, with an
independent minimax oracle and replayable strategy witnesses.
"""

from .adversaries import (
    decode_reveal_token,
    encode_reveal_token,
    exact_blind_error,
    gen_littlestone_branch_stream,
    gen_self_revealing_stream,
    gen_two_point_stream,
)
from .arena import (
    EpochError,
    MonteCarloStats,
    PredictorTrace,
    QueryEvent,
    RunReport,
    mistake_integral,
    monte_carlo_uniform,
    run_adaptive_sampler,
    run_uniform_sampler,
)
from .blind import (
    BlindStrategy,
    ConstantVectorStrategy,
    DimensionWitness,
    blind_learning_dimension,
    bp_soa_strategy,
    game_value,
    qld,
    restrict_patterns,
    validate_witness_tree,
    worst_case_mistakes,
)
from .littlestone import (
    ShatteredTree,
    VersionSpace,
    build_littlestone_tree,
    littlestone_dimension,
    restrict,
    soa_predict,
    soa_run,
)
from .model import (
    BudgetViolationError,
    ConceptClass,
    DiscretePattern,
    InstanceSpace,
    LabelVector,
    MalformedTokenError,
    NonRealizableError,
    PatternClass,
    PiecewiseStream,
    QstreamError,
    QueryBudgetPolicy,
    Segment,
    UnknownInstanceError,
    as_fraction,
    project_labels,
    validate,
)

__version__ = "0.1.0"
