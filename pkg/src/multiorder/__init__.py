"""Multi-order interaction analysis for small classifiers.

Measure how strongly a model encodes pairwise interactions at each contextual
complexity (order), explain the resulting strength profile with closed-form
training-strength curves, steer it with order-band training losses, and probe
the consequences with structural masking and adversarial attacks.
"""

from .errors import CapacityError, ConfigError, NumericError
from .games import (
    AdditiveGame,
    Coalition,
    Game,
    MaskedModelGame,
    PairwiseAndGame,
    ParityGame,
    TableGame,
    delta_v,
    log_odds,
    mask_input,
    subsets_of_size,
)
from .exact import (
    EfficiencyComponents,
    InteractionMatrix,
    all_pair_interactions,
    delta_v_pair,
    efficiency_decomposition,
    interaction_exact,
    interaction_matrix,
    interactions_for_pair,
    shapley_interaction_index,
    shapley_value_exact,
    shapley_values,
    theorem2_rhs,
)
from .theory import (
    FitResult,
    Theorem1Result,
    TheoryCurve,
    efficiency_weight,
    fit_effective_dimension,
    normalized_curve,
    simulate_theorem1,
    theorem2_weight,
    training_strength_F,
)

__version__ = "0.1.0"
