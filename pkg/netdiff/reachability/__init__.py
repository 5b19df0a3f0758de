"""
Reachability package: structural prerequisites (stars, storing, richness)
and constructive trajectory synthesis with per-step certificates.
"""
from .structure import (
    ComplexStar,
    StoringFailure,
    StoringMap,
    check_richness,
    find_complex_stars,
    is_caterpillar,
    is_complex_star,
    is_k_regular,
    random_partial_configs,
    star_at,
    storing_by_parity,
    storing_function,
    twin_leaf_pairs,
)
from .synthesis import (
    build_trajectory,
    check_length_parity,
    find_witnesses,
    probability_lower_bound,
    realize_trajectory,
    synth_centrage,
    synth_propagate,
    synth_star,
    synth_store,
    validate_trajectory,
)

__all__ = [
    'ComplexStar', 'StoringFailure', 'StoringMap', 'check_richness', 'find_complex_stars', 'is_caterpillar',
    'is_complex_star', 'is_k_regular', 'random_partial_configs', 'star_at', 'storing_by_parity',
    'storing_function', 'twin_leaf_pairs', 'build_trajectory', 'check_length_parity', 'find_witnesses',
    'probability_lower_bound', 'realize_trajectory', 'synth_centrage', 'synth_propagate', 'synth_star', 'synth_store',
    'validate_trajectory',
]
