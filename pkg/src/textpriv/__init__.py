"""Text privatization by token-level randomized rewriting.

The pipeline: a logits provider (toy n-gram model, canned fixture, or a
remote model server) proposes next-token scores, a configurable mechanism
samples from them (clipped temperature sampling for the private modes),
and an evaluation harness measures what survived (semantic similarity,
lexical overlap) against what leaked (attribute-inference attacks).
"""

from .mechanism import (
    DEFAULT_CLIP_BOUNDS,
    DEFAULT_SENSITIVITY,
    SamplerConfig,
    bounds_sensitivity,
    clip_logits,
    epsilon_from_temperature,
    estimate_clip_bounds,
    exponential_mechanism_distribution,
    sample_index,
    select_token,
    softmax_with_temperature,
    temperature_from_epsilon,
    token_distribution,
    top_k_filter,
    top_k_indices,
)
from .lm import FixtureProvider, LocalProvider, NgramLm, Vocabulary, detokenize, tokenize
from .rewriter import (
    LocalProviderFactory,
    RewriteRecord,
    build_prompt,
    composed_epsilon,
    derive_seed,
    generate_ids,
    rewrite,
    rewrite_corpus,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CLIP_BOUNDS",
    "DEFAULT_SENSITIVITY",
    "SamplerConfig",
    "bounds_sensitivity",
    "clip_logits",
    "epsilon_from_temperature",
    "estimate_clip_bounds",
    "exponential_mechanism_distribution",
    "sample_index",
    "select_token",
    "softmax_with_temperature",
    "temperature_from_epsilon",
    "token_distribution",
    "top_k_filter",
    "top_k_indices",
    "FixtureProvider",
    "LocalProvider",
    "NgramLm",
    "Vocabulary",
    "detokenize",
    "tokenize",
    "LocalProviderFactory",
    "RewriteRecord",
    "build_prompt",
    "composed_epsilon",
    "derive_seed",
    "generate_ids",
    "rewrite",
    "rewrite_corpus",
    "__version__",
]
