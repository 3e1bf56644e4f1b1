from .search import SampleSet, SearchConfig, SearchSpace, hill_climb, op_delta, op_f, score
from .smt_learner import SynthesisParams, decode_model, encode, synthesize, validate_consistency

__all__ = [
    "SampleSet",
    "SearchConfig",
    "SearchSpace",
    "SynthesisParams",
    "decode_model",
    "encode",
    "hill_climb",
    "op_delta",
    "op_f",
    "score",
    "synthesize",
    "validate_consistency",
]
