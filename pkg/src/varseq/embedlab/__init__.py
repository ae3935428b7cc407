"""Numerical laboratory for embeddings between variable-exponent sequence spaces."""

from .estimate import (ConstantEstimate, EmbeddingCase, HypothesisReport, TruncationNote,
                       counterexample_search, embedding_ratio, estimate_constant, fit_growth,
                       make_case, sobolev_check, trial_seed)
from .generators import FAMILIES, GeneratorFamily, family_ids, get_family
from .proofs import (AuxReport, FrankeTerms, FrankeVariableReport, JawerthReport,
                     NormalizationError, aux_constant_bound, check_aux_inequality, default_beta,
                     franke_terms, franke_variable_check, jawerth_chain, jawerth_epsilon)

__all__ = [
    "AuxReport", "ConstantEstimate", "EmbeddingCase", "FAMILIES", "FrankeTerms",
    "FrankeVariableReport", "GeneratorFamily", "HypothesisReport", "JawerthReport",
    "NormalizationError", "TruncationNote", "aux_constant_bound", "check_aux_inequality",
    "counterexample_search", "default_beta", "embedding_ratio", "estimate_constant",
    "family_ids", "fit_growth", "franke_terms", "franke_variable_check", "get_family",
    "jawerth_chain", "jawerth_epsilon", "make_case", "sobolev_check", "trial_seed",
]
