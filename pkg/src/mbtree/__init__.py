"""Alpha-gamma growth trees: samplers, exact splitting laws, exhaustive
small-n oracles, dislocation-measure densities and Monte-Carlo limit checks."""

from .growth import ColouredTree, ModelParams, TreeGrower, colour_grow, crush, grow, grow_step, weights
from .laws import (
    DecrementMatrix,
    NormConstants,
    aldous_split,
    check_sampling_consistency,
    check_strong_consistency_pair,
    decrement,
    eppf_pd,
    eppf_pdstar,
    eppf_seq,
    norm_const,
    split_distribution,
    split_prob_alpha1,
    split_prob_seq,
)
from .oracle import ExactLaw, exact_coloured_law, exact_law
from .streams import RngStream, derive_stream
from .trees import LabelledTree, ParseError, canonical_code, parse, serialize

__version__ = "0.1.0"

__all__ = [
    "ColouredTree",
    "DecrementMatrix",
    "ExactLaw",
    "LabelledTree",
    "ModelParams",
    "NormConstants",
    "ParseError",
    "RngStream",
    "TreeGrower",
    "aldous_split",
    "canonical_code",
    "check_sampling_consistency",
    "check_strong_consistency_pair",
    "colour_grow",
    "crush",
    "decrement",
    "derive_stream",
    "eppf_pd",
    "eppf_pdstar",
    "eppf_seq",
    "exact_coloured_law",
    "exact_law",
    "grow",
    "grow_step",
    "norm_const",
    "parse",
    "serialize",
    "split_distribution",
    "split_prob_alpha1",
    "split_prob_seq",
    "weights",
]
