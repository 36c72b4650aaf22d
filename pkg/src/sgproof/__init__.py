"""Classification proofs for graded 4-nilpotent semigroups: constraint
propagation over candidate masks, cut-based proof trees, learned cut
policies, and certified minimal proof sizes."""

from .core import (FilterConfig, Position, Shape, Status, classify, covers,
                   demultiplex, full_position, half_ones_filter, multiplex,
                   position_from_text, position_to_text, possible,
                   profile_filter, stat, subset)
from .instances import (SigmaInstance, canonicalize, column_key, enumerate_sigma,
                        filter_config_for, initial_position, suggested)
from .minprover import MinimizeResult, MinProver, minimize
from .propagate import (Batch, modify_leftright_step, modify_prod_step,
                        modify_ternary_step, process, process_batch)
from .prooftree import (CutLocation, ProofNode, ProofResult, RandomizedPrefixPolicy,
                        RandomPolicy, available_cuts, benchmark_policy, make_cut,
                        run_proof, run_pruned_proof)

__version__ = "0.1.0"

__all__ = [
    "Shape", "FilterConfig", "Position", "Status",
    "stat", "multiplex", "demultiplex", "covers", "subset", "possible",
    "classify", "profile_filter", "half_ones_filter", "full_position",
    "position_to_text", "position_from_text",
    "Batch", "process", "process_batch", "modify_ternary_step",
    "modify_leftright_step", "modify_prod_step",
    "SigmaInstance", "column_key", "canonicalize", "enumerate_sigma",
    "suggested", "initial_position", "filter_config_for",
    "CutLocation", "ProofNode", "ProofResult", "available_cuts", "make_cut",
    "run_proof", "run_pruned_proof", "benchmark_policy", "RandomPolicy",
    "RandomizedPrefixPolicy",
    "MinProver", "MinimizeResult", "minimize",
    "__version__",
]
