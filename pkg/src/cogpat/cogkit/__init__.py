"""Cognitive algorithm instantiations over metagraph snapshots: uncertain
inference (forward and backward chaining), agglomerative clustering, pattern
mining, evolutionary search, and economic attention spreading."""

from .pln import (
    PlnError,
    SingularityError,
    cwig,
    deduction,
    induction,
    inversion,
)
from .chain import (
    Bid,
    BidNode,
    ChainResult,
    Rule,
    backward_chain_tv,
    deduction_rule,
    forward_chain,
    implication_kb,
    inversion_rule,
    rule_roundtrip_audit,
)
from .cluster import (
    Clustering,
    agglomerate,
    logical_entropy,
    partition_quality,
)
from .mine import (
    MinedPattern,
    Pattern,
    clause_frequency,
    conj,
    disj,
    mine_patterns,
    pattern_frequency,
    pattern_surprisingness,
    pattern_to_metagraph,
)
from .evolve import EvolveResult, evolve, one_max, point_mutation, uniform_crossover
from .ecan import EcanResult, ecan_run

__all__ = [
    "PlnError", "SingularityError", "cwig", "deduction", "induction", "inversion",
    "Bid", "BidNode", "ChainResult", "Rule", "backward_chain_tv",
    "deduction_rule", "forward_chain", "implication_kb", "inversion_rule",
    "rule_roundtrip_audit",
    "Clustering", "agglomerate", "logical_entropy", "partition_quality",
    "MinedPattern", "Pattern", "clause_frequency", "conj", "disj",
    "mine_patterns", "pattern_frequency", "pattern_surprisingness",
    "pattern_to_metagraph",
    "EvolveResult", "evolve", "one_max", "point_mutation", "uniform_crossover",
    "EcanResult", "ecan_run",
]
