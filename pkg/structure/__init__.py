"""
Structural-role proximity between nodes.

Provides:
- ring_sequences: sorted degree sequences per hop
- struct_distance: multi-hop DTW distance over ring sequences
- mine_pairs / brute_force_pairs: top-kappa structurally similar pairs
- write_pairs / read_pairs: TSV pair files with a JSON summary
"""

from structure.dtw import dtw_distance, dtw_lower_bound, struct_distance, struct_lower_bound
from structure.pairs import (
    PairSet,
    StructPairConfig,
    brute_force_pairs,
    candidate_pairs,
    mine_pairs,
    read_pairs,
    write_pairs,
)
from structure.rings import RingSequences, ring_sequences

__all__ = [
    "RingSequences",
    "ring_sequences",
    "dtw_distance",
    "dtw_lower_bound",
    "struct_distance",
    "struct_lower_bound",
    "StructPairConfig",
    "PairSet",
    "candidate_pairs",
    "mine_pairs",
    "brute_force_pairs",
    "write_pairs",
    "read_pairs",
]
