"""
Synthetic cross-domain graph pairs.

Provides:
- DomainPairConfig: SBM and feature parameters of a source/target pair
- gen_pair: seeded generation of (source, target) graphs
"""

from datagen.sbm import DomainPairConfig, block_sizes, class_means, gen_pair

__all__ = ["DomainPairConfig", "gen_pair", "block_sizes", "class_means"]
