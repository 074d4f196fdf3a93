"""
Adaptation configuration.
"""

import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from settings import ConfigError

logger = logging.getLogger(__name__)


class MarginalMode(Enum):
    """How the marginal term of information maximization is computed."""
    ENTROPY = "entropy"  # maximize H(q(y))
    KL = "kl"            # minimize KL(prior || q(y))


class SogaVariant(Enum):
    """Ablation variants."""
    FULL = "full"  # IM + SC
    IM = "im"      # information maximization only
    SC = "sc"      # structure consistency only


@dataclass
class SogaConfig:
    """
    Hyperparameters of one adaptation run.

    Attributes:
        lambda1: Weight of the local (edge) consistency term.
        lambda2: Weight of the structural-role consistency term.
        negatives: Negative samples per positive pair.
        lr: Adam learning rate.
        epochs: Number of full-batch epochs.
        seed: Seeds dropout and negative sampling.
        marginal_mode: ENTROPY or KL.
        label_prior: Target label prior, required in KL mode.
        cond_weight: Weight of the conditional-entropy term.
        marginal_weight: Weight of the marginal term.
        normalize_pairs: Average pair terms over each pair set instead of summing.
        resample_negatives: Redraw negatives every epoch instead of once.
    """
    lambda1: float = 1.0
    lambda2: float = 1.0
    negatives: int = 5
    lr: float = 1e-3
    epochs: int = 100
    seed: int = 0
    marginal_mode: MarginalMode = MarginalMode.ENTROPY
    label_prior: tuple[float, ...] | None = None
    cond_weight: float = 1.0
    marginal_weight: float = 1.0
    normalize_pairs: bool = True
    resample_negatives: bool = True

    def __post_init__(self):
        if isinstance(self.marginal_mode, str):
            try:
                self.marginal_mode = MarginalMode(self.marginal_mode)
            except ValueError:
                raise ConfigError(f"unknown marginal mode {self.marginal_mode!r} (entropy or kl)")
        if self.label_prior is not None:
            self.label_prior = tuple(float(p) for p in self.label_prior)

        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ConfigError(f"lambda1 and lambda2 must be >= 0, got {self.lambda1}, {self.lambda2}")
        if self.cond_weight < 0 or self.marginal_weight < 0:
            raise ConfigError("cond_weight and marginal_weight must be >= 0")
        if self.negatives < 1:
            raise ConfigError(f"negatives must be >= 1, got {self.negatives}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if self.epochs < 0:
            raise ConfigError(f"epochs must be >= 0, got {self.epochs}")

        if self.marginal_mode is MarginalMode.KL and self.label_prior is None:
            raise ConfigError("kl marginal mode needs a label_prior")
        if self.label_prior is not None:
            prior = np.asarray(self.label_prior)
            if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-6:
                raise ConfigError(f"label_prior must be a probability vector, got {self.label_prior}")

    def with_variant(self, variant: "SogaVariant | str") -> "SogaConfig":
        """Copy of this config with the ablation variant's terms switched off."""
        variant = SogaVariant(variant)
        if variant is SogaVariant.IM:
            return replace(self, lambda1=0.0, lambda2=0.0)
        if variant is SogaVariant.SC:
            return replace(self, cond_weight=0.0, marginal_weight=0.0)
        return replace(self)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["marginal_mode"] = self.marginal_mode.value
        data["label_prior"] = list(self.label_prior) if self.label_prior is not None else None
        return data


def read_label_prior(path: str | Path, n_classes: int) -> tuple[float, ...]:
    """
    Read a target label prior: n_classes numbers separated by whitespace or commas.

    Raises:
        ConfigError: If the file is missing, holds non-numbers, has the wrong
                     length, or is not a probability vector.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"label prior file not found: {path}")
    tokens = path.read_text(encoding="utf-8").replace(",", " ").split()
    try:
        prior = np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError:
        raise ConfigError(f"{path}: label prior must hold numbers only")

    if prior.size != n_classes:
        raise ConfigError(f"{path}: label prior has {prior.size} entries, model has {n_classes} classes")
    if not np.all(np.isfinite(prior)) or np.any(prior < 0):
        raise ConfigError(f"{path}: label prior entries must be finite and >= 0")
    if abs(prior.sum() - 1.0) > 1e-6:
        raise ConfigError(f"{path}: label prior sums to {prior.sum():.6g}, expected 1")
    logger.debug(f"Label prior from {path}: {prior.tolist()}")
    return tuple(prior.tolist())
