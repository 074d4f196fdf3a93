"""
Model checkpoints: the only artifact carried from source training to adaptation.

Binary layout (little-endian):

    magic       b"SOGA-CKPT\\0"
    version     u16
    arch tag    u8   (0 GCN, 1 GraphSAGE, 2 GAT)
    dims        4 x u32  (feature_dim, hidden_dim, n_classes, heads)
    tensors     per parameter: rows u32, cols u32, rows*cols float64
    trailer     UTF-8 JSON metadata (rest of file)

Parameters are written in the canonical order given by param_shapes().
"""

import json
import logging
import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

MAGIC = b"SOGA-CKPT\0"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<HBIIII")
_TENSOR_HEADER = struct.Struct("<II")


class CheckpointError(ValueError):
    """Exception raised for unreadable checkpoints or checkpoint/graph mismatches."""
    pass


class Architecture(Enum):
    """Supported GNN architectures with their on-disk tags."""
    GCN = "GCN"
    GRAPHSAGE = "GraphSAGE"
    GAT = "GAT"

    @property
    def tag(self) -> int:
        return _ARCH_TAGS[self]

    @classmethod
    def from_tag(cls, tag: int) -> "Architecture":
        for arch, value in _ARCH_TAGS.items():
            if value == tag:
                return arch
        raise CheckpointError(f"unknown architecture tag {tag}")

    @classmethod
    def parse(cls, name: str) -> "Architecture":
        """Case-insensitive lookup; accepts 'sage' for GraphSAGE."""
        key = name.strip().lower()
        for arch in cls:
            if arch.value.lower() == key:
                return arch
        if key == "sage":
            return cls.GRAPHSAGE
        raise ValueError(f"unknown architecture {name!r} (choose GCN, GraphSAGE or GAT)")


_ARCH_TAGS = {Architecture.GCN: 0, Architecture.GRAPHSAGE: 1, Architecture.GAT: 2}


def param_shapes(
    arch: Architecture,
    feature_dim: int,
    hidden_dim: int,
    n_classes: int,
    heads: int = 1
) -> dict[str, tuple[int, int]]:
    """
    Canonical parameter names and shapes for a two-layer model.

    GAT splits hidden_dim evenly across heads at layer 1 (concatenated) and
    uses full-width heads at layer 2 (averaged).

    Raises:
        ValueError: If GAT hidden_dim is not divisible by heads.
    """
    if arch is Architecture.GCN:
        return {
            "W1": (feature_dim, hidden_dim),
            "b1": (1, hidden_dim),
            "W2": (hidden_dim, n_classes),
            "b2": (1, n_classes),
        }
    if arch is Architecture.GRAPHSAGE:
        return {
            "W1": (2 * feature_dim, hidden_dim),
            "b1": (1, hidden_dim),
            "W2": (2 * hidden_dim, n_classes),
            "b2": (1, n_classes),
        }

    if heads < 1 or hidden_dim % heads:
        raise ValueError(f"GAT hidden_dim {hidden_dim} must be divisible by heads {heads}")
    per_head = hidden_dim // heads
    shapes: dict[str, tuple[int, int]] = {}
    for h in range(heads):
        shapes[f"W1_{h}"] = (feature_dim, per_head)
        shapes[f"a1_src_{h}"] = (per_head, 1)
        shapes[f"a1_dst_{h}"] = (per_head, 1)
    shapes["b1"] = (1, hidden_dim)
    for h in range(heads):
        shapes[f"W2_{h}"] = (hidden_dim, n_classes)
        shapes[f"a2_src_{h}"] = (n_classes, 1)
        shapes[f"a2_dst_{h}"] = (n_classes, 1)
    shapes["b2"] = (1, n_classes)
    return shapes


@dataclass(eq=False)
class ModelCheckpoint:
    """
    Architecture, dimensions and parameter values of a two-layer GNN.

    Attributes:
        arch: Architecture.
        feature_dim: Input feature dimension d.
        hidden_dim: Hidden width.
        n_classes: Output classes k.
        heads: Attention heads (1 for non-attention models).
        params: Parameter arrays keyed by canonical name.
        metadata: Training metadata (seed, epochs, best validation Macro-F1, dropout).
    """
    arch: Architecture
    feature_dim: int
    hidden_dim: int
    n_classes: int
    heads: int
    params: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch is not Architecture.GAT:
            self.heads = 1
        expected = param_shapes(self.arch, self.feature_dim, self.hidden_dim, self.n_classes, self.heads)
        if list(self.params) != list(expected):
            raise CheckpointError(f"parameter names {list(self.params)} do not match {self.arch.value}")
        for name, shape in expected.items():
            if self.params[name].shape != shape:
                raise CheckpointError(f"parameter {name} has shape {self.params[name].shape}, expected {shape}")

    @property
    def dropout(self) -> float:
        return float(self.metadata.get("dropout", 0.5))

    def copy(self) -> "ModelCheckpoint":
        return ModelCheckpoint(
            arch=self.arch,
            feature_dim=self.feature_dim,
            hidden_dim=self.hidden_dim,
            n_classes=self.n_classes,
            heads=self.heads,
            params={name: value.copy() for name, value in self.params.items()},
            metadata=json.loads(json.dumps(self.metadata)),
        )

    def same_parameters(self, other: "ModelCheckpoint") -> bool:
        """Bitwise equality of architecture, dimensions and every parameter."""
        return (
            self.arch is other.arch
            and (self.feature_dim, self.hidden_dim, self.n_classes, self.heads)
            == (other.feature_dim, other.hidden_dim, other.n_classes, other.heads)
            and list(self.params) == list(other.params)
            and all(np.array_equal(self.params[k], other.params[k]) for k in self.params)
        )


def init_checkpoint(
    arch: Architecture,
    feature_dim: int,
    hidden_dim: int,
    n_classes: int,
    heads: int = 2,
    seed: int = 0,
    metadata: dict | None = None
) -> ModelCheckpoint:
    """Glorot-uniform weights, zero biases, drawn from a seeded generator."""
    if arch is not Architecture.GAT:
        heads = 1
    rng = np.random.default_rng(seed)
    params = {}
    for name, (fan_in, fan_out) in param_shapes(arch, feature_dim, hidden_dim, n_classes, heads).items():
        if name.startswith("b"):
            params[name] = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            params[name] = rng.uniform(-limit, limit, size=(fan_in, fan_out))
    return ModelCheckpoint(
        arch=arch,
        feature_dim=feature_dim,
        hidden_dim=hidden_dim,
        n_classes=n_classes,
        heads=heads,
        params=params,
        metadata=dict(metadata or {}),
    )


# ────────────────────────────────────────────────────────────────────────────────
# Serialization
# ────────────────────────────────────────────────────────────────────────────────

def save_checkpoint(ckpt: ModelCheckpoint, path: str | Path) -> Path:
    """Write a checkpoint in the binary format described above."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    chunks = [
        MAGIC,
        _HEADER.pack(
            FORMAT_VERSION, ckpt.arch.tag,
            ckpt.feature_dim, ckpt.hidden_dim, ckpt.n_classes, ckpt.heads
        ),
    ]
    for value in ckpt.params.values():
        rows, cols = value.shape
        chunks.append(_TENSOR_HEADER.pack(rows, cols))
        chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
    chunks.append(json.dumps(ckpt.metadata, sort_keys=True).encode("utf-8"))

    with open(path, "wb") as f:
        f.write(b"".join(chunks))
    logger.debug(f"Saved {ckpt.arch.value} checkpoint to {path}")
    return path


def load_checkpoint(path: str | Path) -> ModelCheckpoint:
    """
    Read a checkpoint written by save_checkpoint().

    Raises:
        FileNotFoundError: If the file does not exist.
        CheckpointError: On magic mismatch, unsupported version, truncated
                         data, shape-header inconsistency or bad metadata.
    """
    blob = Path(path).read_bytes()

    if not blob.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a SOGA checkpoint (magic mismatch)")
    offset = len(MAGIC)
    if len(blob) < offset + _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")

    version, tag, d, hidden, k, heads = _HEADER.unpack_from(blob, offset)
    offset += _HEADER.size
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version {version}")
    arch = Architecture.from_tag(tag)

    try:
        expected = param_shapes(arch, d, hidden, k, heads)
    except ValueError as e:
        raise CheckpointError(f"{path}: {e}")

    params = {}
    for name, shape in expected.items():
        if len(blob) < offset + _TENSOR_HEADER.size:
            raise CheckpointError(f"{path}: truncated before tensor {name}")
        rows, cols = _TENSOR_HEADER.unpack_from(blob, offset)
        offset += _TENSOR_HEADER.size
        if (rows, cols) != shape:
            raise CheckpointError(f"{path}: tensor {name} header ({rows}, {cols}) inconsistent with dims {shape}")
        n_bytes = rows * cols * 8
        if len(blob) < offset + n_bytes:
            raise CheckpointError(f"{path}: truncated inside tensor {name}")
        params[name] = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols).astype(np.float64)
        offset += n_bytes

    try:
        metadata = json.loads(blob[offset:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise CheckpointError(f"{path}: truncated or corrupt metadata trailer")
    if not isinstance(metadata, dict):
        raise CheckpointError(f"{path}: metadata trailer is not a JSON object")

    return ModelCheckpoint(
        arch=arch,
        feature_dim=d,
        hidden_dim=hidden,
        n_classes=k,
        heads=heads,
        params=params,
        metadata=metadata,
    )
