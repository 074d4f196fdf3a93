"""
Structural pair mining: the top-kappa most structurally similar node pairs.

Candidate pairs are restricted to nodes whose log-degree bins are equal or
adjacent. Candidates are visited in order of a lower bound (the exact hop-0
cost, which never exceeds the full distance); exact distances are computed
in batches until the next lower bound exceeds the current kappa-th best
distance. Once kappa distances are known, each remaining candidate is also
checked against the hop-wise ring lower bound and skipped when it cannot
reach the top kappa. The result equals evaluating every candidate.
"""

import json
import logging
import math
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from tqdm import tqdm

from graph.models import _GraphStructure
from settings import ConfigError
from structure.dtw import degree_cost, struct_distance_many, struct_lower_bound
from structure.rings import RingSequences, ring_sequences

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_NODES = 2000
BATCH_SIZE = 4096
BOUND_SLACK = 1e-9


@dataclass
class StructPairConfig:
    """
    Attributes:
        kappa: Number of structural pairs; None means |E_t|.
        max_hop: Ring depth k*.
        bin_base: Log-degree binning base; None disables binning.
        exclude_edges: Drop candidate pairs that are edges.
        candidate_limit: Compare each node only with this many nodes of
                         closest degree (within the allowed bins).
    """
    kappa: int | None = None
    max_hop: int = 2
    bin_base: float | None = 2.0
    exclude_edges: bool = False
    candidate_limit: int | None = None

    def __post_init__(self):
        if self.kappa is not None and self.kappa < 1:
            raise ConfigError(f"kappa must be >= 1, got {self.kappa}")
        if self.max_hop < 0:
            raise ConfigError(f"max_hop must be >= 0, got {self.max_hop}")
        if self.bin_base is not None and self.bin_base <= 1.0:
            raise ConfigError(f"bin_base must be > 1, got {self.bin_base}")
        if self.candidate_limit is not None and self.candidate_limit < 1:
            raise ConfigError(f"candidate_limit must be >= 1, got {self.candidate_limit}")


@dataclass(eq=False)
class PairSet:
    """
    Positive pairs for structure consistency.

    local: (m, 2) target edges with u < v.
    structural: (s, 2) structural pairs with u < v, sorted by (distance, u, v).
    distances: Length-s struct distances of the structural pairs.
    """
    local: np.ndarray
    structural: np.ndarray
    distances: np.ndarray
    n_candidates: int = 0
    kappa: int = 0
    max_hop: int = 2
    seconds: float = 0.0

    def summary(self) -> dict:
        return {
            "kappa": self.kappa,
            "max_hop": self.max_hop,
            "n_local": int(len(self.local)),
            "n_structural": int(len(self.structural)),
            "n_candidates": int(self.n_candidates),
            "seconds": round(self.seconds, 3),
        }


# ────────────────────────────────────────────────────────────────────────────────
# Candidates
# ────────────────────────────────────────────────────────────────────────────────

def degree_bins(deg: np.ndarray, base: float | None) -> np.ndarray:
    """floor(log_base(deg + 1)); all zeros when binning is disabled."""
    if base is None:
        return np.zeros(len(deg), dtype=np.int64)
    return np.floor(np.log(deg + 1.0) / math.log(base) + 1e-12).astype(np.int64)


def _all_pairs(nodes: np.ndarray) -> np.ndarray:
    i, j = np.triu_indices(len(nodes), k=1)
    return np.stack([nodes[i], nodes[j]], axis=1)


def candidate_pairs(g: _GraphStructure, cfg: StructPairConfig) -> np.ndarray:
    """
    Candidate pairs as sorted pair keys u * n + v (u < v).
    """
    n = g.n_nodes
    deg = g.degrees()
    bins = degree_bins(deg, cfg.bin_base)

    if cfg.candidate_limit is not None:
        chunks = []
        for i in range(n):
            allowed = np.flatnonzero((np.abs(bins - bins[i]) <= 1) & (np.arange(n) != i))
            if allowed.size == 0:
                continue
            nearest = allowed[np.lexsort((allowed, np.abs(deg[allowed] - deg[i])))[:cfg.candidate_limit]]
            lo, hi = np.minimum(i, nearest), np.maximum(i, nearest)
            chunks.append(lo * n + hi)
        keys = np.unique(np.concatenate(chunks)) if chunks else np.zeros(0, dtype=np.int64)
    else:
        chunks = []
        groups = {b: np.flatnonzero(bins == b) for b in np.unique(bins)}
        for b, nodes in groups.items():
            chunks.append(_all_pairs(nodes))
            if b + 1 in groups:
                mesh = np.stack(np.meshgrid(nodes, groups[b + 1], indexing="ij"), axis=-1).reshape(-1, 2)
                chunks.append(mesh)
        pairs = np.concatenate(chunks) if chunks else np.zeros((0, 2), dtype=np.int64)
        lo, hi = pairs.min(axis=1), pairs.max(axis=1)
        keys = np.unique(lo * n + hi)

    if cfg.exclude_edges and keys.size:
        edges = g.edge_array()
        keys = keys[~np.isin(keys, edges[:, 0] * n + edges[:, 1])]
    return keys.astype(np.int64)


# ────────────────────────────────────────────────────────────────────────────────
# Exact distances
# ────────────────────────────────────────────────────────────────────────────────

def pair_distances(rings: RingSequences, keys: np.ndarray, n: int) -> np.ndarray:
    """Exact struct distances for pair keys, batched per anchor node."""
    out = np.empty(len(keys))
    anchors = keys // n
    partners = keys % n
    order = np.argsort(anchors, kind="stable")
    boundaries = np.flatnonzero(np.diff(anchors[order])) + 1
    for group in np.split(order, boundaries):
        if group.size == 0:
            continue
        anchor = int(anchors[group[0]])
        out[group] = struct_distance_many(rings.row(anchor), [rings.row(int(j)) for j in partners[group]])
    return out


def _within_bound(rings: RingSequences, keys: np.ndarray, n: int, worst: float) -> np.ndarray:
    """Mask of keys whose hop-wise lower bound does not exceed worst (up to rounding)."""
    limit = worst + BOUND_SLACK * (1.0 + worst)
    return np.array(
        [struct_lower_bound(rings.row(int(k // n)), rings.row(int(k % n))) <= limit for k in keys],
        dtype=bool,
    )


def _select_top(keys: np.ndarray, dists: np.ndarray, kappa: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((keys, dists))[:kappa]
    return keys[order], dists[order]


def _resolve_kappa(g: _GraphStructure, cfg: StructPairConfig) -> int:
    return g.n_edges if cfg.kappa is None else cfg.kappa


def _to_pairs(keys: np.ndarray, n: int) -> np.ndarray:
    return np.stack([keys // n, keys % n], axis=1).astype(np.int64).reshape(-1, 2)


def mine_pairs(g: _GraphStructure, cfg: StructPairConfig | None = None, progress: bool = False) -> PairSet:
    """
    Top-kappa structurally similar pairs among binned candidates, plus the edge set.

    Ties in distance are broken by (u, v) lexicographically. If fewer than
    kappa candidates exist, all are returned with a warning.
    """
    cfg = cfg or StructPairConfig()
    start = time.perf_counter()
    n = g.n_nodes
    kappa = _resolve_kappa(g, cfg)
    local = g.edge_array()

    if n < 2 or kappa == 0:
        if n < 2:
            logger.warning(f"Graph has {n} node(s); no structural pairs")
        return PairSet(local=local, structural=np.zeros((0, 2), dtype=np.int64), distances=np.zeros(0),
                       kappa=kappa, max_hop=cfg.max_hop, seconds=time.perf_counter() - start)

    rings = ring_sequences(g, cfg.max_hop)
    keys = candidate_pairs(g, cfg)
    if len(keys) < kappa:
        logger.warning(f"Only {len(keys)} structural candidates for kappa={kappa}; returning all")

    deg = g.degrees()
    bounds = degree_cost(deg[keys // n], deg[keys % n])
    order = np.lexsort((keys, bounds))

    done_keys: list[np.ndarray] = []
    done_dists: list[np.ndarray] = []
    evaluated = 0
    skipped = 0
    worst = np.inf

    bar = tqdm(total=len(order), desc="mining pairs", disable=not progress, leave=False)
    for pos in range(0, len(order), BATCH_SIZE):
        batch = order[pos:pos + BATCH_SIZE]
        batch = batch[bounds[batch] <= worst]
        if batch.size == 0:
            break
        if np.isfinite(worst):
            keep = _within_bound(rings, keys[batch], n, worst)
            skipped += int(batch.size - keep.sum())
            bar.update(int(batch.size - keep.sum()))
            batch = batch[keep]
            if batch.size == 0:
                continue
        done_keys.append(keys[batch])
        done_dists.append(pair_distances(rings, keys[batch], n))
        evaluated += batch.size
        bar.update(batch.size)

        all_dists = np.concatenate(done_dists)
        if all_dists.size >= kappa:
            worst = float(np.partition(all_dists, kappa - 1)[kappa - 1])
    bar.close()

    if done_keys:
        top_keys, top_dists = _select_top(np.concatenate(done_keys), np.concatenate(done_dists), kappa)
    else:
        top_keys, top_dists = np.zeros(0, dtype=np.int64), np.zeros(0)

    elapsed = time.perf_counter() - start
    logger.info(
        f"Mined {len(top_keys)} structural pairs from {len(keys)} candidates "
        f"({evaluated} exact distances, {skipped} skipped by ring bounds, {elapsed:.1f}s)"
    )
    return PairSet(
        local=local,
        structural=_to_pairs(top_keys, n),
        distances=top_dists,
        n_candidates=int(len(keys)),
        kappa=kappa,
        max_hop=cfg.max_hop,
        seconds=elapsed,
    )


def brute_force_pairs(g: _GraphStructure, cfg: StructPairConfig | None = None) -> PairSet:
    """
    Exact top-kappa over all n(n-1)/2 pairs, ignoring binning and candidate limits.

    Raises:
        ValueError: If the graph has more than 2000 nodes.
    """
    cfg = cfg or StructPairConfig()
    n = g.n_nodes
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute_force_pairs is limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    start = time.perf_counter()
    kappa = _resolve_kappa(g, cfg)

    pairs = _all_pairs(np.arange(n))
    keys = (pairs[:, 0] * n + pairs[:, 1]).astype(np.int64)
    if cfg.exclude_edges and keys.size:
        edges = g.edge_array()
        keys = keys[~np.isin(keys, edges[:, 0] * n + edges[:, 1])]

    if kappa == 0 or keys.size == 0:
        top_keys, top_dists = np.zeros(0, dtype=np.int64), np.zeros(0)
    else:
        rings = ring_sequences(g, cfg.max_hop)
        top_keys, top_dists = _select_top(keys, pair_distances(rings, keys, n), kappa)

    return PairSet(
        local=g.edge_array(),
        structural=_to_pairs(top_keys, n),
        distances=top_dists,
        n_candidates=int(len(keys)),
        kappa=kappa,
        max_hop=cfg.max_hop,
        seconds=time.perf_counter() - start,
    )


# ────────────────────────────────────────────────────────────────────────────────
# Files
# ────────────────────────────────────────────────────────────────────────────────

def write_pairs(pairs: PairSet, path: str | Path) -> Path:
    """Write structural pairs as 'u<TAB>v<TAB>distance' with a JSON summary beside it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for (u, v), d in zip(pairs.structural, pairs.distances):
            f.write(f"{u}\t{v}\t{float(d)!r}\n")
    with open(path.with_suffix(".json"), "w", encoding="utf-8") as f:
        json.dump(pairs.summary(), f, indent=2)
    return path


def read_pairs(path: str | Path, g: _GraphStructure) -> PairSet:
    """
    Read a structural pair TSV; the local set is taken from g.

    Raises:
        ValueError: On malformed lines or pairs outside the graph.
    """
    rows, dists = [], []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            content = line.strip()
            if not content or content.startswith("#"):
                continue
            parts = content.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{line_no}: expected 'u<TAB>v<TAB>distance'")
            u, v, d = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= u < g.n_nodes and 0 <= v < g.n_nodes) or u == v:
                raise ValueError(f"{path}:{line_no}: invalid pair ({u}, {v})")
            rows.append((min(u, v), max(u, v)))
            dists.append(d)
    summary = {}
    summary_path = Path(path).with_suffix(".json")
    if summary_path.is_file():
        summary = json.loads(summary_path.read_text(encoding="utf-8"))
    return PairSet(
        local=g.edge_array(),
        structural=np.array(rows, dtype=np.int64).reshape(-1, 2),
        distances=np.array(dists),
        n_candidates=summary.get("n_candidates", 0),
        kappa=summary.get("kappa", len(rows)),
        max_hop=summary.get("max_hop", 2),
    )


def config_dict(cfg: StructPairConfig) -> dict:
    return asdict(cfg)
