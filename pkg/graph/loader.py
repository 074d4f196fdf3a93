"""
Dataset manifest reading and writing.

A manifest is a JSON object:

    {"edges": "edges.tsv", "features": "features.csv",
     "labels": "labels.txt" | null, "n_classes": 4,
     "node_ids": "node_ids.txt" (optional), "n_nodes": 1000 (optional)}

Relative paths are resolved against the manifest's directory. Edge lists
are "u<TAB>v" per line with '#' comments; features are headerless CSV; labels
and node ids are one value per line.
"""

import json
import logging
from pathlib import Path

import numpy as np

from graph.models import Graph, GraphDataError, PredictionMatrix

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


# ────────────────────────────────────────────────────────────────────────────────
# File parsers
# ────────────────────────────────────────────────────────────────────────────────

def _require_file(path: Path, role: str) -> Path:
    if not path.is_file():
        raise GraphDataError(f"missing {role} file: {path}")
    return path


def read_edge_list(path: Path) -> np.ndarray:
    """
    Parse a tab-separated edge list into an (m, 2) integer array.

    Raises:
        GraphDataError: On malformed lines or negative ids.
    """
    pairs: list[tuple[int, int]] = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            content = line.split("#", 1)[0].strip()
            if not content:
                continue
            parts = content.split()
            if len(parts) < 2:
                raise GraphDataError(f"{path}:{line_no}: expected 'u<TAB>v', got {content!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise GraphDataError(f"{path}:{line_no}: non-integer node id in {content!r}")
            if u < 0 or v < 0:
                raise GraphDataError(f"{path}:{line_no}: node index out of range ({u}, {v})")
            pairs.append((u, v))
    return np.array(pairs, dtype=np.int64).reshape(-1, 2)


def read_features(path: Path) -> np.ndarray:
    """
    Parse a headerless CSV feature matrix.

    Raises:
        GraphDataError: On a non-numeric token, ragged rows or non-finite values.
    """
    try:
        features = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError:
        features = _diagnose_features(path)

    if not np.all(np.isfinite(features)):
        raise GraphDataError(f"{path}: features contain NaN or Inf")
    return features


def _diagnose_features(path: Path) -> np.ndarray:
    # Slow path: re-read line by line to report where parsing broke
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            content = line.strip()
            if not content:
                continue
            row = []
            for token in content.split(","):
                try:
                    row.append(float(token))
                except ValueError:
                    raise GraphDataError(f"{path}:{line_no}: non-numeric feature token {token.strip()!r}")
            if width is not None and len(row) != width:
                raise GraphDataError(f"{path}:{line_no}: expected {width} features, got {len(row)}")
            width = len(row)
            rows.append(row)
    return np.array(rows, dtype=np.float64).reshape(len(rows), width or 0)


def read_labels(path: Path) -> np.ndarray:
    """Parse one integer label per line."""
    labels = []
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            content = line.strip()
            if not content:
                continue
            try:
                labels.append(int(content))
            except ValueError:
                raise GraphDataError(f"{path}:{line_no}: non-integer label {content!r}")
    return np.array(labels, dtype=np.int64)


def read_node_ids(path: Path) -> list[str]:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


# ────────────────────────────────────────────────────────────────────────────────
# Manifest
# ────────────────────────────────────────────────────────────────────────────────

def read_manifest(manifest_path: str | Path) -> dict:
    """
    Read and check a dataset manifest.

    Raises:
        GraphDataError: If the file is missing, not JSON, or lacks required keys.
    """
    path = _require_file(Path(manifest_path), "manifest")
    try:
        with open(path, "r", encoding="utf-8") as f:
            manifest = json.load(f)
    except json.JSONDecodeError as e:
        raise GraphDataError(f"{path}: invalid JSON ({e})")

    for key in ("edges", "features", "n_classes"):
        if key not in manifest:
            raise GraphDataError(f"{path}: manifest missing '{key}'")
    return manifest


def load_graph(manifest_path: str | Path) -> Graph:
    """
    Load and validate a graph from a dataset manifest.

    Args:
        manifest_path: Path to the manifest JSON.

    Returns:
        Validated Graph; labels are None when the manifest says "labels": null.

    Raises:
        GraphDataError: Missing file, node index out of range, feature-row
                        count != node count, or non-numeric feature token.
    """
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    base = manifest_path.parent

    features = read_features(_require_file(base / manifest["features"], "features"))
    n_nodes = int(manifest.get("n_nodes", features.shape[0]))
    if features.shape[0] != n_nodes:
        raise GraphDataError(f"feature-row count {features.shape[0]} != node count {n_nodes}")

    edges = read_edge_list(_require_file(base / manifest["edges"], "edges"))

    labels = None
    if manifest.get("labels"):
        labels = read_labels(_require_file(base / manifest["labels"], "labels"))
        if len(labels) != n_nodes:
            raise GraphDataError(f"label count {len(labels)} != node count {n_nodes}")

    node_ids = None
    if manifest.get("node_ids"):
        node_ids = read_node_ids(_require_file(base / manifest["node_ids"], "node_ids"))

    graph = Graph.from_edges(
        n_nodes=n_nodes,
        edges=edges,
        features=features,
        n_classes=int(manifest["n_classes"]),
        labels=labels,
        node_ids=node_ids,
    )
    logger.info(
        f"Loaded graph {manifest_path}: {graph.n_nodes} nodes, {graph.n_edges} edges, "
        f"d={graph.feature_dim}, labels={'yes' if graph.has_labels else 'no'}"
    )
    return graph


def write_graph(g: Graph, directory: str | Path, include_labels: bool = True) -> Path:
    """
    Write a graph in manifest format.

    Features are written with 17 significant digits so a reload is
    bit-identical.

    Args:
        g: Graph to write.
        directory: Output directory (created if needed).
        include_labels: Write the label file when the graph has labels.

    Returns:
        Path of the written manifest.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    edges = g.edge_array()
    with open(directory / "edges.tsv", "w", encoding="utf-8") as f:
        f.write(f"# {g.n_nodes} nodes, {len(edges)} undirected edges\n")
        for u, v in edges:
            f.write(f"{u}\t{v}\n")

    np.savetxt(directory / "features.csv", g.features, delimiter=",", fmt="%.17g")

    manifest = {
        "edges": "edges.tsv",
        "features": "features.csv",
        "labels": None,
        "n_classes": g.n_classes,
        "n_nodes": g.n_nodes,
    }
    if include_labels and g.labels is not None:
        np.savetxt(directory / "labels.txt", g.labels, fmt="%d")
        manifest["labels"] = "labels.txt"
    if g.node_ids is not None:
        with open(directory / "node_ids.txt", "w", encoding="utf-8") as f:
            f.write("\n".join(g.node_ids) + "\n")
        manifest["node_ids"] = "node_ids.txt"

    manifest_path = directory / MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2)

    logger.debug(f"Wrote graph to {manifest_path}")
    return manifest_path


# ────────────────────────────────────────────────────────────────────────────────
# Predictions
# ────────────────────────────────────────────────────────────────────────────────

def write_predictions(pred: PredictionMatrix, path: str | Path) -> Path:
    """Write row-stochastic probabilities as headerless CSV (17 significant digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, pred.probs, delimiter=",", fmt="%.17g")
    return path


def read_predictions(path: str | Path) -> tuple[np.ndarray, PredictionMatrix | None]:
    """
    Read predicted labels from a probability CSV or a one-label-per-line file.

    Returns:
        (predicted labels, PredictionMatrix or None for a label file)

    Raises:
        GraphDataError: If the file is missing, malformed, or not row-stochastic.
    """
    path = _require_file(Path(path), "predictions")
    rows = read_features(path)
    if rows.shape[1] == 1:
        labels = rows[:, 0]
        if np.any(labels != np.round(labels)) or np.any(labels < 0):
            raise GraphDataError(f"{path}: single-column predictions must be non-negative integers")
        return labels.astype(np.int64), None
    try:
        pred = PredictionMatrix(rows)
    except ValueError as e:
        raise GraphDataError(f"{path}: {e}")
    return pred.argmax(), pred
