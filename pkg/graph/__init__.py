"""
Graph data model and dataset files.

Provides:
- Graph / UnlabeledGraph: validated undirected attributed graphs in CSR layout
- PredictionMatrix: per-node class probabilities
- load_graph / write_graph: dataset manifest I/O
- read_predictions / write_predictions: prediction CSV files
- split_train_val: seeded 4:1 train/validation split
"""

from graph.loader import load_graph, read_labels, read_predictions, write_graph, write_predictions
from graph.models import Graph, GraphDataError, PredictionMatrix, UnlabeledGraph
from graph.split import SplitAssignment, split_train_val

__all__ = [
    "Graph",
    "UnlabeledGraph",
    "PredictionMatrix",
    "GraphDataError",
    "load_graph",
    "write_graph",
    "read_labels",
    "read_predictions",
    "write_predictions",
    "SplitAssignment",
    "split_train_val",
]
