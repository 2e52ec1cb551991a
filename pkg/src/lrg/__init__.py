"""Laplacian renormalization for graphs: spectral scale detection,
macro-node rewiring, multi-scale GNN training, and a benchmark harness.

Submodules load lazily so the command-line tool can configure BLAS
thread pools before numpy comes in.
"""

from __future__ import annotations

import importlib

__version__ = "0.1.0"

_EXPORTS = {
    "Graph": "graph",
    "canonical_edges": "graph",
    "load_graph": "graph",
    "save_graph": "graph",
    "largest_connected_component": "graph",
    "laplacian": "graph",
    "LaplacianMatrix": "graph",
    "generate_sbm": "generate",
    "stream_rng": "rng",
    "LaplacianSpectrum": "spectral",
    "eigendecompose": "spectral",
    "propagator_eigenvalues": "spectral",
    "von_neumann_entropy": "spectral",
    "EntropyScan": "spectral",
    "entropy_scan": "spectral",
    "detect_peaks": "spectral",
    "scan_graph": "spectral",
    "Propagator": "renorm",
    "MacroNodePartition": "renorm",
    "RenormalizedGraph": "renorm",
    "propagator_matrix": "renorm",
    "macro_node_partition": "renorm",
    "rewire": "renorm",
    "renormalize_at": "renorm",
    "EncoderConfig": "nn",
    "MultiScaleModel": "nn",
    "train": "training",
    "TrainRecord": "training",
    "gradient_check": "training",
    "WilcoxonResult": "stats",
    "wilcoxon_signed_rank": "stats",
    "ExperimentConfig": "experiment",
    "ScoreTable": "experiment",
    "run_variant": "experiment",
    "compare": "experiment",
    "random_scale_control": "experiment",
    "LrgError": "errors",
    "DatasetError": "errors",
    "AnalysisError": "errors",
}

__all__ = sorted(_EXPORTS) + ["__version__"]


def __getattr__(name):
    try:
        module_name = _EXPORTS[name]
    except KeyError:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}") from None
    value = getattr(importlib.import_module(f".{module_name}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
