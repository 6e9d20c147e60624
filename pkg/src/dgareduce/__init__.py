"""Transformer-bushing fault detection from dissolved gas-in-oil analysis.

Four attribute reducers (PCA, rough-set reducts, incremental granular
ranking, decision trees) feed three classifiers (backprop MLP, kernel SVM,
rough neural network) under a cross-validated experiment harness.
"""

from . import bpnn, dataset, dtree, granular, pca, pipeline, reduction, rnn, roughset, svm
from .errors import DgaError

__version__ = "0.1.0"

__all__ = [
    "DgaError",
    "bpnn",
    "dataset",
    "dtree",
    "granular",
    "pca",
    "pipeline",
    "reduction",
    "rnn",
    "roughset",
    "svm",
    "__version__",
]
