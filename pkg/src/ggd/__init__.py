"""Detection of machine-generated graphs with GNN-based classifiers."""

from ggd.graph import Authenticity, Corpus, Graph, LabeledGraph, Split

__version__ = "0.1.0"

__all__ = ["Authenticity", "Corpus", "Graph", "LabeledGraph", "Split", "__version__"]
