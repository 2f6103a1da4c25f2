"""Graph-constrained max-k-cut: MSO constraints, tree-decomposition LP, randomized rounding."""

__version__ = "0.1.0"
