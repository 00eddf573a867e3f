"""Representative point sets for big data via sparsity-inducing kernel discrepancy."""

__version__ = "0.1.0"
