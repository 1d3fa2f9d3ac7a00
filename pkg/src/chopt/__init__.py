"""CHOPT: hyperparameter optimization orchestration over a shared GPU cluster."""

__version__ = "0.1.0"
