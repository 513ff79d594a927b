"""Human-steered multi-objective Bayesian optimization campaigns."""

__version__ = "0.1.0"
