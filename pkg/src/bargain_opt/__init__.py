"""Direction-based bargaining for multi-objective and multitask optimization."""

__version__ = "0.1.0"
