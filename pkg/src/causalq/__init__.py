"""causalq: impossible-measurement scenarios and no-signalling checks in 1+1D."""

__version__ = "0.1.0"
