"""Core package initialization."""

__all__ = [
    "graph",
    "linear",
    "pdmm",
    "perturbation",
    "adversary",
    "info_metrics",
    "harness",
    "spec",
    "diagnostics",
]
