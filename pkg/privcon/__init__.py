"""
privcon - Privacy-preserving distributed average consensus simulator

Runs linear-iteration and PDMM averaging under DP, SMPC and subspace-perturbation
noise insertion, rebuilds what a passive coalition observes, and measures
output utility and individual privacy over Monte-Carlo trials.
"""

__version__ = "0.1.0"
