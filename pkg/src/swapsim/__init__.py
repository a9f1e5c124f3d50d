"""Exact-state and Monte Carlo simulation of delayed-choice entanglement
swapping: two entangled photon pairs, a switchable bipartite state analyzer,
a quantum random number generator for the delayed choice, and the statistics
pipeline for the resulting correlations, fidelities, and witness values."""

__version__ = "0.1.0"
