"""Nearest-neighbor nested-adds modular exponentiation: compiler, simulators, analysis."""
from .phase import DyadicPhase
from .circuit import (Circuit, CircuitError, CostModel, Gate, GENERAL, NN, ResourceReport,
                      append_gate, compute_depth, concat, count_size, invert, mirror,
                      resources, validate_nearest_neighbor)

__all__ = [
    "DyadicPhase", "Circuit", "CircuitError", "CostModel", "Gate", "GENERAL", "NN",
    "ResourceReport", "append_gate", "compute_depth", "concat", "count_size", "invert",
    "mirror", "resources", "validate_nearest_neighbor",
]
