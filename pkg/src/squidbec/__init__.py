"""Flux-qubit / Bose-Einstein-condensate hybrid: circuit, fields, coupling, dynamics, tomography."""

__version__ = "0.1.0"

from .bec_coupling import BecParams, CouplingResult, compute_coupling
from .dynamics import (HybridParams, HybridState, ProtocolResult, RampSchedule,
                       entangle_protocol, evolve, sweep_ramp_times, transfer_protocol)
from .loop_field import FieldPoint, LoopGeometry, magnetic_field, vector_potential
from .squid_circuit import FluxQubit, SquidParams, analyze_double_well

__all__ = [
    "BecParams", "CouplingResult", "compute_coupling",
    "HybridParams", "HybridState", "ProtocolResult", "RampSchedule",
    "entangle_protocol", "evolve", "sweep_ramp_times", "transfer_protocol",
    "FieldPoint", "LoopGeometry", "magnetic_field", "vector_potential",
    "FluxQubit", "SquidParams", "analyze_double_well",
]
