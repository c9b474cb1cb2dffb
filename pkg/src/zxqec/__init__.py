"""Compile noisy stabilizer-plus-rotation circuits to ZX diagrams and sample them fast."""

from .circuit_ir import Circuit, CircuitError, circuit_stats, parse_circuit
from .compile import CompiledSampler, CompileError, compile_sampler, export_dem
from .lowering import DETECTORS, MEASUREMENTS, lower
from .oracle import oracle_distribution
from .sampler import (
    SampleRecord,
    SamplingError,
    output_distribution,
    probabilities,
    probability_of,
    sample_detectors,
    sample_measurements,
)
from .simplify import clifford_simplify, simplify, verify_semantics

__all__ = [
    "Circuit",
    "CircuitError",
    "CompileError",
    "CompiledSampler",
    "DETECTORS",
    "MEASUREMENTS",
    "SampleRecord",
    "SamplingError",
    "circuit_stats",
    "clifford_simplify",
    "compile_sampler",
    "export_dem",
    "lower",
    "oracle_distribution",
    "output_distribution",
    "parse_circuit",
    "probabilities",
    "probability_of",
    "sample_detectors",
    "sample_measurements",
    "simplify",
    "verify_semantics",
]
