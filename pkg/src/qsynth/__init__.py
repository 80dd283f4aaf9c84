"""Resource-aware synthesis of gate-level quantum circuits from functional models.

A model names *what* to compute (library calls, control, inversion, repetition
and alternative implementations); the synthesizer decides *how*: which
implementation of every call, in which order, and which scratch qubits are
reused, subject to width/depth/gate-count constraints and an objective.
"""

from .circuit import Circuit, Gate, Metrics, measure, parse_qasm, to_qasm
from .domains import ConstraintSet
from .estimator import QuantumSynthesizer
from .model import Model, ModelError, load_model, parse_model, serialize, validate
from .solver import Budget, Infeasible, SearchTimeout, Solution, solve
from .synthesis import SynthesisResult, synthesize

__version__ = "0.1.0"

__all__ = [
    "Budget", "Circuit", "ConstraintSet", "Gate", "Infeasible", "Metrics", "Model", "ModelError",
    "QuantumSynthesizer", "SearchTimeout", "Solution", "SynthesisResult", "load_model", "measure",
    "parse_model", "parse_qasm", "serialize", "solve", "synthesize", "to_qasm", "validate",
]
