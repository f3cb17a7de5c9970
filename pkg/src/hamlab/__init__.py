"""Desk-scale numerics for separable-witness Hamiltonian verification."""

from .qstate import Bipartition, DensityMatrix, PureState, QubitLayout
from .circuit import Gate, VerificationCircuit, hm_wrap, product_test_circuit
from .kitaev import KitaevHamiltonian, compile_circuit, history_state
from .optimize import SLHInstance, Term, min_product_energy
from .cldm import CLDMInstance, SLHProof, consistency_decide, slh_verifier

__version__ = "0.1.0"
