"""Spectral gap of H_in + H_prop against circuit length.

For a fixed two-qubit gate repeated T times, prints Delta, Delta (T+1)^2,
Delta (T+1)^3 and the clock-angle cos^2 next to its bound 1 - 1/(T+1).
"""
import argparse

import numpy as np

from hamlab.circuit import VerificationCircuit, unitary_gate
from hamlab.kitaev import compile_circuit
from hamlab.qstate import random_unitary
from hamlab.spectral import kernel_gap, verify_clock_angle


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--max-T", type=int, default=8)
    parser.add_argument("--ancilla", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    u = random_unitary(4, np.random.default_rng(args.seed))
    print(f"{'T':>3} {'gap':>12} {'gap*(T+1)^2':>12} {'gap*(T+1)^3':>12} {'cos^2':>8} {'bound':>8}")
    for T in range(2, args.max_T + 1):
        c = VerificationCircuit((unitary_gate([0, 1], u),) * T, args.ancilla, 1, 0, accept_qubit=0)
        ham = compile_circuit(c)
        gap = kernel_gap(ham)
        angle = verify_clock_angle(c, ham)
        print(f"{T:>3} {gap:12.6f} {gap * (T + 1) ** 2:12.6f} {gap * (T + 1) ** 3:12.6f} "
              f"{angle.cos_sq_theta:8.5f} {angle.bound:8.5f}")


if __name__ == "__main__":
    main()
