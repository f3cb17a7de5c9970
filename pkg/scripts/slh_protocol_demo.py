"""Classical-proof verification of a separable local Hamiltonian.

Runs the honest prover on a yes-instance, then a sweep of cheating proofs
against a no-instance, and reports what the verifier concluded.
"""
import argparse
from collections import Counter

import numpy as np

from hamlab.acceptance import cheating_proof, no_instance, yes_instance
from hamlab.cldm import default_oracle, honest_prover, slh_verifier
from hamlab.optimize import brute_force_product_min, ground_energy
from hamlab.qstate import PureState


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--proofs", type=int, default=40)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    rng = np.random.default_rng(args.seed)

    yes = yes_instance()
    verdict = slh_verifier(yes, honest_prover(yes, PureState.basis(0, yes.n)), default_oracle(rng_seed=rng))
    print(f"yes-instance: a={yes.a} b={yes.b} honest E={verdict.energy:.4f} accept={verdict.accept}")

    no = no_instance()
    h = no.hamiltonian()
    print(f"no-instance: a={no.a} b={no.b} global min={ground_energy(h)[0]:.4f} "
          f"product min={brute_force_product_min(h, no.bipartition):.4f} threshold={(no.a + no.b) / 2:.3f}")
    outcomes = Counter()
    lowest = np.inf
    for _ in range(args.proofs):
        v = slh_verifier(no, cheating_proof(no, rng), default_oracle(rng_seed=rng))
        sides = tuple(s.outcome if s else "-" for s in (v.side_a, v.side_b))
        outcomes[(v.accept, sides)] += 1
        if all(s in ("consistent", "-") for s in sides):
            lowest = min(lowest, v.energy)
    for (accept, sides), count in sorted(outcomes.items(), key=lambda kv: -kv[1]):
        print(f"  {count:3d} proofs  accept={accept}  A={sides[0]}  B={sides[1]}")
    print(f"lowest energy among consistent proofs: {lowest:.4f}")


if __name__ == "__main__":
    main()
