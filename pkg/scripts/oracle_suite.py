"""Randomized cross-check of the closed-form statistics against the Fock-space oracle.

    python scripts/oracle_suite.py [--trials 1000] [--seed 0] [--max-modes 4]

Each trial draws a random spectrum in [0, 1], random quadrature-orthonormal
modes and two random envelopes, optionally with weight outside the retained
modes. Exits non-zero if any deviation exceeds the tolerance.
"""
import argparse
import sys

import numpy as np

from tripod_hom import (
    SchmidtDecomposition,
    TwoPhotonInput,
    analytic_statistics,
    fock_oracle,
    make_grid,
    mode_envelope,
)
from tripod_hom.interference import MAX_ORACLE_MODES


def random_trial(rng, max_modes):
    K = int(rng.integers(1, max_modes + 1))
    n = int(rng.integers(K + 2, 24))
    grid = make_grid(n, float(rng.uniform(0.5, 2.0)))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    modes = q / np.sqrt(grid.weights)[:, None]
    full = SchmidtDecomposition(np.sort(rng.uniform(0, 1, n))[::-1], modes, grid)
    envelopes = []
    for _ in range(2):
        c = np.zeros(n, dtype=complex)
        # leak a little weight into modes the analysis will drop
        k = K + int(rng.integers(0, 2))
        c[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
        envelopes.append(mode_envelope(full, c / np.linalg.norm(c)))
    return TwoPhotonInput(*envelopes, full.truncated(K)), K


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--trials", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-modes", type=int, default=4, choices=range(1, MAX_ORACLE_MODES + 1))
    parser.add_argument("--tolerance", type=float, default=1e-8)
    args = parser.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for trial in range(args.trials):
        inp, K = random_trial(rng, args.max_modes)
        a = analytic_statistics(inp, K, truncation_bound=2.0)
        o = fock_oracle(inp, K)
        dev = max(a.max_deviation(o), float(np.abs(a.rho2 - o.rho2).max()))
        if dev > args.tolerance:
            print(f"trial {trial}: deviation {dev:.3e} (K={K})", file=sys.stderr)
            return 1
        worst = max(worst, dev)
    print(f"{args.trials} trials, seed {args.seed}: max deviation {worst:.3e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
