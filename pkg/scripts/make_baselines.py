"""Regenerate the regression baselines in tests/baselines/.

Each baseline is validated before it is written: grid refinement for
spectra, the Fock-space oracle for interference curves.

    python scripts/make_baselines.py [--outdir tests/baselines]
"""
import argparse
import json
from pathlib import Path

import numpy as np

from tripod_hom import (
    TwoPhotonInput,
    analytic_statistics,
    decompose,
    delay_sweep,
    fock_oracle,
    gaussian_envelope,
    kernel_fast_memory,
    kernel_gaussian_toy,
    make_grid,
    schmidt_number,
)

ROOT = Path(__file__).resolve().parents[1]


def gaussian_toy_baseline():
    T_W, sigma, mu1 = 1.0, 0.1, 0.9
    coarse = decompose(kernel_gaussian_toy(make_grid(64, T_W), sigma * T_W, mu1))
    fine = decompose(kernel_gaussian_toy(make_grid(128, T_W), sigma * T_W, mu1))
    drift = np.abs(coarse.eigenvalues[:5] / fine.eigenvalues[:5] - 1).max()
    assert drift < 1e-6, drift
    return {
        "T_W": T_W, "sigma": sigma, "mu1": mu1, "n": 64, "rule": "gauss-legendre",
        "eigenvalues": coarse.eigenvalues[:10].tolist(),
        "lambda2_over_lambda1": float(coarse.eigenvalues[1] / coarse.eigenvalues[0]),
        "schmidt_number": schmidt_number(coarse),
        "refinement_drift_top5": float(drift),
    }


def dominant_mode_baseline(L_values=(0.5, 1.0, 2.0, 4.0, 8.0), T_W=1.0, n=64, nz=64):
    points = []
    for L in L_values:
        lam = decompose(kernel_fast_memory(make_grid(n, T_W), L, nz)).eigenvalues
        fine = decompose(kernel_fast_memory(make_grid(2 * n, T_W), L, 2 * nz)).eigenvalues
        assert abs(lam[0] / fine[0] - 1) < 1e-9
        lam2 = float(lam[1]) if lam.size > 1 else 0.0
        points.append({"L": L, "T_W": T_W, "lambda_1": float(lam[0]), "lambda_2": lam2,
                       "ratio": lam2 / float(lam[0]), "spectrum": lam[:5].tolist()})
    chosen = [p for p in points if p["lambda_1"] >= 0.8 and p["ratio"] <= 0.3]
    assert chosen, "no single-dominant-mode point in the sweep"
    return {"n": n, "nz": nz, "points": points, "dominant_point": chosen[0]}


def fast_memory_dip_baseline(L=4.0, T_W=1.0, n=64, nz=64, center=0.25, width=1 / 16):
    grid = make_grid(n, T_W)
    dec = decompose(kernel_fast_memory(grid, L, nz), cutoff=0.0)
    base = gaussian_envelope(grid, center * T_W, width * T_W)
    delays = np.linspace(0.0, 0.5, 11)
    points = delay_sweep(dec, base, delays)
    # oracle spot checks: modes beyond the sixth carry lambda < 1e-11 and count as lost
    spot = []
    for d in delays[::2][:5]:
        moved, _ = base.shifted(float(d))
        inp = TwoPhotonInput(base, moved, dec)
        dev = analytic_statistics(inp).max_deviation(fock_oracle(inp, 6))
        assert dev <= 1e-8, (d, dev)
        spot.append({"delay": float(d), "max_deviation": dev})
    return {
        "L": L, "T_W": T_W, "n": n, "nz": nz, "center": center, "width": width,
        "rows": [{"delay": p.delay, "coincidence": p.metrics.coincidence,
                  "total_efficiency": p.metrics.total_efficiency,
                  "noon_fidelity": p.metrics.noon_fidelity, "overlap": p.overlap} for p in points],
        "oracle_spot_checks": spot,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--outdir", default=str(ROOT / "tests" / "baselines"))
    args = parser.parse_args()
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    for name, build in [("gaussian_toy", gaussian_toy_baseline),
                        ("dominant_mode", dominant_mode_baseline),
                        ("fast_memory_dip", fast_memory_dip_baseline)]:
        data = build()
        (outdir / f"{name}.json").write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        print(f"wrote {outdir / name}.json")


if __name__ == "__main__":
    main()
