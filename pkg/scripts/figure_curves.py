"""Write the two limiting curves below threshold (test error and KL) as CSV.

Usage: python3 scripts/figure_curves.py [outdir]
"""
import sys
from pathlib import Path

from spiked_wigner.cli import main


def run(outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    grid = ["--lambda-min", "0", "--lambda-max", "0.99", "--lambda-steps", "100"]
    main(["detect-curve", *grid, "--out", str(outdir / "error_curve.csv")])
    main(["correction-curve", *grid, "--out", str(outdir / "kl_curve.csv")])
    main(["rs-curve", "--lambda-min", "0", "--lambda-max", "3", "--lambda-steps", "61",
          "--out", str(outdir / "rs_curve.csv")])
    for rho in ("0.05", "0.3"):
        main(["rs-curve", "--prior", f"sparse:{rho}", "--lambda-min", "0.5", "--lambda-max", "1.5",
              "--lambda-steps", "101", "--out", str(outdir / f"rs_curve_sparse{rho}.csv")])


if __name__ == "__main__":
    run(Path(sys.argv[1] if len(sys.argv) > 1 else "results/curves"))
