"""Run one config, write CSV + config echo + SVG into results/, print a table.

    python scripts/run_experiment.py configs/tau_scan.cfg [--workers 4]
"""
import argparse
import sys
from pathlib import Path

from levylab.harness import load_config, run_experiment, write_results
from levylab.svgplot import PLOT_KINDS, emit_plot

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("config", type=Path)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--outdir", type=Path, default=ROOT / "results")
    args = ap.parse_args()

    cfg = load_config(args.config.read_text(), [f"workers={args.workers}"], str(args.config))
    rs = run_experiment(cfg)
    stem = args.config.stem
    csv_path = args.outdir / f"{stem}.csv"
    write_results(rs, csv_path)
    if cfg.kind in PLOT_KINDS:
        emit_plot(csv_path, cfg.kind, args.outdir / f"{stem}.svg")

    for row in rs.sorted_rows():
        params = " ".join(f"{k}={getattr(row, k)}" for k in ("r", "C", "N", "n")
                          if getattr(row, k) is not None)
        se = "" if row.std_error is None else f" +- {row.std_error:.4f}"
        print(f"{row.label:<24} {params:<32} {row.value:.6g}{se}")
    print(f"[{cfg.kind}] {len(rs.rows)} rows in {rs.wall_seconds:.1f}s -> {csv_path}")
    if rs.passed is False:
        print("failures:", *rs.failures, sep="\n  ", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
