"""Pivot a tau-scan CSV into a markdown table (rows: r, C; columns: N)."""
import sys
from pathlib import Path

from levylab.svgplot import read_results


def main(path):
    rows = [r for r in read_results(Path(path).read_text()) if r["label"] == "p_tau_lt_1"]
    Ns = sorted({r["N"] for r in rows})
    cells = {(r["r"], r["C"], r["N"]): (r["value"], r["std_error"]) for r in rows}
    print("| r | C | " + " | ".join(f"N={n}" for n in Ns) + " |")
    print("|---|---|" + "---|" * len(Ns))
    for r, C in sorted({(k[0], k[1]) for k in cells}):
        vals = " | ".join(f"{cells[(r, C, n)][0]:.4f} ± {cells[(r, C, n)][1]:.4f}" for n in Ns)
        print(f"| {r:g} | {C:g} | {vals} |")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "results/tau_scan.csv")
