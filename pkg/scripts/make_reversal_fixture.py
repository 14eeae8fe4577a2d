"""Regenerate the AUC-reversal curve pair shipped in ``utileval/data``.

Usage: python3 scripts/make_reversal_fixture.py [output_dir]
"""
import json
import sys
from pathlib import Path

from utileval.fileio import write_curve_csv
from utileval.roc import (
    FIXTURE_CONTEXT,
    auc,
    binormal_curve,
    optimal_operating_point,
    search_reversal_pair,
)

N_POINTS = 41


def main(out: Path) -> None:
    pa, pb = search_reversal_pair(FIXTURE_CONTEXT, n=N_POINTS)
    meta = {
        "model": "t = Phi(a + b * Phi^-1(f)) on equally spaced f",
        "n_points": N_POINTS,
        "utility": FIXTURE_CONTEXT.utility.entries.tolist(),
        "balance": FIXTURE_CONTEXT.balance,
        "curves": {},
    }
    for tag, (a, b) in (("a", pa), ("b", pb)):
        curve = binormal_curve(a, b, n=N_POINTS)
        write_curve_csv(curve, out / f"auc_reversal_{tag}.csv")
        op = optimal_operating_point(curve, FIXTURE_CONTEXT)
        meta["curves"][tag] = {
            "a": a,
            "b": b,
            "auc": auc(curve),
            "optimal_fpr": op.fpr,
            "optimal_tpr": op.tpr,
            "optimal_yield": op.utility_yield,
        }
    (out / "auc_reversal.json").write_text(json.dumps(meta, indent=2) + "\n")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "utileval" / "data"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
