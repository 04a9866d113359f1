"""Per-iteration sum rate of the SD-based WMMSE run on a few drops.

    python scripts/convergence.py --snr 20 --drops 0 1 2
    python scripts/convergence.py --config configs/tiny.ini --oracle

The ``--oracle`` reference replaces each quantized update with exhaustive
search over all codebook matrices, so it only fits very small systems.
"""

import argparse
from pathlib import Path

import numpy as np

from qprecode import harness

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "full.ini"))
    ap.add_argument("--snr", type=float, default=20.0)
    ap.add_argument("--drops", type=int, nargs="+", default=list(range(5)))
    ap.add_argument("--oracle", action="store_true")
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    config = harness.load_config(args.config)
    out = Path(args.out or config.output.directory)
    out.mkdir(parents=True, exist_ok=True)

    traces = []
    for drop in args.drops:
        rows = harness.run_convergence_trace(config, args.snr, drop, oracle=args.oracle)
        harness.emit_convergence_csv(rows, out / f"converge_drop{drop}.csv")
        traces.append([r["sum_rate"] for r in rows])
    traces = np.array(traces)
    mean = traces.mean(axis=0)

    print(f"mean sum rate over {len(args.drops)} drops at {args.snr:g} dB")
    for n, r in enumerate(mean):
        print(f"  iteration {n:2d}: {r:8.3f}")
    n = traces.shape[1] - 1
    if n >= 5:
        change = np.abs(traces[:, n] - traces[:, 5]) / traces[:, n]
        print(f"relative change iteration 5 -> {n}: " + ", ".join(f"{c:.2%}" for c in change))


if __name__ == "__main__":
    main()
