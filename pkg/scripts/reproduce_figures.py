"""Write the analytic curve tables behind both figures into an output directory.

    python scripts/reproduce_figures.py --out-dir results/
"""

import argparse
from pathlib import Path

from onebit_dmt.cli import run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default="results")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = {
        "figure2.csv": ["figure2", "--r-grid", ",".join(f"{k / 50:g}" for k in range(101))],
        "figure3.csv": ["figure3", "-D", ",".join(str(d) for d in range(1, 16))],
        "figure3_printed.csv": ["figure3", "-D", ",".join(str(d) for d in range(1, 16)), "--variant", "printed_exmp2"],
        "curve_miso.csv": ["curve", "-M", "3", "-N", "1", "-l", "10", "-D", "1,2,4,8,inf"],
    }
    for name, argv in jobs.items():
        code = run(argv + ["--out", str(out / name)])
        if code:
            raise SystemExit(code)
        print(f"wrote {out / name}")


if __name__ == "__main__":
    main()
