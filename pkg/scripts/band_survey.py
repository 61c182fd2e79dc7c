#!/usr/bin/env python
"""Survey bands, winding numbers, and global Berry phases for all presets.

Writes per-preset bands.csv / winding.json / berry.json under --out
(default: results/band_survey/<preset>/) and prints a summary table.
"""

import argparse
import json
import math
from pathlib import Path

from nhknot import cli


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="results/band_survey")
    ap.add_argument("--grid", type=int, default=1024)
    args = ap.parse_args()

    rows = []
    for preset in ("unlink", "unknot", "hopf_link"):
        out = Path(args.out) / preset
        out.mkdir(parents=True, exist_ok=True)
        cfg = {"preset": preset, "grid": args.grid}
        cli.cmd_bands(cfg, out)
        cli.cmd_winding(cfg, out)
        cli.cmd_berry(cfg, out)
        winding = json.loads((out / "winding.json").read_text())
        phase = json.loads((out / "berry.json").read_text())
        rows.append((preset, winding["nu"], phase["Q_raw"] / math.pi,
                     phase["parity"]))

    print(f"{'preset':<12}{'nu':>4}{'Q/pi':>10}{'parity':>8}")
    for preset, nu, q_over_pi, parity in rows:
        print(f"{preset:<12}{nu:>4}{q_over_pi:>10.4f}{parity:>8}")
    print(f"outputs under {args.out}/")


if __name__ == "__main__":
    main()
