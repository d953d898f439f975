"""Amplitude sweep for slope blow-up, with a Riccati estimate for comparison.

Along characteristics the slope obeys m' ~ k m^2 with k = eps (delta - gamma) / (2 beta),
so breaking needs delta > gamma. The estimate t* ~ 1 / (|k| max|u_x(0)|) is a
rough guide only: the linear and nonlocal terms are ignored.

    python3 scripts/breaking_sweep.py configs/breaking.toml [--out out/breaking]
"""
import argparse
from dataclasses import replace
from pathlib import Path

import numpy as np

from wavelab.cli import cmd_breaking_search
from wavelab.config import load
from wavelab.model import breaking_indicator


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out", default="out/breaking")
    args = ap.parse_args()

    cfg = load(args.config)
    p = cfg.params
    k = p.epsilon * (p.delta - p.gamma) / (2 * p.beta)
    grid = cfg.grid.build()
    print(f"riccati coefficient k = {k:+.4g}")
    for amp in sorted(cfg.breaking.amps):
        ux = breaking_indicator(replace(cfg.ic, amp=amp).build(grid))
        est = np.inf if k == 0 or ux.max_abs_ux == 0 else 1 / (abs(k) * ux.max_abs_ux)
        print(f"  amp={amp:<8g} max|u_x(0)|={ux.max_abs_ux:<10.4g} riccati t*~{est:.4g}")

    out = Path(args.out)
    cmd_breaking_search(cfg, out)
    print((out / "breaking.csv").read_text())


if __name__ == "__main__":
    main()
