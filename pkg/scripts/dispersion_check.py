"""Measure phase speeds of small-amplitude single modes against the linear relation.

    python3 scripts/dispersion_check.py [--amp 1e-5] [--t-end 0.5] [--n 64]
"""
import argparse

import numpy as np

from wavelab.model import ModelParams, dispersion_relation
from wavelab.spectral import Grid
from wavelab.timestep import StepperConfig, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--amp", type=float, default=1e-5)
    ap.add_argument("--t-end", type=float, default=0.5)
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--dt", type=float, default=1e-3)
    args = ap.parse_args()

    g = Grid(2 * np.pi, args.n)
    p = ModelParams()
    print(f"{'k':>3} {'measured':>14} {'linear':>14} {'rel err':>10}")
    for k in (1, 2, 4, 8, 16):
        u0 = g.sample(lambda x: args.amp * np.cos(k * x))
        # keep the phase change below pi so angle() does not wrap
        t_end = min(args.t_end, 3.0 / abs(dispersion_relation(k, p)))
        u1 = integrate(u0, p, StepperConfig(dt=min(args.dt, t_end), t_end=t_end)).final
        ratio = np.fft.fft(u1.values)[k] / np.fft.fft(u0.values)[k]
        measured = -np.angle(ratio) / (k * t_end)
        linear = dispersion_relation(k, p) / k
        print(f"{k:>3} {measured:>14.10f} {linear:>14.10f} {abs(measured - linear) / abs(linear):>10.2e}")


if __name__ == "__main__":
    main()
