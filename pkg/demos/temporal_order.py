"""Second-order accuracy in time, seen on a coarse grid.

Runs the double-well accuracy problem with halving time steps, once with the
second-order extrapolation and once with first-order (lagged) coefficients.
The differences between consecutive runs shrink by about 4 and 2 per halving.

    python demos/temporal_order.py              # 16^2, under a minute
"""
import argparse

from binmix.presets import preset_config
from binmix.runner import refinement_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=16)
    args = ap.parse_args()
    cfg = preset_config("accuracy").update("grid", Nx=args.n, Ny=args.n).update("time", t_end=0.04)
    levels = [0.02, 0.01, 0.005, 0.0025]
    for order in (2, 1):
        print(f"\ncoefficient extrapolation of order {order}")
        print(f"{'dt':>8} {'diff rho1':>11} {'order':>6} {'diff u':>11} {'order':>6}")
        for r in refinement_study(cfg, "time", levels, order=order):
            print(f"{r['level']:8.4f} {r.get('diff_rho1', float('nan')):11.3e} "
                  f"{r.get('order_rho1', float('nan')):6.2f} {r.get('diff_u', float('nan')):11.3e} "
                  f"{r.get('order_u', float('nan')):6.2f}")


if __name__ == "__main__":
    main()
