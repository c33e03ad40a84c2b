"""Dimensionless parameters of the methane/n-decane droplet from SI inputs."""
from binmix.nondim import METHANE_DECANE_SCALES, methane_decane_physical, nondimensionalize


def main():
    s = METHANE_DECANE_SCALES
    print(f"scales: t0={s.t0:g} s, l0={s.l0:g} m, rho0={s.rho0:g} kg/m^3, "
          f"n0={s.n0:g} mol/m^3, T0={s.T0:g} K\n")
    for name, value in nondimensionalize(s, methane_decane_physical()).items():
        text = ", ".join(f"{v:.6g}" for v in value) if isinstance(value, tuple) else f"{value:.6g}"
        print(f"{name:>12} = {text}")


if __name__ == "__main__":
    main()
