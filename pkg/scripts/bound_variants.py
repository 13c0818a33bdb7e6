"""How often the sharper energy-bound variants hold on random forced runs, by horizon."""
import argparse

from dynbound.analysis import bound_report, rough_data
from dynbound.datagen import derive_seed
from dynbound.evolve import EvolveParams, solve


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--L", type=int, default=16)
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--T", type=float, nargs="+", default=[1.0, 5.0, 20.0])
    ap.add_argument("--kappa", type=float, default=1.0)
    args = ap.parse_args()

    for T in args.T:
        p = EvolveParams(args.kappa, T, max(2, int(100 * T)), args.L)
        counts = {"asserted": 0, "kinetic_without_half": 0, "exponential_half_rate": 0}
        for k in range(args.runs):
            rep = bound_report(solve(rough_data(p, derive_seed(7, k)), p))
            counts["asserted"] += all(rep.holds().values())
            for name, ok in rep.sharp_variants().items():
                counts[name] += ok
        print(f"T={T:g}: " + ", ".join(f"{k} {v}/{args.runs}" for k, v in counts.items()))


if __name__ == "__main__":
    main()
