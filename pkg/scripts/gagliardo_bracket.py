"""Ratio of the quadrature Gagliardo seminorm to the spectral one.

Prints the range over random rough fields and the exact single-mode ratios
(from the Funk-Hecke reduction) that bound it from above.
"""
import argparse

import numpy as np
from scipy.integrate import quad
from scipy.special import eval_legendre

from dynbound.calculus import gagliardo_seminorm, spectral_seminorm
from dynbound.datagen import RoughSpec, random_field
from dynbound.sphharm import SpectralField, build_grid


def exact_mode_ratio(l: int, sigma: float) -> float:
    integrand = lambda t: (1 - eval_legendre(l, t)) / (2 - 2 * t) ** (1 + sigma)
    val = quad(integrand, -1, 1, limit=200)[0]
    w = (1 + l * (l + 1)) ** sigma - 1
    return float(np.sqrt(4 * np.pi * val / w))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--L", type=int, default=16)
    ap.add_argument("--sigma", type=float, default=0.5)
    ap.add_argument("--fields", type=int, default=100)
    args = ap.parse_args()

    grid = build_grid(args.L)
    ratios = [gagliardo_seminorm(c, args.sigma, grid) / spectral_seminorm(c, args.sigma)
              for c in (random_field(RoughSpec(0.5, 1.1, args.L, k)) for k in range(args.fields))]
    print(f"rough fields: min {min(ratios):.4f}  max {max(ratios):.4f}")
    for l in (1, 2, 4, 8, args.L):
        q = gagliardo_seminorm(SpectralField.single(args.L, l, 0), args.sigma, grid)
        q /= spectral_seminorm(SpectralField.single(args.L, l, 0), args.sigma)
        print(f"l={l:3d}: exact {exact_mode_ratio(l, args.sigma):.4f}  quadrature {q:.4f}")


if __name__ == "__main__":
    main()
