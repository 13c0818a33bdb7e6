"""
Diagonal operator symbols on the unit sphere and harmonic extension into the ball.

Every operator here acts on degree-l harmonics by a scalar ``symbol(l)``.
On the unit ball the harmonic extension of ``Y_{l,m}`` is ``r**l Y_{l,m}``, so
the Dirichlet-to-Neumann map has symbol ``l`` and the composite
``-(surface Laplacian)(normal derivative)`` has symbol ``l**2 (l + 1)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .sphharm import (
    SpectralField,
    SphGrid,
    degree_orders,
    synthesize,
    ylm_matrix,
)


@dataclass(frozen=True)
class Multiplier:
    name: str
    symbol: Callable[[np.ndarray], np.ndarray]

    def weights(self, L: int) -> np.ndarray:
        """Symbol evaluated on every coefficient slot of a degree-L field."""
        ls, _ = degree_orders(L)
        w = np.asarray(self.symbol(ls.astype(float)), dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError(f"multiplier {self.name} is not finite up to degree {L}")
        return w


def laplace_beltrami_symbol(l):
    return -l * (l + 1)


def dtn_symbol(l):
    return l * 1.0


def third_order_symbol(l):
    return l * l * (l + 1)


def sobolev_weight(l, s: float):
    """Weight of the H^s norm (not squared): (1 + l(l+1))**(s/2)."""
    return (1.0 + l * (l + 1)) ** (s / 2)


laplace_beltrami = Multiplier("laplace_beltrami", laplace_beltrami_symbol)
dtn = Multiplier("dtn", dtn_symbol)
third_order = Multiplier("third_order", third_order_symbol)


def sobolev(s: float) -> Multiplier:
    return Multiplier(f"sobolev:{s:g}", lambda l: sobolev_weight(l, s))


def multiplier_by_name(name: str) -> Multiplier:
    """Catalog lookup: ``dtn``, ``laplace_beltrami``, ``third_order``, ``sobolev:<s>``."""
    fixed = {m.name: m for m in (laplace_beltrami, dtn, third_order)}
    if name in fixed:
        return fixed[name]
    if name.startswith("sobolev:"):
        try:
            s = float(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad Sobolev order in {name!r}") from None
        return sobolev(s)
    raise ValueError(f"unknown multiplier {name!r}; known: {sorted(fixed)} and sobolev:<s>")


def apply_multiplier(mu: Multiplier, c: SpectralField) -> SpectralField:
    return SpectralField(c.L, mu.weights(c.L) * c.coeffs)


def dtn_of(c: SpectralField) -> SpectralField:
    """Normal derivative at r=1 of the harmonic extension of ``c``."""
    return apply_multiplier(dtn, c)


def sobolev_norm(c: SpectralField, s: float) -> float:
    if not -2.0 <= s <= 4.0:
        raise ValueError(f"Sobolev order {s} outside the supported range [-2, 4]")
    ls, _ = degree_orders(c.L)
    return float(np.sqrt(np.sum((1.0 + ls * (ls + 1.0)) ** s * c.coeffs**2)))


def spectral_seminorm(c: SpectralField, sigma: float) -> float:
    """Spectral seminorm sqrt(sum ((1+l(l+1))**sigma - 1) c**2); vanishes on constants."""
    ls, _ = degree_orders(c.L)
    w = (1.0 + ls * (ls + 1.0)) ** sigma - 1.0
    return float(np.sqrt(np.sum(w * c.coeffs**2)))


def gagliardo_seminorm(c: SpectralField, sigma: float, grid: SphGrid) -> float:
    """Double-quadrature Gagliardo seminorm with chordal distance, diagonal excluded.

    Approximates sqrt( int int |u(x)-u(y)|^2 / |x-y|^(2+2 sigma) dx dy ).
    """
    if not 0.0 < sigma < 1.0:
        raise ValueError(f"sigma must lie in (0, 1), got {sigma}")
    u = synthesize(c, grid).values
    xyz = grid.cartesian()
    w = grid.weights
    total = 0.0
    # row blocks keep the pair matrix bounded in memory
    block = max(1, 4_000_000 // max(grid.size, 1))
    for start in range(0, grid.size, block):
        sl = slice(start, start + block)
        d2 = np.sum((xyz[sl, None, :] - xyz[None, :, :]) ** 2, axis=-1)
        du2 = (u[sl, None] - u[None, :]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(d2 > 0, du2 / d2 ** (1.0 + sigma), 0.0)
        total += float(w[sl] @ k @ w)
    return float(np.sqrt(total))


@dataclass(frozen=True)
class BallPoint:
    r: float
    colatitude: float
    longitude: float

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"ball points need 0 <= r <= 1, got {self.r}")


def solid_harmonic_values(c: SpectralField, r, theta, phi) -> np.ndarray:
    """Evaluate sum c_lm r^l Y_lm at arrays of points (any r, no range check)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta, phi, r = np.broadcast_arrays(np.atleast_1d(theta), np.atleast_1d(phi), r)
    ls, _ = degree_orders(c.L)
    Y = ylm_matrix(c.L, theta.ravel(), phi.ravel())
    radial = r.ravel()[:, None] ** ls[None, :]
    return ((Y * radial) @ c.coeffs).reshape(r.shape)


def extend_harmonic(c: SpectralField, p: BallPoint) -> float:
    return float(solid_harmonic_values(c, p.r, p.colatitude, p.longitude)[0])


def ball_norms(c: SpectralField) -> tuple[float, float]:
    """L2 and H1 norms over the unit ball of the harmonic extension.

    Radial integrals are exact: int_0^1 r^(2l+2) dr = 1/(2l+3), and the
    Dirichlet integral equals the boundary pairing sum l c^2.
    """
    ls, _ = degree_orders(c.L)
    l2 = np.sum(c.coeffs**2 / (2 * ls + 3.0))
    dirichlet = np.sum(ls * c.coeffs**2)
    return float(np.sqrt(l2)), float(np.sqrt(l2 + dirichlet))


def dirichlet_energy(c: SpectralField) -> float:
    ls, _ = degree_orders(c.L)
    return float(np.sum(ls * c.coeffs**2))
