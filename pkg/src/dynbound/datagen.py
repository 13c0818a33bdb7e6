"""
Deterministic random boundary data with prescribed Sobolev regularity.

Randomness comes from numpy's counter-based Philox generator. The 128-bit key
packs the user seed with a stream tag (0 for a single field, k + 1 for forcing
sample k); coefficient ``(l, m)`` is the ``l*l + l + m``-th normal drawn from
that stream. Because the flat layout is degree-major, a degree-L draw is a prefix
of any higher-degree draw with the same key.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .sphharm import SpectralField, degree_orders, n_coeffs

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RoughSpec:
    s: float
    rho: float = 1.1
    L: int = 64
    seed: int = 0

    def __post_init__(self):
        if not self.rho > 1:
            raise ValueError("rho must exceed 1 for a finite expected H^s norm")
        if self.L < 0:
            raise ValueError("L must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


def _stream(seed: int, tag: int) -> np.random.Generator:
    key = ((tag & _MASK64) << 64) | (seed & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def decay_profile(spec: RoughSpec) -> np.ndarray:
    ls, _ = degree_orders(spec.L)
    return (1.0 + ls * (ls + 1.0)) ** (-(spec.s + spec.rho) / 2)


def expected_sq_norm(spec: RoughSpec, s_prime: float | None = None) -> float:
    """Closed-form E||f||^2 in H^{s'} (default s' = spec.s) at the spec's degree."""
    s_prime = spec.s if s_prime is None else s_prime
    l = np.arange(spec.L + 1.0)
    w = 1.0 + l * (l + 1.0)
    return float(np.sum((2 * l + 1) * w ** (s_prime - spec.s - spec.rho)))


def random_field(spec: RoughSpec) -> SpectralField:
    xi = _stream(spec.seed, 0).standard_normal(n_coeffs(spec.L))
    return SpectralField(spec.L, xi * decay_profile(spec))


def random_forcing(spec: RoughSpec, n_steps: int, T: float) -> np.ndarray:
    """Independent random fields at the ``n_steps + 1`` grid times on [0, T]."""
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if T < 0:
        raise ValueError("T must be non-negative")
    prof = decay_profile(spec)
    nc = n_coeffs(spec.L)
    out = np.empty((n_steps + 1, nc))
    for k in range(n_steps + 1):
        out[k] = _stream(spec.seed, k + 1).standard_normal(nc) * prof
    return out


def truncate(c: SpectralField, L_new: int) -> SpectralField:
    if L_new < 0:
        raise ValueError("degree must be non-negative")
    if L_new >= c.L:
        return c
    return SpectralField(L_new, c.coeffs[: n_coeffs(L_new)])


def derive_seed(seed: int, *path: int) -> int:
    """Child seed for a named sub-stream (slot, trial, ...), stable across platforms."""
    return int(np.random.SeedSequence([seed & _MASK64, *path]).generate_state(1, np.uint64)[0])
