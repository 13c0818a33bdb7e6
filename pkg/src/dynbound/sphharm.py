"""
Real spherical-harmonic analysis and synthesis on the unit sphere.

Coefficients are stored flat in degree-major order, ``index = l*l + l + m``
for ``-l <= m <= l``, so a degree-``L`` field holds ``(L+1)**2`` numbers and
the coefficients of any lower degree form a prefix.

Basis convention (no Condon-Shortley phase)::

    Y_{l,0}   = P_l^0(cos theta)
    Y_{l,m}   = sqrt(2) P_l^m(cos theta) cos(m phi),   m > 0
    Y_{l,-m}  = sqrt(2) P_l^m(cos theta) sin(m phi),   m > 0

where ``P_l^m`` are the associated Legendre functions normalised so that
every ``Y_{l,m}`` has unit L2 norm on the sphere.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

MAX_DEGREE = 4096

_NEWTON_TOL = 1e-15


class GridError(ValueError):
    """Grid cannot represent the requested degree."""


def n_coeffs(L: int) -> int:
    return (L + 1) ** 2


def lm_index(l: int, m: int) -> int:
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l, got l={l}, m={m}")
    return l * l + l + m


def degree_orders(L: int) -> tuple[np.ndarray, np.ndarray]:
    """Degree and order arrays matching the flat coefficient layout."""
    ls = np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1)
    ms = np.concatenate([np.arange(-l, l + 1) for l in range(L + 1)])
    return ls, ms


def degree_of_size(size: int) -> int:
    L = int(round(np.sqrt(size))) - 1
    if (L + 1) ** 2 != size:
        raise ValueError(f"{size} is not a complete (L+1)^2 coefficient count")
    return L


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real coefficients ``c[l, m]`` of a band-limited function on the sphere."""

    L: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if self.L < 0:
            raise ValueError("degree must be non-negative")
        if c.size != n_coeffs(self.L):
            raise ValueError(
                f"degree {self.L} needs {n_coeffs(self.L)} coefficients, got {c.size}"
            )
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, L: int) -> "SpectralField":
        return cls(L, np.zeros(n_coeffs(L)))

    @classmethod
    def single(cls, L: int, l: int, m: int, value: float = 1.0) -> "SpectralField":
        c = np.zeros(n_coeffs(L))
        c[lm_index(l, m)] = value
        return cls(L, c)

    def __getitem__(self, lm: tuple[int, int]) -> float:
        l, m = lm
        if l > self.L:
            return 0.0
        return float(self.coeffs[lm_index(l, m)])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        L = max(self.L, other.L)
        return SpectralField(L, self.padded(L).coeffs + other.padded(L).coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.L, scalar * self.coeffs)

    __rmul__ = __mul__

    def padded(self, L: int) -> "SpectralField":
        """Same function, stored at degree ``L >= self.L``."""
        if L < self.L:
            raise ValueError("padding cannot lower the degree; use truncate")
        if L == self.L:
            return self
        c = np.zeros(n_coeffs(L))
        c[: self.coeffs.size] = self.coeffs
        return SpectralField(L, c)

    def to_csv(self, path) -> None:
        ls, ms = degree_orders(self.L)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["l", "m", "coeff"])
            for l, m, c in zip(ls, ms, self.coeffs):
                w.writerow([int(l), int(m), repr(float(c))])

    @classmethod
    def from_csv(cls, path) -> "SpectralField":
        rows = _read_rows(path, ["l", "m", "coeff"])
        if not rows:
            return cls.zeros(0)
        L = max(int(r["l"]) for r in rows)
        c = np.zeros(n_coeffs(L))
        for r in rows:
            c[lm_index(int(r["l"]), int(r["m"]))] = float(r["coeff"])
        return cls(L, c)


@dataclass(frozen=True, eq=False)
class SphGrid:
    """Gauss-Legendre in cos(colatitude) times uniform longitude."""

    L: int
    n_lat: int
    n_lon: int
    theta: np.ndarray = field(repr=False)
    phi: np.ndarray = field(repr=False)
    lat_weights: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n_lat * self.n_lon

    @property
    def nodes(self) -> np.ndarray:
        """(colatitude, longitude) pairs, latitude-major."""
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return np.column_stack([th.ravel(), ph.ravel()])

    @property
    def weights(self) -> np.ndarray:
        return np.repeat(self.lat_weights, self.n_lon) * (2 * np.pi / self.n_lon)

    def cartesian(self) -> np.ndarray:
        th, ph = self.nodes.T
        st = np.sin(th)
        return np.column_stack([st * np.cos(ph), st * np.sin(ph), np.cos(th)])

    @cached_property
    def _legendre(self) -> list[np.ndarray]:
        # _legendre[m] has shape (n_lat, L - m + 1): rows are latitudes, columns l = m..L
        return normalized_legendre(self.L, np.cos(self.theta), np.sin(self.theta))

    @cached_property
    def _trig(self) -> tuple[np.ndarray, np.ndarray]:
        m = np.arange(self.L + 1)
        arg = np.outer(m, self.phi)
        return np.cos(arg), np.sin(arg)

    def check_degree(self, L: int) -> None:
        if L > self.L:
            raise GridError(f"grid built for degree {self.L} cannot resolve degree {L}")


@dataclass(frozen=True, eq=False)
class GridField:
    grid: SphGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size != self.grid.size:
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def as_2d(self) -> np.ndarray:
        return self.values.reshape(self.grid.n_lat, self.grid.n_lon)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "phi", "value"])
            for (th, ph), v in zip(self.grid.nodes, self.values):
                w.writerow([repr(float(th)), repr(float(ph)), repr(float(v))])

    @classmethod
    def from_csv(cls, path, grid: SphGrid) -> "GridField":
        rows = _read_rows(path, ["theta", "phi", "value"])
        nodes = np.array([[float(r["theta"]), float(r["phi"])] for r in rows])
        if nodes.shape != grid.nodes.shape or not np.allclose(nodes, grid.nodes, atol=1e-14):
            raise ValueError("file nodes do not match the supplied grid")
        return cls(grid, np.array([float(r["value"]) for r in rows]))


def _read_rows(path, header: list[str]) -> list[dict]:
    with open(Path(path), newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != header:
            raise ValueError(f"{path}: expected header {','.join(header)}, got {reader.fieldnames}")
        return list(reader)


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes (ascending) and weights of the n-point Gauss-Legendre rule on [-1, 1].

    Newton iteration on P_n started from Chebyshev-like guesses.
    """
    if n < 1:
        raise ValueError("need at least one node")
    k = np.arange(1, n + 1)
    x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
    for _ in range(100):
        p0, p1 = np.ones_like(x), x.copy()
        for j in range(2, n + 1):
            p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
        dp = n * (x * p1 - p0) / (x * x - 1)
        dx = p1 / dp
        x = x - dx
        if np.max(np.abs(dx)) < _NEWTON_TOL:
            break
    p0, p1 = np.ones_like(x), x.copy()
    for j in range(2, n + 1):
        p0, p1 = p1, ((2 * j - 1) * x * p1 - (j - 1) * p0) / j
    dp = n * (x * p1 - p0) / (x * x - 1)
    w = 2.0 / ((1 - x * x) * dp * dp)
    order = np.argsort(x)
    return x[order], w[order]


def normalized_legendre(L: int, x: np.ndarray, s: np.ndarray | None = None) -> list[np.ndarray]:
    """Orthonormal associated Legendre values for all m <= l <= L.

    Returns a list indexed by m; entry m has shape ``(len(x), L - m + 1)``.
    Includes the 1/sqrt(4 pi) factor of the sphere normalisation, but not the
    sqrt(2) of the real m != 0 harmonics.
    """
    x = np.asarray(x, dtype=float)
    if s is None:
        s = np.sqrt(np.clip(1 - x * x, 0.0, None))
    out = []
    pmm = np.full(x.shape, 1.0 / np.sqrt(4 * np.pi))
    for m in range(L + 1):
        if m > 0:
            pmm = pmm * np.sqrt((2 * m + 1) / (2 * m)) * s
        col = np.empty(x.shape + (L - m + 1,))
        col[..., 0] = pmm
        if m < L:
            col[..., 1] = np.sqrt(2 * m + 3) * x * pmm
        for l in range(m + 2, L + 1):
            a = np.sqrt((4 * l * l - 1) / (l * l - m * m))
            b = np.sqrt(((l - 1) ** 2 - m * m) / (4 * (l - 1) ** 2 - 1))
            col[..., l - m] = a * (x * col[..., l - m - 1] - b * col[..., l - m - 2])
        out.append(col)
    return out


def ylm_matrix(L: int, theta, phi) -> np.ndarray:
    """Real harmonics up to degree L at arbitrary points, shape ``(npts, (L+1)**2)``."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    phi = np.atleast_1d(np.asarray(phi, dtype=float))
    theta, phi = np.broadcast_arrays(theta, phi)
    plm = normalized_legendre(L, np.cos(theta), np.sin(theta))
    Y = np.empty(theta.shape + (n_coeffs(L),))
    for m in range(L + 1):
        ls = np.arange(m, L + 1)
        if m == 0:
            Y[..., ls * ls + ls] = plm[0]
        else:
            Y[..., ls * ls + ls + m] = np.sqrt(2) * plm[m] * np.cos(m * phi)[..., None]
            Y[..., ls * ls + ls - m] = np.sqrt(2) * plm[m] * np.sin(m * phi)[..., None]
    return Y


def build_grid(L: int, max_degree: int = MAX_DEGREE) -> SphGrid:
    """Grid on which quadrature is exact for polynomial degree up to 2L."""
    if L < 0:
        raise ValueError("degree must be non-negative")
    if L > max_degree:
        raise GridError(f"degree {L} exceeds the configured cap {max_degree}")
    n_lat, n_lon = L + 1, 2 * L + 1
    x, w = gauss_legendre(n_lat)
    theta = np.arccos(x)[::-1]  # north to south
    w = w[::-1]
    phi = 2 * np.pi * np.arange(n_lon) / n_lon
    return SphGrid(L, n_lat, n_lon, theta, phi, w)


def synthesize(c: SpectralField, grid: SphGrid) -> GridField:
    grid.check_degree(c.L)
    L = c.L
    plm = grid._legendre
    cosm, sinm = grid._trig
    a = np.zeros((grid.n_lat, L + 1))
    b = np.zeros((grid.n_lat, L + 1))
    for m in range(L + 1):
        ls = np.arange(m, L + 1)
        p = plm[m][:, : L - m + 1]
        if m == 0:
            a[:, 0] = p @ c.coeffs[ls * ls + ls]
        else:
            a[:, m] = np.sqrt(2) * (p @ c.coeffs[ls * ls + ls + m])
            b[:, m] = np.sqrt(2) * (p @ c.coeffs[ls * ls + ls - m])
    values = a @ cosm[: L + 1] + b @ sinm[: L + 1]
    return GridField(grid, values)


def analyze(v: GridField, L: int | None = None) -> SpectralField:
    """Quadrature projection onto the harmonics of degree <= L (default grid degree)."""
    grid = v.grid
    L = grid.L if L is None else L
    grid.check_degree(L)
    plm = grid._legendre
    cosm, sinm = grid._trig
    dphi = 2 * np.pi / grid.n_lon
    vals = v.as_2d()
    # longitude sums per ring, weighted by latitude weights
    ac = (vals @ cosm[: L + 1].T) * dphi * grid.lat_weights[:, None]
    as_ = (vals @ sinm[: L + 1].T) * dphi * grid.lat_weights[:, None]
    c = np.zeros(n_coeffs(L))
    for m in range(L + 1):
        ls = np.arange(m, L + 1)
        p = plm[m][:, : L - m + 1]
        if m == 0:
            c[ls * ls + ls] = ac[:, 0] @ p
        else:
            c[ls * ls + ls + m] = np.sqrt(2) * (ac[:, m] @ p)
            c[ls * ls + ls - m] = np.sqrt(2) * (as_[:, m] @ p)
    return SpectralField(L, c)


def quadrature(v: GridField) -> float:
    return float(np.sum(v.as_2d() * v.grid.lat_weights[:, None]) * (2 * np.pi / v.grid.n_lon))
