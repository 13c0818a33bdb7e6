"""
Mode-by-mode time evolution of the boundary system.

In the harmonic basis every coefficient obeys an independent forced oscillator

    x'' + omega_l**2 x = g(t),    omega_l**2 = kappa * l**2 (l + 1),

and the forcing is modelled as piecewise linear between its time samples.
``step_exact`` integrates that model with no truncation error for any
``omega * h``; ``step_verlet`` is a plain second-order scheme kept only as an
independent cross-check.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .calculus import third_order_symbol
from .sphharm import SpectralField, degree_orders, n_coeffs

# below this phase the trigonometric coefficients switch to Taylor series
SMALL_PHASE = 0.1


@dataclass(frozen=True)
class EvolveParams:
    kappa: float
    T: float
    n_steps: int
    L: int

    def __post_init__(self):
        if not self.kappa > 0:
            raise ValueError("kappa must be positive")
        if not self.T > 0:
            raise ValueError("T must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be at least 1")
        if self.L < 0:
            raise ValueError("L must be non-negative")

    @property
    def h(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "T": self.T, "n_steps": self.n_steps, "L": self.L}


@dataclass(frozen=True, eq=False)
class BoundaryState:
    t: float
    f: SpectralField
    fdot: SpectralField

    def __post_init__(self):
        if self.f.L != self.fdot.L:
            raise ValueError("f and fdot must share a degree")


@dataclass(frozen=True, eq=False)
class DataTriple:
    """Forcing samples on the uniform grid over [0, T], plus initial data.

    ``G`` has shape ``(n_samples, (L+1)**2)``.
    """

    G: np.ndarray
    f0: SpectralField
    f1: SpectralField
    T: float

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.ndim != 2 or G.shape[1] != n_coeffs(self.L):
            raise ValueError(f"forcing must have shape (n_samples, {n_coeffs(self.L)})")
        if self.f0.L != self.f1.L:
            raise ValueError("f0 and f1 must share a degree")
        if not np.all(np.isfinite(G)):
            raise ValueError("forcing must be finite")
        G.flags.writeable = False
        object.__setattr__(self, "G", G)

    @property
    def L(self) -> int:
        return self.f0.L

    @property
    def n_samples(self) -> int:
        return self.G.shape[0]

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_samples)

    @classmethod
    def zeros(cls, L: int, n_steps: int, T: float) -> "DataTriple":
        z = SpectralField.zeros(L)
        return cls(np.zeros((n_steps + 1, n_coeffs(L))), z, z, T)

    @classmethod
    def initial(cls, f0: SpectralField, f1: SpectralField, n_steps: int, T: float) -> "DataTriple":
        L = max(f0.L, f1.L)
        return cls(np.zeros((n_steps + 1, n_coeffs(L))), f0.padded(L), f1.padded(L), T)

    def padded(self, L: int) -> "DataTriple":
        if L == self.L:
            return self
        G = np.zeros((self.n_samples, n_coeffs(L)))
        G[:, : self.G.shape[1]] = self.G
        return DataTriple(G, self.f0.padded(L), self.f1.padded(L), self.T)

    def truncated(self, L: int) -> "DataTriple":
        """Drop every degree above L (the degree label stays L)."""
        k = n_coeffs(min(L, self.L))
        out = DataTriple(self.G[:, :k], SpectralField(min(L, self.L), self.f0.coeffs[:k]),
                         SpectralField(min(L, self.L), self.f1.coeffs[:k]), self.T)
        return out.padded(L) if L > self.L else out

    def __add__(self, other: "DataTriple") -> "DataTriple":
        L = max(self.L, other.L)
        a, b = self.padded(L), other.padded(L)
        return DataTriple(a.G + b.G, a.f0 + b.f0, a.f1 + b.f1, self.T)

    def __mul__(self, s: float) -> "DataTriple":
        return DataTriple(s * self.G, s * self.f0, s * self.f1, self.T)

    __rmul__ = __mul__

    def __sub__(self, other: "DataTriple") -> "DataTriple":
        return self + (-1.0) * other


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled solution; arrays have shape ``(n_steps + 1, (L+1)**2)``."""

    params: EvolveParams
    f: np.ndarray = field(repr=False)
    fdot: np.ndarray = field(repr=False)
    fddot: np.ndarray = field(repr=False)
    forcing: np.ndarray = field(repr=False)

    def __post_init__(self):
        for a in (self.f, self.fdot, self.fddot, self.forcing):
            a.flags.writeable = False

    @property
    def times(self) -> np.ndarray:
        return self.params.times

    @property
    def n_samples(self) -> int:
        return self.f.shape[0]

    def state(self, k: int) -> BoundaryState:
        L = self.params.L
        return BoundaryState(float(self.times[k]), SpectralField(L, self.f[k]),
                             SpectralField(L, self.fdot[k]))

    @property
    def states(self) -> list[BoundaryState]:
        return [self.state(k) for k in range(self.n_samples)]

    def to_files(self, csv_path, json_path, stride: int = 1) -> None:
        """One CSV row per (t_k, l, m) plus a JSON sidecar holding the parameters.

        With ``stride > 1`` only every stride-th sample is written and the sidecar
        describes that coarser sampling (``n_steps`` divided by ``stride``).
        """
        if stride < 1 or self.params.n_steps % stride:
            raise ValueError(f"stride {stride} must divide n_steps={self.params.n_steps}")
        keep = slice(None, None, stride)
        f, fdot, fddot, G = self.f[keep], self.fdot[keep], self.fddot[keep], self.forcing[keep]
        times = self.times[keep]
        ls, ms = degree_orders(self.params.L)
        n = times.size
        cols = [np.repeat(times, ls.size), np.tile(ls, n), np.tile(ms, n),
                f.ravel(), fdot.ravel(), fddot.ravel(), G.ravel()]
        np.savetxt(csv_path, np.column_stack(cols), delimiter=",", header="t,l,m,f,fdot,fddot,G",
                   comments="", fmt=["%.17g", "%d", "%d", "%.17g", "%.17g", "%.17g", "%.17g"])
        meta = self.params.to_dict()
        meta["n_steps"] = self.params.n_steps // stride
        meta["sample_stride"] = stride
        Path(json_path).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")

    @classmethod
    def from_files(cls, csv_path, json_path) -> "Trajectory":
        meta = json.loads(Path(json_path).read_text())
        meta.pop("sample_stride", None)
        params = EvolveParams(**meta)
        table = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        shape = (params.n_steps + 1, n_coeffs(params.L))
        f, fdot, fddot, G = (table[:, j].reshape(shape) for j in range(3, 7))
        return cls(params, f, fdot, fddot, G)


def mode_frequency(l, kappa: float):
    """Angular frequency sqrt(kappa l^2 (l+1)) of degree-l modes."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    return np.sqrt(kappa * third_order_symbol(np.asarray(l, dtype=float)))


def _propagator_coefficients(omega: np.ndarray, h: float):
    """Coefficients of the exact step for x'' + omega^2 x = g0 + (g1 - g0) tau/h.

    Returns (cos, omega*sin, A, B, S) with
    A = (1 - cos)/omega^2, B = (omega h - sin)/(h omega^3), S = sin/omega.
    """
    omega = np.asarray(omega, dtype=float)
    z = omega * h
    small = z < SMALL_PHASE
    zs = np.where(small, z, 0.0)
    z2 = zs * zs
    # Taylor series in z, truncated past the z^8 term
    A_s = h * h * (1 / 2 - z2 / 24 + z2**2 / 720 - z2**3 / 40320 + z2**4 / 3628800)
    B_s = h * h * (1 / 6 - z2 / 120 + z2**2 / 5040 - z2**3 / 362880 + z2**4 / 39916800)
    S_s = h * (1 - z2 / 6 + z2**2 / 120 - z2**3 / 5040 + z2**4 / 362880)

    with np.errstate(divide="ignore", invalid="ignore"):
        om = np.where(small, 1.0, omega)
        sz = np.sin(z)
        A_l = 2 * np.sin(z / 2) ** 2 / om**2
        B_l = (z - sz) / (h * om**3)
        S_l = sz / om
    A = np.where(small, A_s, A_l)
    B = np.where(small, B_s, B_l)
    S = np.where(small, S_s, S_l)
    return np.cos(z), omega * np.sin(z), A, B, S


def exact_stepper(omega, h: float):
    """Exact step of independent oscillators under piecewise-linear forcing.

    Returns ``step(x, v, g0, g1) -> (x, v)`` with the coefficients computed once.
    """
    c, ws, A, B, S = _propagator_coefficients(omega, h)
    Ah = A / h

    def step(x, v, g0, g1):
        dg = g1 - g0
        return c * x + S * v + A * g0 + B * dg, -ws * x + c * v + S * g0 + Ah * dg

    return step


def verlet_stepper(omega, h: float):
    """Kick-drift-kick Stormer-Verlet step of the same oscillators."""
    w2 = np.asarray(omega, dtype=float) ** 2

    def step(x, v, g0, g1):
        v_half = v + 0.5 * h * (g0 - w2 * x)
        x_new = x + h * v_half
        return x_new, v_half + 0.5 * h * (g1 - w2 * x_new)

    return step


def propagate(x, v, g0, g1, omega, h: float):
    return exact_stepper(omega, h)(x, v, g0, g1)


def verlet(x, v, g0, g1, omega, h: float):
    return verlet_stepper(omega, h)(x, v, g0, g1)


def _mode_omegas(L: int, kappa: float) -> np.ndarray:
    ls, _ = degree_orders(L)
    return mode_frequency(ls, kappa)


def _step_with(stepper, state: BoundaryState, g_now: SpectralField, g_next: SpectralField,
               h: float, kappa: float) -> BoundaryState:
    if not h > 0:
        raise ValueError("step must be positive")
    L = state.f.L
    g0, g1 = g_now.padded(L).coeffs, g_next.padded(L).coeffs
    x, v = stepper(_mode_omegas(L, kappa), h)(state.f.coeffs, state.fdot.coeffs, g0, g1)
    return BoundaryState(state.t + h, SpectralField(L, x), SpectralField(L, v))


def step_exact(state, g_now, g_next, h, kappa) -> BoundaryState:
    return _step_with(exact_stepper, state, g_now, g_next, h, kappa)


def step_verlet(state, g_now, g_next, h, kappa) -> BoundaryState:
    return _step_with(verlet_stepper, state, g_now, g_next, h, kappa)


def solve(data: DataTriple, params: EvolveParams, scheme: str = "exact") -> Trajectory:
    """Sampled solution for the data triple; ``scheme`` is ``"exact"`` or ``"verlet"``."""
    steppers = {"exact": exact_stepper, "verlet": verlet_stepper}
    if scheme not in steppers:
        raise ValueError(f"unknown scheme {scheme!r}")
    if data.L > params.L:
        raise ValueError(f"data degree {data.L} exceeds solver degree {params.L}")
    if data.n_samples != params.n_steps + 1:
        raise ValueError(
            f"forcing has {data.n_samples} samples, expected {params.n_steps + 1}"
        )
    if not np.isclose(data.T, params.T, rtol=1e-14, atol=0):
        raise ValueError(f"data horizon {data.T} differs from solver horizon {params.T}")
    data = data.padded(params.L)
    G = data.G
    omega = _mode_omegas(params.L, params.kappa)
    n = params.n_steps + 1
    f = np.empty((n, omega.size))
    v = np.empty((n, omega.size))
    f[0], v[0] = data.f0.coeffs, data.f1.coeffs
    step = steppers[scheme](omega, params.h)
    for k in range(params.n_steps):
        f[k + 1], v[k + 1] = step(f[k], v[k], G[k], G[k + 1])
    fddot = G - omega**2 * f
    return Trajectory(params, f, v, fddot, np.array(G))


def apply_L(traj: Trajectory) -> DataTriple:
    """Recover (forcing, f(0), fdot(0)) from a trajectory.

    The forcing slot is fddot + kappa * a_l * f, i.e. the boundary equation's
    left-hand side evaluated on the stored samples.
    """
    if traj.n_samples < 3:
        raise ValueError("need at least 3 time samples")
    p = traj.params
    omega2 = _mode_omegas(p.L, p.kappa) ** 2
    G = traj.fddot + omega2 * traj.f
    return DataTriple(G, SpectralField(p.L, traj.f[0]), SpectralField(p.L, traj.fdot[0]), p.T)
