"""
Energy diagnostics and norm estimates for sampled trajectories.

All spatial norms are spectral (see :mod:`dynbound.calculus`); integrals in
time use the composite trapezoid rule on the uniform sample grid, matching the
piecewise-linear forcing model of :mod:`dynbound.evolve`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.optimize import brentq

from .calculus import (
    apply_multiplier,
    dtn_of,
    laplace_beltrami,
    sobolev_norm,
    third_order_symbol,
)
from .datagen import RoughSpec, derive_seed, random_field, random_forcing, truncate
from .evolve import (
    BoundaryState,
    DataTriple,
    EvolveParams,
    Trajectory,
    exact_stepper,
    mode_frequency,
    solve,
)
from .sphharm import GridField, SpectralField, SphGrid, build_grid, degree_orders, quadrature, synthesize

# sharp spectral constant of the coercivity inequality, 2 / 3**1.5
COERCIVITY_CONSTANT = 2.0 / 3.0**1.5


def _third_order_weights(L: int) -> np.ndarray:
    ls, _ = degree_orders(L)
    return third_order_symbol(ls.astype(float))


def _sobolev_weights(L: int, s: float) -> np.ndarray:
    """Squared-norm weights (1 + l(l+1))**s."""
    ls, _ = degree_orders(L)
    return (1.0 + ls * (ls + 1.0)) ** s


def _rows_norm(a: np.ndarray, L: int, s: float) -> np.ndarray:
    """H^s norm of every row of a (samples, coeffs) array."""
    return np.sqrt((a**2) @ _sobolev_weights(L, s))


def energy(state: BoundaryState, kappa: float) -> float:
    a = _third_order_weights(state.f.L)
    return float(0.5 * np.sum(state.fdot.coeffs**2 + kappa * a * state.f.coeffs**2))


def energy_quadrature(state: BoundaryState, kappa: float, grid: SphGrid | None = None) -> float:
    """The defining surface integral 1/2 int (fdot^2 - kappa f Lap(dn f)), by quadrature."""
    grid = build_grid(state.f.L) if grid is None else grid
    f = synthesize(state.f, grid).values
    fd = synthesize(state.fdot, grid).values
    lap_dn = synthesize(apply_multiplier(laplace_beltrami, dtn_of(state.f)), grid).values
    return 0.5 * quadrature(GridField(grid, fd**2 - kappa * f * lap_dn))


def _energies(traj: Trajectory) -> np.ndarray:
    a = _third_order_weights(traj.params.L)
    return 0.5 * (np.sum(traj.fdot**2, axis=1) + traj.params.kappa * (traj.f**2 @ a))


@dataclass(frozen=True, eq=False)
class EnergyReport:
    times: np.ndarray
    E: np.ndarray
    Edot_num: np.ndarray
    pairing: np.ndarray
    bound: np.ndarray
    bound_safe: np.ndarray = field(repr=False)

    columns = ("t", "E", "Edot_num", "pairing", "bound")

    def rows(self):
        return zip(self.times, self.E, self.Edot_num, self.pairing, self.bound)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns)
            for row in self.rows():
                w.writerow([repr(float(x)) for x in row])

    @property
    def max_identity_error(self) -> float:
        return float(np.max(np.abs(self.Edot_num - self.pairing)))


def energy_report(traj: Trajectory) -> EnergyReport:
    """Energy series with its finite-difference rate and the exponential bounds.

    ``bound`` is (E(0) + 1/2 int_0^t ||G||^2) e^{t/2}; ``bound_safe`` uses e^t,
    which is what the kinetic estimate 1/2 ||fdot||^2 <= E actually yields.
    """
    if traj.n_samples < 3:
        raise ValueError("energy report needs at least 3 samples")
    t = traj.times
    E = _energies(traj)
    Edot = np.gradient(E, t, edge_order=2)
    pairing = np.sum(traj.fdot * traj.forcing, axis=1)
    g2 = np.sum(traj.forcing**2, axis=1)
    base = E[0] + 0.5 * cumulative_trapezoid(g2, t, initial=0.0)
    return EnergyReport(t, E, Edot, pairing, base * np.exp(0.5 * t), base * np.exp(t))


def positivity_check(c: SpectralField, grid: SphGrid | None = None) -> tuple[float, float]:
    """sum a_l c^2 and the quadrature value of -int Lap(f) dn(f)."""
    spectral = float(np.sum(_third_order_weights(c.L) * c.coeffs**2))
    grid = build_grid(c.L) if grid is None else grid
    lap = synthesize(apply_multiplier(laplace_beltrami, c), grid).values
    dn = synthesize(dtn_of(c), grid).values
    return spectral, -quadrature(GridField(grid, lap * dn))


def coercivity_ratios(L_max: int) -> np.ndarray:
    """a_l / (1 + l(l+1))**1.5 for l = 1..L_max."""
    l = np.arange(1, L_max + 1, dtype=float)
    return third_order_symbol(l) / (1.0 + l * (l + 1.0)) ** 1.5


def coercivity_constants(L_max: int) -> tuple[float, int]:
    if L_max < 1:
        raise ValueError("L_max must be at least 1")
    r = coercivity_ratios(L_max)
    k = int(np.argmin(r))
    return float(r[k]), k + 1


def coercivity_slack(c: SpectralField, constant: float = 0.384900) -> float:
    """sum a_l c^2 - constant (||c||_{3/2}^2 - ||c||_0^2); nonnegative for constant <= 2/3^1.5."""
    a = _third_order_weights(c.L)
    lhs = np.sum(a * c.coeffs**2)
    return float(lhs - constant * (sobolev_norm(c, 1.5) ** 2 - sobolev_norm(c, 0.0) ** 2))


@dataclass(frozen=True)
class TrajectoryNorms:
    x32: float
    x3: float
    sup_f_32: float
    sup_fdot_0: float
    sup_f_3: float
    sup_fdot_32: float
    sup_fddot_0: float


def trajectory_norms(traj: Trajectory) -> TrajectoryNorms:
    """Sample-grid suprema of the X^{3/2} and X^3 norm constituents."""
    L = traj.params.L
    f32 = float(np.max(_rows_norm(traj.f, L, 1.5)))
    fd0 = float(np.max(_rows_norm(traj.fdot, L, 0.0)))
    f3 = float(np.max(_rows_norm(traj.f, L, 3.0)))
    fd32 = float(np.max(_rows_norm(traj.fdot, L, 1.5)))
    fdd0 = float(np.max(_rows_norm(traj.fddot, L, 0.0)))
    return TrajectoryNorms(f32 + fd0, f3 + fd32 + fdd0, f32, fd0, f3, fd32, fdd0)


def x32_norm_of_difference(a: Trajectory, b: Trajectory) -> float:
    L = max(a.params.L, b.params.L)

    def pad(x):
        out = np.zeros((x.shape[0], (L + 1) ** 2))
        out[:, : x.shape[1]] = x
        return out

    df, dv = pad(a.f) - pad(b.f), pad(a.fdot) - pad(b.fdot)
    return float(np.max(_rows_norm(df, L, 1.5)) + np.max(_rows_norm(dv, L, 0.0)))


def refine_data(data: DataTriple) -> DataTriple:
    """Same piecewise-linear forcing sampled on a grid with twice as many steps."""
    G = data.G
    out = np.empty((2 * G.shape[0] - 1, G.shape[1]))
    out[0::2] = G
    out[1::2] = 0.5 * (G[:-1] + G[1:])
    return DataTriple(out, data.f0, data.f1, data.T)


def refinement_change(data: DataTriple, params: EvolveParams) -> dict[str, float]:
    """Relative change of each X-norm when the step count doubles.

    The forcing keeps its piecewise-linear model, so the extra samples only
    refine the suprema over time.
    """
    coarse = trajectory_norms(solve(data, params))
    fine_params = EvolveParams(params.kappa, params.T, 2 * params.n_steps, params.L)
    fine = trajectory_norms(solve(refine_data(data), fine_params))
    return {name: (abs(getattr(coarse, name) - getattr(fine, name)) / getattr(fine, name)
                   if getattr(fine, name) > 0 else 0.0)
            for name in ("x32", "x3")}


@dataclass(frozen=True)
class HNorm:
    g_l2t: float
    f0_32: float
    f1_0: float

    @property
    def total(self) -> float:
        return float(np.sqrt(self.g_l2t**2 + self.f0_32**2 + self.f1_0**2))


def h_norm(data: DataTriple) -> HNorm:
    g2 = np.sum(data.G**2, axis=1)
    if data.n_samples > 1:
        g_l2t = float(np.sqrt(trapezoid(g2, data.times)))
    else:
        g_l2t = 0.0
    return HNorm(g_l2t, sobolev_norm(data.f0, 1.5), sobolev_norm(data.f1, 0.0))


def rough_data(params: EvolveParams, seed: int, rho: float = 1.1) -> DataTriple:
    """Rough triple: f0 barely in H^{3/2}, f1 and every forcing slice barely in L2."""
    L = params.L
    f0 = random_field(RoughSpec(1.5, rho, L, derive_seed(seed, 0)))
    f1 = random_field(RoughSpec(0.0, rho, L, derive_seed(seed, 1)))
    G = random_forcing(RoughSpec(0.0, rho, L, derive_seed(seed, 2)), params.n_steps, params.T)
    return DataTriple(G, f0, f1, params.T)


def random_unit_data(params: EvolveParams, seed: int) -> DataTriple:
    """Rough data with random slot proportions, scaled to unit H norm."""
    d = rough_data(params, seed)
    hn = h_norm(d)
    mix = np.random.Generator(np.random.Philox(key=derive_seed(seed, 3))).dirichlet([0.5] * 3)
    scales = [np.sqrt(w) / max(n, 1e-300) for w, n in zip(mix, (hn.g_l2t, hn.f0_32, hn.f1_0))]
    d = DataTriple(scales[0] * d.G, scales[1] * d.f0, scales[2] * d.f1, d.T)
    return (1.0 / h_norm(d).total) * d


def continuity_trials(params: EvolveParams, n_trials: int, seed: int) -> np.ndarray:
    """x32 norm of the solution for each of n_trials random unit-H-norm triples."""
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    out = np.empty(n_trials)
    for i in range(n_trials):
        d = random_unit_data(params, derive_seed(seed, 100 + i))
        out[i] = trajectory_norms(solve(d, params)).x32
    return out


def continuity_constant(params: EvolveParams, n_trials: int, seed: int) -> float:
    """Empirical lower estimate of the norm of the solution map from H to X^{3/2}."""
    return float(np.max(continuity_trials(params, n_trials, seed)))


@dataclass(frozen=True)
class CauchyRow:
    L_i: int
    L_j: int
    solution_diff: float
    data_diff: float

    @property
    def ratio(self) -> float:
        return self.solution_diff / self.data_diff if self.data_diff > 0 else 0.0


def truncate_data(data: DataTriple, L: int) -> DataTriple:
    f0, f1 = truncate(data.f0, L), truncate(data.f1, L)
    return DataTriple(data.G[:, : f0.coeffs.size], f0, f1, data.T)


def density_study(data: DataTriple, degrees, params: EvolveParams) -> list[CauchyRow]:
    """Cauchy differences between solutions of truncated data, for every degree pair."""
    degrees = [int(L) for L in degrees]
    if any(b <= a for a, b in zip(degrees, degrees[1:])):
        raise ValueError("degrees must be strictly increasing")
    if degrees and degrees[-1] > data.L:
        raise ValueError(f"degree {degrees[-1]} exceeds data degree {data.L}")
    sols, parts = {}, {}
    for L in degrees:
        parts[L] = truncate_data(data, L)
        p = EvolveParams(params.kappa, params.T, params.n_steps, L)
        sols[L] = solve(parts[L], p)
    rows = []
    for i, Li in enumerate(degrees):
        for Lj in degrees[i + 1:]:
            dd = h_norm(parts[Lj] - parts[Li]).total
            rows.append(CauchyRow(Li, Lj, x32_norm_of_difference(sols[Li], sols[Lj]), dd))
    return rows


@dataclass(frozen=True, eq=False)
class BoundReport:
    """Per-sample left and right sides of the trajectory estimates."""

    times: np.ndarray
    kinetic_lhs: np.ndarray        # 1/2 ||fdot||_0^2
    kinetic_full_lhs: np.ndarray  # ||fdot||_0^2, compared against E
    E: np.ndarray
    exp_rhs: np.ndarray            # C (||f0||_{3/2}^2 + ||f1||_0^2 + 1/2 int ||G||^2) e^t
    exp_rhs_half: np.ndarray       # same with e^{t/2}
    fdot_lhs: np.ndarray           # ||fdot||_0^2
    fdot_rhs: np.ndarray
    f32_lhs: np.ndarray            # ||f||_{3/2}^2
    f32_rhs: np.ndarray
    C: float

    def holds(self) -> dict[str, bool]:
        return {
            "energy_nonnegative": bool(np.all(self.E >= 0)),
            "kinetic": bool(np.all(self.kinetic_lhs <= self.E * (1 + 1e-12) + 1e-300)),
            "exponential": bool(np.all(self.E <= self.exp_rhs * (1 + 1e-12) + 1e-300)),
            "fdot": bool(np.all(self.fdot_lhs <= self.fdot_rhs * (1 + 1e-12) + 1e-300)),
            "f32": bool(np.all(self.f32_lhs <= self.f32_rhs * (1 + 1e-12) + 1e-300)),
        }

    def sharp_variants(self) -> dict[str, bool]:
        """The sharper constants, reported but never asserted."""
        return {
            "kinetic_without_half": bool(np.all(self.kinetic_full_lhs <= self.E * (1 + 1e-12))),
            "exponential_half_rate": bool(np.all(self.E <= self.exp_rhs_half * (1 + 1e-12))),
        }


def bound_report(traj: Trajectory) -> BoundReport:
    """Computable versions of the energy-based estimates, with explicit constants.

    With D(t) = E(0) + 1/2 int_0^t ||G||^2 the per-mode analysis gives
    E(t) <= D(t) e^t and, through the coercivity constant c and
    ||f(t)||_0^2 <= 2||f(0)||_0^2 + 2t int_0^t ||fdot||^2,

        ||f(t)||_{3/2}^2 <= 2||f(0)||_0^2 + 4t D(t)(e^t - 1) + 2 D(t) e^t / (kappa c).
    """
    p = traj.params
    t = traj.times
    E = _energies(traj)
    fdot2 = np.sum(traj.fdot**2, axis=1)
    g2 = np.sum(traj.forcing**2, axis=1)
    G_int = cumulative_trapezoid(g2, t, initial=0.0)
    ratio_sup = float(np.max(coercivity_ratios(max(p.L, 1))))
    C = max(1.0, p.kappa * ratio_sup)
    f0 = SpectralField(p.L, traj.f[0])
    f1 = SpectralField(p.L, traj.fdot[0])
    data_sq = sobolev_norm(f0, 1.5) ** 2 + sobolev_norm(f1, 0.0) ** 2
    exp_rhs = C * (data_sq + 0.5 * G_int) * np.exp(t)
    exp_rhs_half = C * (data_sq + 0.5 * G_int) * np.exp(0.5 * t)
    D = E[0] + 0.5 * G_int
    fdot_rhs = 2 * D * np.exp(t)
    f0_sq = sobolev_norm(f0, 0.0) ** 2
    f32_rhs = 2 * f0_sq + 4 * t * D * np.expm1(t) + 2 * D * np.exp(t) / (p.kappa * COERCIVITY_CONSTANT)
    f32_lhs = _rows_norm(traj.f, p.L, 1.5) ** 2
    return BoundReport(t, 0.5 * fdot2, fdot2, E, exp_rhs, exp_rhs_half, fdot2, fdot_rhs,
                       f32_lhs, f32_rhs, C)


def zero_crossings(traj: Trajectory, l: int, m: int) -> np.ndarray:
    """Sign changes of one unforced mode, refined to roundoff with the exact propagator."""
    if np.any(traj.forcing != 0):
        raise ValueError("crossing refinement assumes zero forcing")
    k_idx = l * l + l + m
    x, v = traj.f[:, k_idx], traj.fdot[:, k_idx]
    omega = mode_frequency(l, traj.params.kappa)
    t = traj.times
    out = []
    for k in np.nonzero(np.sign(x[:-1]) * np.sign(x[1:]) < 0)[0]:
        def value(tau, k=k):
            if tau == 0:
                return x[k]
            return exact_stepper(np.array([omega]), tau)(x[k], v[k], 0.0, 0.0)[0][0]
        out.append(t[k] + brentq(value, 0.0, t[k + 1] - t[k], xtol=1e-300, rtol=1e-15, maxiter=200))
    return np.array(out)


def measure_frequency(l: int, kappa: float, n_periods: int = 10,
                      samples_per_period: int = 37) -> float:
    """Angular frequency of mode (l, 0) fitted to its zero crossings."""
    omega = float(mode_frequency(l, kappa))
    if omega == 0:
        raise ValueError("the constant mode does not oscillate")
    T = n_periods * 2 * np.pi / omega
    params = EvolveParams(kappa, T, n_periods * samples_per_period, l)
    data = DataTriple.initial(SpectralField.single(l, l, 0), SpectralField.zeros(l),
                              params.n_steps, T)
    crossings = zero_crossings(solve(data, params), l, 0)
    half_period = np.polyfit(np.arange(crossings.size), crossings, 1)[0]
    return float(np.pi / half_period)
