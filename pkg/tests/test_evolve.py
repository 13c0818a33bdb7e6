import numpy as np
import pytest
from hypothesis import given, strategies as st

from dynbound.analysis import measure_frequency
from dynbound.calculus import third_order
from dynbound.evolve import (
    SMALL_PHASE,
    BoundaryState,
    DataTriple,
    EvolveParams,
    Trajectory,
    apply_L,
    mode_frequency,
    propagate,
    solve,
    step_exact,
    step_verlet,
    verlet,
)
from dynbound.sphharm import SpectralField, lm_index, n_coeffs
from oracles import oscillator_free, oscillator_step


def gaussian(L, rng, scale=1.0):
    return SpectralField(L, scale * rng.standard_normal(n_coeffs(L)))


def random_triple(L, n_steps, T, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n_steps + 1, n_coeffs(L)))
    return DataTriple(G, gaussian(L, rng), gaussian(L, rng), T)


def single_state(L, l, m, f, fdot, t=0.0):
    return BoundaryState(t, SpectralField.single(L, l, m, f), SpectralField.single(L, l, m, fdot))


# --- parameters and data types ----------------------------------------------------

@pytest.mark.parametrize("kw", [dict(kappa=0.0), dict(kappa=-1.0), dict(T=0.0), dict(n_steps=0), dict(L=-1)])
def test_params_validation(kw):
    base = dict(kappa=1.0, T=1.0, n_steps=10, L=2)
    base.update(kw)
    with pytest.raises(ValueError):
        EvolveParams(**base)


def test_params_grid():
    p = EvolveParams(2.0, 3.0, 6, 1)
    assert p.h == 0.5
    assert np.array_equal(p.times, np.linspace(0, 3, 7))


def test_state_degrees_must_match():
    with pytest.raises(ValueError):
        BoundaryState(0.0, SpectralField.zeros(1), SpectralField.zeros(2))


def test_data_triple_validation():
    z = SpectralField.zeros(2)
    with pytest.raises(ValueError):
        DataTriple(np.zeros((3, 4)), z, z, 1.0)
    with pytest.raises(ValueError):
        DataTriple(np.zeros((3, 9)), z, SpectralField.zeros(1), 1.0)
    G = np.zeros((3, 9))
    G[1, 2] = np.nan
    with pytest.raises(ValueError):
        DataTriple(G, z, z, 1.0)


# --- frequencies ------------------------------------------------------------------

def test_mode_frequency_examples():
    assert mode_frequency(0, 3.7) == 0
    assert mode_frequency(1, 1.0) == pytest.approx(1.41421356, abs=1e-8)
    assert mode_frequency(2, 1.0) == pytest.approx(3.46410162, abs=1e-8)
    with pytest.raises(ValueError):
        mode_frequency(1, 0.0)


@pytest.mark.parametrize("l", [1, 2, 8, 32])
@pytest.mark.parametrize("kappa", [0.1, 1.0, 10.0])
def test_measured_frequency(l, kappa):
    exact = float(np.sqrt(kappa * third_order.symbol(float(l))))
    assert measure_frequency(l, kappa) == pytest.approx(exact, rel=1e-8)


# --- exact step -------------------------------------------------------------------

def test_half_period_step():
    s = step_exact(single_state(1, 1, 0, 1.0, 0.0), SpectralField.zeros(1), SpectralField.zeros(1),
                   np.pi / np.sqrt(2), 1.0)
    assert s.f[1, 0] == pytest.approx(-1.0, abs=1e-12)
    assert s.fdot[1, 0] == pytest.approx(0.0, abs=1e-12)


def test_constant_mode_free_growth():
    s = step_exact(single_state(0, 0, 0, 0.0, 1.0), SpectralField.zeros(0), SpectralField.zeros(0), 2.0, 1.0)
    assert (s.f[0, 0], s.fdot[0, 0], s.t) == (2.0, 1.0, 2.0)


def test_constant_mode_constant_force():
    one = SpectralField.single(0, 0, 0)
    s = step_exact(single_state(0, 0, 0, 0.0, 0.0), one, one, 2.0, 1.0)
    assert s.f[0, 0] == pytest.approx(2.0, abs=1e-15)
    assert s.fdot[0, 0] == pytest.approx(2.0, abs=1e-15)


def test_constant_mode_polynomial_update():
    x, v, g0, g1, h = 0.3, -1.2, 0.7, 2.5, 0.9
    xn, vn = propagate(x, v, g0, g1, 0.0, h)
    assert xn == pytest.approx(x + h * v + h * h * (g0 / 3 + g1 / 6), abs=1e-15)
    assert vn == pytest.approx(v + h * (g0 + g1) / 2, abs=1e-15)


@pytest.mark.parametrize("z", [1e-8, 1e-6, 1e-4, 0.05, SMALL_PHASE * (1 - 1e-12), SMALL_PHASE,
                               0.3, 1.0, 10.0, 1e3, 1e5])
def test_exact_step_against_extended_precision(z):
    rng = np.random.default_rng(int(1e6 * z) % 2**31)
    # power-of-two steps keep omega * h exact, so the phase itself carries no rounding
    for h in (2.0**-10, 2.0**-3, 1.0):
        omega = z / h
        x, v, g0, g1 = rng.standard_normal(4)
        xn, vn = propagate(x, v, g0, g1, omega, h)
        xr, vr = oscillator_step(x, v, g0, g1, omega, h)
        scale = 1 + abs(xr) + abs(vr) / max(omega, 1)
        assert abs(xn - xr) <= 1e-13 * scale
        assert abs(vn - vr) <= 1e-13 * (1 + abs(vr) + omega * abs(xr))


def test_series_branch_is_continuous_at_threshold():
    h = 0.5
    below = SMALL_PHASE * (1 - 1e-13) / h
    above = SMALL_PHASE * (1 + 1e-13) / h
    a = np.array(propagate(0.4, -0.3, 1.1, 0.2, below, h))
    b = np.array(propagate(0.4, -0.3, 1.1, 0.2, above, h))
    assert np.max(np.abs(a - b)) < 1e-13


def test_step_error_uniform_in_omega_for_linear_forcing():
    # a single long step with omega*h up to 1e3 still lands on the closed form
    for omega, h in [(1e-6, 1.0), (1.0, 1.0), (1e3, 1.0), (1e4, 0.2)]:
        xr, vr = oscillator_step(0.5, 0.25, -1.0, 3.0, omega, h)
        xn, vn = propagate(0.5, 0.25, -1.0, 3.0, omega, h)
        assert abs(xn - xr) <= 1e-12
        assert abs(vn - vr) <= 1e-12 * max(1.0, omega)


def test_step_rejects_nonpositive_h():
    s = single_state(1, 1, 0, 1.0, 0.0)
    with pytest.raises(ValueError):
        step_exact(s, SpectralField.zeros(1), SpectralField.zeros(1), 0.0, 1.0)
    with pytest.raises(ValueError):
        step_verlet(s, SpectralField.zeros(1), SpectralField.zeros(1), -1.0, 1.0)


def test_step_pads_lower_degree_forcing():
    s = single_state(3, 2, 1, 1.0, 0.0)
    a = step_exact(s, SpectralField.single(1, 0, 0), SpectralField.single(1, 0, 0), 0.1, 1.0)
    b = step_exact(s, SpectralField.single(3, 0, 0), SpectralField.single(3, 0, 0), 0.1, 1.0)
    assert np.array_equal(a.f.coeffs, b.f.coeffs)


# --- solve ------------------------------------------------------------------------

def test_zero_data_gives_zero_trajectory():
    p = EvolveParams(1.0, 2.0, 50, 4)
    tr = solve(DataTriple.zeros(4, 50, 2.0), p)
    for a in (tr.f, tr.fdot, tr.fddot, tr.forcing):
        assert not np.any(a)


def test_full_period_returns_to_start():
    T = 2 * np.pi / np.sqrt(2)
    p = EvolveParams(1.0, T, 1000, 1)
    for f0, f1 in [(SpectralField.single(1, 1, 0), SpectralField.zeros(1)),
                   (SpectralField.zeros(1), SpectralField.single(1, 1, 0))]:
        tr = solve(DataTriple.initial(f0, f1, 1000, T), p)
        assert np.max(np.abs(tr.f[-1] - tr.f[0])) <= 1e-10
        assert np.max(np.abs(tr.fdot[-1] - tr.fdot[0])) <= 1e-10


def test_constant_mode_velocity_grows_linearly():
    p = EvolveParams(1.0, 3.0, 30, 2)
    d = DataTriple.initial(SpectralField.zeros(2), SpectralField.single(2, 0, 0), 30, 3.0)
    tr = solve(d, p)
    assert tr.f[-1, 0] == pytest.approx(3.0, abs=1e-14)
    assert np.allclose(tr.f[:, 0], p.times, atol=1e-14)
    assert not np.any(tr.f[:, 1:])


def test_constant_mode_forcing_grows_linearly():
    p = EvolveParams(1.0, 3.0, 30, 2)
    G = np.zeros((31, 9))
    G[:, 0] = 1.0
    d = DataTriple(G, SpectralField.zeros(2), SpectralField.zeros(2), 3.0)
    tr = solve(d, p)
    assert tr.fdot[-1, 0] == pytest.approx(3.0, abs=1e-13)
    assert tr.f[-1, 0] == pytest.approx(4.5, abs=1e-13)
    assert np.allclose(tr.fdot[:, 0], p.times, atol=1e-13)


def test_solve_matches_closed_form_free_oscillation(rng):
    L, kappa = 6, 0.7
    p = EvolveParams(kappa, 4.0, 80, L)
    f0, f1 = gaussian(L, rng), gaussian(L, rng)
    tr = solve(DataTriple.initial(f0, f1, 80, 4.0), p)
    for l in (0, 1, 3, 6):
        k = lm_index(l, -l)
        x, v = oscillator_free(f0.coeffs[k], f1.coeffs[k], float(mode_frequency(l, kappa)), p.times)
        assert np.allclose(tr.f[:, k], x, atol=1e-12)
        assert np.allclose(tr.fdot[:, k], v, atol=1e-11)


def test_solve_errors():
    p = EvolveParams(1.0, 1.0, 10, 2)
    with pytest.raises(ValueError):
        solve(DataTriple.zeros(3, 10, 1.0), p)
    with pytest.raises(ValueError):
        solve(DataTriple.zeros(2, 9, 1.0), p)
    with pytest.raises(ValueError):
        solve(DataTriple.zeros(2, 10, 2.0), p)
    with pytest.raises(ValueError):
        solve(DataTriple.zeros(2, 10, 1.0), p, scheme="euler")


def test_solve_pads_lower_degree_data():
    d = random_triple(2, 20, 1.0, 3)
    lo = solve(d, EvolveParams(1.0, 1.0, 20, 2))
    hi = solve(d, EvolveParams(1.0, 1.0, 20, 5))
    assert np.array_equal(hi.f[:, :9], lo.f)
    assert not np.any(hi.f[:, 9:])


def test_fddot_satisfies_equation():
    p = EvolveParams(1.3, 1.0, 40, 5)
    tr = solve(random_triple(5, 40, 1.0, 4), p)
    omega2 = 1.3 * third_order.weights(5)
    assert np.max(np.abs(tr.fddot - (tr.forcing - omega2 * tr.f))) <= 1e-12 * (1 + np.max(np.abs(tr.fddot)))


def test_fddot_matches_time_differences_for_smooth_forcing():
    # independent check of the stored second derivative: centered differences of fdot
    T, n, L = 1.0, 4000, 3
    p = EvolveParams(1.0, T, n, L)
    t = p.times
    rng = np.random.default_rng(8)
    A, B = rng.standard_normal(n_coeffs(L)), rng.standard_normal(n_coeffs(L))
    G = np.outer(np.cos(2 * t), A) + np.outer(np.sin(3 * t), B)
    tr = solve(DataTriple(G, gaussian(L, rng), gaussian(L, rng), T), p)
    fd = (tr.fdot[2:] - tr.fdot[:-2]) / (2 * p.h)
    assert np.max(np.abs(fd - tr.fddot[1:-1])) <= 1e-4 * np.max(np.abs(tr.fddot))


@given(st.integers(0, 6), st.integers(0, 2**31), st.floats(-2, 2), st.floats(-2, 2))
def test_solve_is_linear(L, seed, a, b):
    p = EvolveParams(0.9, 1.0, 20, L)
    d1, d2 = random_triple(L, 20, 1.0, seed), random_triple(L, 20, 1.0, seed + 1)
    lhs = solve(d1 * a + d2 * b, p).f
    rhs = a * solve(d1, p).f + b * solve(d2, p).f
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_time_reversal():
    L, T = 8, 3.0
    rng = np.random.default_rng(2)
    f0, f1 = gaussian(L, rng), gaussian(L, rng)
    p = EvolveParams(1.0, T, 300, L)
    fwd = solve(DataTriple.initial(f0, f1, 300, T), p)
    back = solve(DataTriple.initial(SpectralField(L, fwd.f[-1]), SpectralField(L, -fwd.fdot[-1]), 300, T), p)
    assert np.max(np.abs(back.f[-1] - f0.coeffs)) <= 1e-10
    assert np.max(np.abs(back.fdot[-1] + f1.coeffs)) <= 1e-10


# --- apply_L --------------------------------------------------------------------------

def test_apply_L_examples():
    p = EvolveParams(1.0, 1.0, 20, 1)
    d = DataTriple.initial(SpectralField.single(1, 1, 0), SpectralField.zeros(1), 20, 1.0)
    back = apply_L(solve(d, p))
    assert np.max(np.abs(back.G)) <= 1e-12
    assert np.array_equal(back.f0.coeffs, d.f0.coeffs)
    assert not np.any(back.f1.coeffs)
    zero = apply_L(solve(DataTriple.zeros(1, 20, 1.0), p))
    assert not np.any(zero.G) and not np.any(zero.f0.coeffs) and not np.any(zero.f1.coeffs)


@given(st.integers(0, 8), st.integers(0, 2**31))
def test_apply_L_round_trip(L, seed):
    p = EvolveParams(1.0, 1.0, 30, L)
    d = random_triple(L, 30, 1.0, seed)
    back = apply_L(solve(d, p))
    assert np.max(np.abs(back.G - d.G)) <= 1e-10
    assert np.array_equal(back.f0.coeffs, d.f0.coeffs)
    assert np.array_equal(back.f1.coeffs, d.f1.coeffs)


def test_apply_L_needs_three_samples():
    p = EvolveParams(1.0, 1.0, 1, 1)
    with pytest.raises(ValueError):
        apply_L(solve(DataTriple.zeros(1, 1, 1.0), p))


# --- Verlet -------------------------------------------------------------------------

def test_verlet_zero_stays_zero():
    s = step_verlet(single_state(2, 1, 0, 0.0, 0.0), SpectralField.zeros(2), SpectralField.zeros(2), 0.1, 1.0)
    assert not np.any(s.f.coeffs) and not np.any(s.fdot.coeffs)


def _verlet_error(n, L=1, seed=None):
    T = 1.0
    p = EvolveParams(1.0, T, n, L)
    if seed is None:
        d = DataTriple.initial(SpectralField.single(L, 1, 0), SpectralField.zeros(L), n, T)
    else:
        rng = np.random.default_rng(seed)
        t = p.times
        A = rng.standard_normal(n_coeffs(L))
        d = DataTriple(np.outer(np.cos(t), A), gaussian(L, rng), gaussian(L, rng), T)
    ref = solve(d, p)
    ver = solve(d, p, scheme="verlet")
    return np.max(np.abs(ref.f - ver.f))


def test_verlet_second_order_single_mode():
    errs = [_verlet_error(n) for n in (100, 200, 400, 800)]
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(np.abs(ratios - 4.0) <= 0.2)


def test_verlet_second_order_forced_multimode():
    errs = [_verlet_error(n, L=3, seed=5) for n in (400, 800, 1600, 3200)]
    order = -np.polyfit(np.log([400, 800, 1600, 3200]), np.log(errs), 1)[0]
    assert abs(order - 2.0) <= 0.1


def test_verlet_energy_stays_bounded_unforced():
    # symplectic: no secular drift of the energy over many periods
    omega, h = np.sqrt(2.0), 0.05
    x, v = 1.0, 0.0
    E = []
    for _ in range(20000):
        x, v = verlet(x, v, 0.0, 0.0, omega, h)
        E.append(0.5 * (v * v + omega**2 * x * x))
    E = np.array(E)
    first, last = E[:2000], E[-2000:]
    assert abs(first.mean() - last.mean()) < 1e-6
    assert np.max(np.abs(E - 1.0)) < (omega * h) ** 2


# --- serialization --------------------------------------------------------------------

def test_trajectory_file_round_trip(tmp_path):
    p = EvolveParams(1.5, 0.5, 8, 2)
    tr = solve(random_triple(2, 8, 0.5, 1), p)
    tr.to_files(tmp_path / "t.csv", tmp_path / "t.json")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "t,l,m,f,fdot,fddot,G"
    assert len(lines) == 1 + 9 * 9
    back = Trajectory.from_files(tmp_path / "t.csv", tmp_path / "t.json")
    assert back.params == p
    for name in ("f", "fdot", "fddot", "forcing"):
        assert np.array_equal(getattr(back, name), getattr(tr, name))


def test_trajectory_strided_files(tmp_path):
    p = EvolveParams(1.0, 1.0, 8, 1)
    tr = solve(random_triple(1, 8, 1.0, 2), p)
    tr.to_files(tmp_path / "t.csv", tmp_path / "t.json", stride=4)
    back = Trajectory.from_files(tmp_path / "t.csv", tmp_path / "t.json")
    assert back.params.n_steps == 2
    assert np.array_equal(back.f, tr.f[::4])
    with pytest.raises(ValueError):
        tr.to_files(tmp_path / "x.csv", tmp_path / "x.json", stride=3)


def test_trajectory_is_immutable():
    tr = solve(DataTriple.zeros(1, 4, 1.0), EvolveParams(1.0, 1.0, 4, 1))
    with pytest.raises(ValueError):
        tr.f[0, 0] = 1.0
    assert tr.state(2).t == pytest.approx(0.5)
    assert len(tr.states) == 5
