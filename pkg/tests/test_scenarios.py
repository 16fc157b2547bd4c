import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsdsav.mesh import Subdomain
from nsdsav.scenarios import ScenarioError
from nsdsav.scenarios.convergence import ConvergenceTable, ConvergenceRow, convergence_study, run_level
from nsdsav.scenarios.diagnostics import (block_speed_ratio, centerline_profiles, evaluate_global_velocity,
                                          global_velocity, mass_balance, prescribed_flux)
from nsdsav.scenarios.library import (FILTER_BLOCKS, cavity, filter_conductivity, filtration,
                                      manufactured, manufactured_exact, quiescent, yshape)
from nsdsav.scenarios.reference import PicardDivergence, reference_implicit_solve
from nsdsav.scenarios.yshape_mesh import INLETS, OUTLET
from nsdsav.stepper import Discretization, State, run

NU, K, S0 = 1e-3, 0.1, 1.0
EXACT, F1, F2 = manufactured_exact(0.01, NU, K, S0)
STEP = 1e-5


def _fd_grad(f, x, y, t):
    return ((f(x + STEP, y, t) - f(x - STEP, y, t)) / (2 * STEP),
            (f(x, y + STEP, t) - f(x, y - STEP, t)) / (2 * STEP))


def _fd_lap(f, x, y, t):
    return (f(x + STEP, y, t) + f(x - STEP, y, t) + f(x, y + STEP, t) + f(x, y - STEP, t)
            - 4 * f(x, y, t)) / STEP ** 2


def _comp(i):
    return lambda x, y, t: EXACT.u(x, y, t)[i]


def test_forcing_matches_finite_differences(rng):
    pts = rng.uniform(0.05, 0.95, (20, 2))
    ts = rng.uniform(0.2, 1.0, 20)
    for (x, y), t in zip(pts, ts):
        u1, u2 = EXACT.u(x, y, t)
        ut = [(_comp(i)(x, y, t + STEP) - _comp(i)(x, y, t - STEP)) / (2 * STEP) for i in range(2)]
        px, py = _fd_grad(EXACT.p, x, y, t)
        want = []
        for i, dp in enumerate((px, py)):
            gx, gy = _fd_grad(_comp(i), x, y, t)
            lap = _fd_lap(_comp(i), x, y, t)
            want.append(ut[i] - NU * lap + u1 * gx + u2 * gy + dp)
        got = F1(x, y, t)
        scale = max(abs(want[0]), abs(want[1]), 1e-3 * t ** 3)
        assert abs(got[0] - want[0]) <= 1e-6 * scale * 1e2
        assert abs(got[1] - want[1]) <= 1e-6 * scale * 1e2
        pt = (EXACT.phi(x, y, t + STEP) - EXACT.phi(x, y, t - STEP)) / (2 * STEP)
        w2 = S0 * pt - K * _fd_lap(EXACT.phi, x, y, t)
        assert F2(x, y, t) == pytest.approx(w2, rel=1e-4, abs=1e-8)


def test_exact_gradients_match_finite_differences(rng):
    for x, y, t in rng.uniform(0.05, 0.95, (20, 3)):
        g = EXACT.grad_u(x, y, t)
        for i in range(2):
            np.testing.assert_allclose(g[i], _fd_grad(_comp(i), x, y, t), rtol=1e-6, atol=1e-12)
        np.testing.assert_allclose(EXACT.grad_phi(x, y, t), _fd_grad(EXACT.phi, x, y, t),
                                   rtol=1e-6, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 0.99), st.floats(0.01, 0.99), st.floats(0.0, 1.0))
def test_exact_velocity_is_divergence_free(x, y, t):
    (a11, _), (_, a22) = EXACT.grad_u(x, y, t)
    assert abs(a11 + a22) <= 1e-14


@pytest.mark.parametrize("x", np.linspace(0.0, 1.0, 11))
def test_exact_solution_satisfies_interface_conditions(x):
    t, g = 0.7, 1.0
    nf = np.array([0.0, -1.0])
    u = np.array(EXACT.u(x, 0.0, t))
    grad_phi = np.array(EXACT.grad_phi(x, 0.0, t))
    # mass: u . n_f = -k grad(phi) . n_f
    assert u @ nf == pytest.approx(-K * grad_phi @ nf, abs=1e-15)
    # normal force balance: p - 2 nu n.D(u)n = g phi
    G = np.array(EXACT.grad_u(x, 0.0, t))
    D = 0.5 * (G + G.T)
    assert EXACT.p(x, 0.0, t) - 2 * NU * nf @ D @ nf == pytest.approx(g * EXACT.phi(x, 0.0, t), abs=1e-15)


def test_bjs_compensation_restores_spatial_accuracy():
    errs = {}
    for comp in (True, False):
        sc = manufactured(bjs_compensation=comp)
        errs[comp] = [run_level(sc, "bdf2-sav", 1 / 32, h=h).err_u for h in (1 / 16, 1 / 32)]
    rate_on = np.log2(errs[True][0] / errs[True][1])
    rate_off = np.log2(errs[False][0] / errs[False][1])
    assert rate_on > 1.5
    assert rate_off < 0.5 and errs[False][1] > 3 * errs[True][1]


def test_compensation_density_vanishes_when_off():
    assert manufactured(bjs_compensation=False).interface_traction() is None
    assert quiescent().interface_traction() is None
    assert manufactured().interface_traction() is not None


def test_cavity_lid_values():
    sc = cavity(h=0.25)
    d = Discretization(sc, sc.mesh())
    st = run(d, "be-sav", 0.01, 1).final
    vel = d.spaces.velocity
    comps = vel.split(st.u)
    on_top = np.isclose(vel.node_coords[:, 1], 1.0)
    walls = (np.isclose(vel.node_coords[:, 0], 0.0) | np.isclose(vel.node_coords[:, 0], 1.0)) & ~on_top
    walls &= vel.node_coords[:, 1] > 0
    np.testing.assert_array_equal(comps[0, on_top], 1.0)
    np.testing.assert_array_equal(comps[1, on_top], 0.0)
    assert not comps[:, walls].any()


def test_filtration_inflow_and_conductivity():
    sc = filtration(h=0.125)
    u1, u2 = sc.velocity_bc[1][1](np.array([1.0, 0.0]), np.array([2.0, 2.0]), 0.0)
    np.testing.assert_allclose(u2, [-1.0, 0.0])
    assert not u1.any()
    k = filter_conductivity()
    np.testing.assert_allclose(k(np.array([1.0, 1.0, 0.1]), np.array([1.06, 0.56, 0.2])),
                               [1e-6, 1e-6, 1.0])
    assert sc.extras["blocks"] == FILTER_BLOCKS


def test_filtration_flow_avoids_blocks():
    sc = filtration(h=0.125)
    d = Discretization(sc, sc.mesh())
    traj = run(d, "be-sav", 0.05, 4, T=sc.final_time)
    _, _, ratio = block_speed_ratio(d, traj.final, FILTER_BLOCKS)
    assert ratio < 1e-3
    _, _, rel = mass_balance(d, traj.final.u)
    assert rel < 1e-10


def test_yshape_fluxes():
    sc = yshape()
    m = sc.mesh()
    ha, cd = INLETS
    assert prescribed_flux(m, ha, sc.velocity_bc[0][1]) == pytest.approx(-0.125, rel=1e-12)
    assert prescribed_flux(m, cd, sc.velocity_bc[1][1]) == pytest.approx(-0.1, rel=1e-12)
    assert prescribed_flux(m, OUTLET, sc.velocity_bc[2][1]) == pytest.approx(0.25, rel=1e-12)
    d = Discretization(sc, m)
    traj = run(d, "be-sav", 0.05, 2, T=sc.final_time)
    fluxes, _, rel = mass_balance(d, traj.final.u)
    assert rel < 1e-10
    # the conduit drains the mismatch into the aquifer
    assert fluxes["interface"] == pytest.approx(-0.025, abs=1e-10)


def test_global_velocity_of_linear_head():
    sc = quiescent(k=2.0)
    d = Discretization(sc, sc.mesh(0.25))
    phi = d.spaces.head.interpolate(lambda x, y: -y)
    st = State(np.zeros(d.n_u), np.zeros(d.n_p), phi, 1.0, 0.0)
    gv = global_velocity(d, st)
    porous_only = np.isnan(gv.fluid_side[:, 0])
    np.testing.assert_allclose(gv.U[porous_only], [[0.0, 2.0]] * porous_only.sum(), atol=1e-12)
    np.testing.assert_allclose(gv.porous_side[gv.on_interface], [[0.0, 2.0]] * gv.on_interface.sum(),
                               atol=1e-12)
    np.testing.assert_allclose(gv.U[gv.on_interface], 0.0)
    pts = evaluate_global_velocity(d, st, [[0.3, -0.4], [0.5, 0.0], [0.2, 0.5]])
    np.testing.assert_allclose(pts, [[0.0, 2.0], [0.0, 0.0], [0.0, 0.0]], atol=1e-12)
    pts = evaluate_global_velocity(d, st, [[0.5, 0.0]], prefer=Subdomain.POROUS)
    np.testing.assert_allclose(pts, [[0.0, 2.0]], atol=1e-12)
    with pytest.raises(ValueError):
        evaluate_global_velocity(d, st, [[2.0, 0.0]])


def test_centerline_profiles_shape():
    sc = cavity(h=0.25)
    d = Discretization(sc, sc.mesh())
    (ys, u1), (xs, u2) = centerline_profiles(d, run(d, "be-sav", 0.01, 1).final, n=9)
    assert ys[0] == -1.0 and ys[-1] == 1.0 and xs[-1] == 1.0
    assert u1[-1] == 1.0 and len(u2) == 9


def test_reference_on_zero_problem_converges_at_once():
    sc = quiescent()
    traj = reference_implicit_solve(sc, 0.1, 3, mesh=sc.mesh(0.25))
    assert traj.iterations == [1, 1, 1]
    assert not traj.final.u.any()
    assert traj.final.r == 1.0


def test_reference_is_as_accurate_as_sav():
    sc = manufactured()
    dt, h = 1 / 16, 0.25
    m = sc.mesh(h)
    d = Discretization(sc, m)
    ref = reference_implicit_solve(sc, dt, 16, disc=d)
    sav = run(d, "be-sav", dt, 16, T=1.0)

    def err(state):
        return d.assembler.norm(d.spaces.velocity, state.u, lambda x, y: EXACT.u(x, y, 1.0),
                                lambda x, y: EXACT.grad_u(x, y, 1.0), kind="H1")

    assert err(ref.final) <= 2 * err(sav.final)
    assert max(ref.iterations) <= 10


def test_reference_reports_stalled_picard():
    sc = cavity(h=0.25)
    with pytest.raises(PicardDivergence) as exc:
        reference_implicit_solve(sc, 0.01, 1, picard_tol=1e-30, picard_max=2)
    assert exc.value.residual > 0
    with pytest.raises(ValueError):
        reference_implicit_solve(sc, 0.01, 1, picard_tol=0.0)


def test_convergence_rates_of_zero_solution_are_undefined():
    sc = manufactured(c=0.0)
    table = convergence_study("be-sav", [0.5, 0.25], scenario=sc, h_list=[0.5, 0.5])
    assert table.rows[0].err_u == 0.0
    assert table.rates("u") == [None]


def test_convergence_table_rates():
    t = ConvergenceTable("be-sav")
    t.add(ConvergenceRow(0.1, 0.1, 1.0, 2.0, 4.0))
    t.add(ConvergenceRow(0.05, 0.1, 0.5, 0.5, 4.0))
    assert t.rates("u") == [pytest.approx(1.0)]
    assert t.rates("p") == [pytest.approx(2.0)]
    assert t.rates("phi") == [pytest.approx(0.0)]


def test_convergence_argument_errors():
    with pytest.raises(ValueError):
        convergence_study("be-sav", [0.25, 0.5])
    with pytest.raises(ValueError):
        convergence_study("be-sav", [0.5], coupling="h3=dt")
    with pytest.raises(ValueError):
        convergence_study("be-sav", [0.5], scenario=quiescent())
    with pytest.raises(ValueError):
        run_level(manufactured(), "be-sav", 0.3)


def test_scenario_check():
    sc = cavity()
    m = sc.mesh(0.5)
    assert sc.check(m)
    with pytest.raises(ScenarioError, match="fluid_top"):
        sc.with_options(velocity_bc=[(("fluid_left", "fluid_right"), None)]).check(m)
    with pytest.raises(ScenarioError, match="repeat"):
        sc.with_options(velocity_bc=sc.velocity_bc + [(("fluid_top",), None)]).check(m)
    with pytest.raises(ScenarioError, match="unknown"):
        sc.with_options(head_natural=("nowhere",)).check(m)
    with pytest.raises(ScenarioError, match="head"):
        sc.with_options(head_bc=[(("porous_left",), None)]).check(m)
