import math
import warnings
from types import SimpleNamespace

import numpy as np
import pytest

from pfopt.forward import (
    BlowUpError,
    StabilityWarning,
    State,
    apply_dirichlet,
    solve_forward,
    step,
)
from pfopt.grid import GridSpec, make_grid
from pfopt.model import LIMITER, ModelParams
from pfopt.scenarios import extract_interface, tanh_profile, tanh_step

P1 = ModelParams(gamma=1.0, beta=2.0, xi=0.005, y_mt=0.5, H=1.0)
P2 = ModelParams(
    gamma=3.0, beta=300.0, xi=0.0101, y_mt=1.0, H=2.0, reaction=LIMITER, eps0=0.0, eps1=0.2
)


def grid_1d(n, nt, T, L=1.0):
    return make_grid(GridSpec(dim=1, lengths=(L,), counts=(n,), n_t=nt, t_final=T))


def scenario(y_ini, yt_ini, ytilde_bc):
    return SimpleNamespace(
        y_ini=np.asarray(y_ini, dtype=float),
        ytilde_ini=np.asarray(yt_ini, dtype=float),
        ytilde_bc=np.asarray(ytilde_bc, dtype=float),
    )


class TestApplyDirichlet:
    def test_interior_kept_boundary_set(self):
        g = grid_1d(5, 2, 1.0)
        out = apply_dirichlet(np.zeros(5), [1.0, 1.0], g)
        assert np.array_equal(out, [1, 0, 0, 0, 1])

    def test_three_point_substitution(self):
        g = grid_1d(3, 2, 1.0)
        out = apply_dirichlet(np.full(3, 9.0), [0.0, 1.0], g)
        assert np.array_equal(out, [0, 9, 1])

    def test_idempotent(self):
        g = grid_1d(7, 2, 1.0)
        rng = np.random.default_rng(0)
        f = rng.standard_normal(7)
        vals = rng.standard_normal(2)
        once = apply_dirichlet(f, vals, g)
        twice = apply_dirichlet(once, vals, g)
        assert np.array_equal(once, twice)

    def test_incomplete_boundary_data_rejected(self):
        g = make_grid(GridSpec(dim=2, lengths=(1.0, 1.0), counts=(5, 5), n_t=2, t_final=1.0))
        with pytest.raises(Exception, match="boundary"):
            apply_dirichlet(np.zeros((5, 5)), np.zeros(3), g)


class TestStep:
    def test_zero_fixed_point(self):
        g = grid_1d(9, 2, 0.01)
        p = ModelParams(gamma=1.0, beta=2.0, xi=0.005, y_mt=0.0, H=1.0)
        s = State(y=np.zeros(9), ytilde=np.zeros(9), level=0)
        for _ in range(50):
            s = State(
                y=s.y, ytilde=s.ytilde, level=0
            )  # keep level small; only values matter
            s = step(s, np.zeros(2), np.zeros(2), p, g)
        assert np.all(s.y == 0.0)
        assert np.all(s.ytilde == 0.0)

    def test_single_step_hand_value(self):
        # three-point mesh, dt=0.01: interior reaction 0.005 scaled by
        # dt/(gamma*xi^2)=400 gives ytilde=2, latent heat then lifts y to 2
        g = grid_1d(3, 2, 0.01)
        s = State(y=np.zeros(3), ytilde=np.zeros(3), level=0)
        out = step(s, np.zeros(2), np.zeros(2), P1, g)
        assert math.isclose(out.ytilde[1], 2.0, rel_tol=1e-12)
        assert math.isclose(out.y[1], 2.0, rel_tol=1e-12)
        assert out.level == 1

    def test_reaction_kinds_diverge_after_one_step(self):
        g = grid_1d(5, 2, 1e-5)
        p_lin = P2.with_(reaction="linear")
        s0 = State(y=np.zeros(5), ytilde=np.full(5, 0.1), level=0)
        bc = np.full(2, 0.1)
        a = step(s0, np.zeros(2), bc, P2, g)
        b = step(s0, np.zeros(2), bc, p_lin, g)
        assert not np.allclose(a.ytilde, b.ytilde)

    def test_result_carries_next_control(self):
        g = grid_1d(5, 2, 1e-5)
        s0 = State(y=np.zeros(5), ytilde=np.zeros(5), level=0)
        out = step(s0, np.array([1.0, 2.0]), np.zeros(2), P1, g, u_next=np.array([3.0, 4.0]))
        assert out.y[0] == 3.0 and out.y[-1] == 4.0


class TestSolveForward:
    def test_two_levels_is_ic_plus_one_step(self):
        g = grid_1d(7, 2, 1e-5)
        rng = np.random.default_rng(1)
        sc = scenario(rng.uniform(0, 1, 7), rng.uniform(0, 1, 7), [1.0, 0.0])
        u = rng.uniform(0, 1, (2, 2))
        sol = solve_forward(sc, u, P1, g)
        frame0_y = apply_dirichlet(sc.y_ini, u[0], g)
        frame0_t = apply_dirichlet(sc.ytilde_ini, sc.ytilde_bc, g)
        assert np.array_equal(sol.y.frame(0), frame0_y)
        s1 = step(State(y=frame0_y, ytilde=frame0_t, level=0), u[0], sc.ytilde_bc, P1, g, u_next=u[1])
        assert np.array_equal(sol.y.frame(1), s1.y)
        assert np.array_equal(sol.ytilde.frame(1), s1.ytilde)
        assert sol.final.level == 1

    def test_deterministic_bit_identical(self):
        g = grid_1d(31, 200, 1e-4)
        rng = np.random.default_rng(2)
        sc = scenario(rng.uniform(0, 1, 31), rng.uniform(0, 1, 31), [1.0, 0.0])
        u = rng.uniform(-0.5, 1.0, (200, 2))
        a = solve_forward(sc, u, P1, g)
        b = solve_forward(sc, u, P1, g)
        assert np.array_equal(a.final.y, b.final.y)
        assert np.array_equal(a.final.ytilde, b.final.ytilde)

    def test_heat_equation_maximum_principle(self):
        # decouple the phase (beta=0, H=0): interior temperatures remain
        # inside the range of initial plus boundary data
        g = grid_1d(41, 400, 1e-3)
        p = ModelParams(gamma=1.0, beta=0.0, xi=0.005, y_mt=0.5, H=0.0)
        rng = np.random.default_rng(3)
        y0 = rng.uniform(-1, 2, 41)
        u = rng.uniform(-1, 2, (400, 2))
        sc = scenario(y0, np.zeros(41), [0.0, 0.0])
        sol = solve_forward(sc, u, p, g)
        lo = min(y0.min(), u.min())
        hi = max(y0.max(), u.max())
        assert sol.final.y.min() >= lo - 1e-12
        assert sol.final.y.max() <= hi + 1e-12

    def test_blow_up_names_level(self):
        g = grid_1d(11, 50, 0.5)  # dt far above the stability bound
        sc = scenario(np.zeros(11), np.zeros(11), [1.0, 0.0])
        u = np.zeros((50, 2))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", StabilityWarning)
            with pytest.raises(BlowUpError, match="time level"):
                solve_forward(sc, u, P1, g)

    def test_stability_warning_emitted(self):
        g = grid_1d(11, 3, 0.5)
        sc = scenario(np.zeros(11), np.zeros(11), [0.0, 0.0])
        p = ModelParams(gamma=1.0, beta=0.0, xi=0.005, y_mt=0.0, H=0.0)
        with pytest.warns(StabilityWarning):
            solve_forward(sc, np.zeros((3, 2)), p, g)

    def test_tracks_max_temperature_deviation(self):
        g = grid_1d(9, 4, 1e-6)
        sc = scenario(np.full(9, 0.5), np.zeros(9), [0.0, 0.0])
        u = np.full((4, 2), 0.5)
        u[2, 1] = 3.5  # deviation 3.0 at level 2, right wall
        sol = solve_forward(sc, u, P1, g)
        assert math.isclose(sol.max_temp_deviation, 3.0, rel_tol=1e-12)
        assert sol.max_dev_level == 2
        assert sol.max_dev_point == (8,)


class TestCheckpointing:
    def _problem(self):
        g = grid_1d(23, 301, 2e-4)
        rng = np.random.default_rng(4)
        sc = scenario(rng.uniform(0, 1, 23), rng.uniform(0, 1, 23), [1.0, 0.0])
        u = rng.uniform(0, 1, (301, 2))
        return g, sc, u

    def test_checkpointed_frames_bit_identical_to_dense(self):
        g, sc, u = self._problem()
        dense = solve_forward(sc, u, P1, g)
        budget = 40 * 2 * 23 * 8  # room for ~40 of 301 frames
        chk = solve_forward(sc, u, P1, g, memory_budget=budget)
        assert chk.y._store.stride > 1
        for k in (0, 1, 7, 150, 299, 300):
            assert np.array_equal(dense.y.frame(k), chk.y.frame(k))
            assert np.array_equal(dense.ytilde.frame(k), chk.ytilde.frame(k))

    def test_backward_sweep_over_checkpointed_history(self):
        g, sc, u = self._problem()
        dense = solve_forward(sc, u, P1, g)
        chk = solve_forward(sc, u, P1, g, memory_budget=24 * 2 * 23 * 8)
        for k in range(300, -1, -7):
            assert np.array_equal(dense.ytilde.frame(k), chk.ytilde.frame(k))

    def test_no_trajectory_mode(self):
        g, sc, u = self._problem()
        sol = solve_forward(sc, u, P1, g, keep_trajectory=False)
        assert sol.y is None and sol.ytilde is None
        dense = solve_forward(sc, u, P1, g)
        assert np.array_equal(sol.final.ytilde, dense.final.ytilde)


class TestInterfaceProfile:
    def test_relaxed_front_keeps_diffuse_shape(self):
        # start from a sharp step at the melting temperature and let the
        # interface-gated model relax; the profile must match the shifted
        # 0.5*(1 - tanh((x - x0)/(2*xi))) template in max norm
        xi = 0.005
        p = ModelParams(
            gamma=1.0, beta=2.0, xi=xi, y_mt=0.5, H=1.0, reaction=LIMITER, eps0=0.0, eps1=0.2
        )
        g = grid_1d(400, 201, 5e-4)
        yt0 = (g.axis(0) <= 0.5).astype(float)
        sc = scenario(np.full(400, 0.5), yt0, [1.0, 0.0])
        u = np.full((201, 2), 0.5)
        sol = solve_forward(sc, u, p, g)
        yt = sol.final.ytilde
        x = g.axis(0)
        x0 = extract_interface(yt, g)[0]
        # golden-section refinement of the best-fit shift
        def dev(shift):
            return np.max(np.abs(yt - tanh_step(x, shift, xi, 1)))
        lo, hi = x0 - 2 * g.dx[0], x0 + 2 * g.dx[0]
        for _ in range(60):
            m1 = lo + 0.382 * (hi - lo)
            m2 = hi - 0.382 * (hi - lo)
            if dev(m1) < dev(m2):
                hi = m2
            else:
                lo = m1
        assert dev(0.5 * (lo + hi)) <= 0.05

    def test_slow_traveling_front_keeps_shape(self):
        xi = 0.005
        p = ModelParams(
            gamma=1.0, beta=2.0, xi=xi, y_mt=0.5, H=1.0, reaction=LIMITER, eps0=0.0, eps1=0.2
        )
        g = grid_1d(400, 401, 1e-3)
        yt0 = tanh_profile([(0.5, 1)], xi, g)
        sc = scenario(np.full(400, 0.3), yt0, [1.0, 0.0])
        u = np.full((401, 2), 0.3)  # supercooled: the front advances
        sol = solve_forward(sc, u, p, g)
        yt = sol.final.ytilde
        x = g.axis(0)
        x0 = extract_interface(yt, g)[0]
        assert x0 > 0.5  # it moved
        devs = [
            np.max(np.abs(yt - tanh_step(x, s, xi, 1)))
            for s in np.linspace(x0 - g.dx[0], x0 + g.dx[0], 41)
        ]
        assert min(devs) <= 0.05
