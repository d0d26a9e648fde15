import json
import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from so2deg import catalog
from so2deg.errors import OrbitNotFound, VerificationUnavailable
from so2deg.galerkin import (
    FourierLoop,
    GalerkinProblem,
    find_orbit,
    galerkin_gradient,
    minimal_period_of,
    ode_residual,
    rk4_check,
    search_orbits,
)
from so2deg.spectral import lambda_block
from so2deg.systems import ModelPotential, SystemSpec

from conftest import random_sym

TWO_PI = 2 * math.pi


def sitnikov_rhs(t, y):
    x, v = y
    return [v, -x / (x * x + 0.25) ** 1.5]


def shoot(A, T, t_eval=None):
    return solve_ivp(sitnikov_rhs, (0, T), [A, 0.0], method="DOP853", rtol=1e-13, atol=1e-13,
                     t_eval=t_eval, dense_output=False)


def shooting_orbit(T=TWO_PI):
    """Amplitude of the symmetric orbit whose velocity vanishes again at T/2."""
    half = lambda A: shoot(A, T / 2).y[1, -1]
    return brentq(half, 1.0, 1.1, xtol=1e-14)


@pytest.fixture(scope="module")
def sitnikov_orbit():
    return find_orbit(catalog.build("6.7"), 1, 1.0)


def loop_from_modes(T, n, modes, N=8, seed=0):
    rng = np.random.default_rng(seed)
    a = np.zeros((N, n))
    b = np.zeros((N, n))
    for k in modes:
        a[k - 1] = rng.normal(size=n)
        b[k - 1] = rng.normal(size=n)
    return FourierLoop(T, np.zeros(n), a, b)


class TestMinimalPeriod:
    def test_examples(self):
        assert minimal_period_of(loop_from_modes(TWO_PI, 1, [2])) == (pytest.approx(math.pi), 2)
        assert minimal_period_of(loop_from_modes(6.0, 2, [2, 3])) == (pytest.approx(6.0), 1)
        assert minimal_period_of(loop_from_modes(4.0, 1, [4, 6])) == (pytest.approx(2.0), 2)

    def test_constant_loop(self):
        with pytest.raises(ValueError):
            minimal_period_of(FourierLoop.constant(1.0, [0.5], 4))


class TestLoop:
    def test_derivatives(self):
        loop = loop_from_modes(3.0, 2, [1, 3])
        t = np.linspace(0, 3, 50)
        h = 1e-5
        fd = (loop.evaluate(t + h) - loop.evaluate(t - h)) / (2 * h)
        np.testing.assert_allclose(loop.evaluate(t, 1), fd, atol=1e-8)
        fd2 = (loop.evaluate(t + h, 1) - loop.evaluate(t - h, 1)) / (2 * h)
        np.testing.assert_allclose(loop.evaluate(t, 2), fd2, atol=1e-6)

    def test_shift(self):
        loop = loop_from_modes(3.0, 2, [1, 2, 5])
        t = np.linspace(0, 3, 17)
        np.testing.assert_allclose(loop.shift(0.4).evaluate(t), loop.evaluate(t + 0.4), atol=1e-12)

    def test_json_and_csv(self):
        loop = loop_from_modes(3.0, 2, [1, 2])
        again = FourierLoop.from_dict(json.loads(json.dumps(loop.to_dict())))
        np.testing.assert_array_equal(again.coeffs(), loop.coeffs())
        csv = loop.to_csv(10).splitlines()
        assert csv[0] == "t,u0,u1" and len(csv) == 11


class TestGradient:
    @pytest.mark.parametrize("example", ["6.5", "6.7"])
    def test_finite_differences(self, example):
        spec = catalog.build(example)
        pot = spec.potential
        N = 6
        prob = GalerkinProblem(pot.grad, pot.hess, spec.n, spec.T, N, spec.v_inf, pot.value)
        rng = np.random.default_rng(1)
        decay = 1.0 / (1.0 + np.arange(2 * N + 1))[:, None]
        for _ in range(50):
            c = rng.normal(size=(2 * N + 1, spec.n)) * decay
            v = rng.normal(size=(2 * N + 1, spec.n)) * decay
            h = 1e-5
            fd = (prob.action(c + h * v) - prob.action(c - h * v)) / (2 * h)
            exact = prob.inner(prob.gradient(c), v)
            assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))

    def test_jacobian_matches_differences(self):
        spec = catalog.build("6.5")
        pot = spec.potential
        prob = GalerkinProblem(pot.grad, pot.hess, spec.n, spec.T, 4, spec.v_inf)
        rng = np.random.default_rng(2)
        c = rng.normal(size=(9, 4)) * 0.3
        v = rng.normal(size=(9, 4))
        h = 1e-6
        fd = (prob.gradient(c + h * v) - prob.gradient(c - h * v)).reshape(-1) / (2 * h)
        np.testing.assert_allclose(prob.jacobian(c) @ v.reshape(-1), fd, atol=1e-7)

    def test_quadratic_blocks(self):
        rng = np.random.default_rng(3)
        A = random_sym(rng, 3)
        T, N = 2.7, 5
        prob = GalerkinProblem(lambda x: x @ A, lambda x: np.broadcast_to(A, x.shape + (3,)), 3, T, N, A)
        J = prob.jacobian(rng.normal(size=(2 * N + 1, 3))).reshape(2 * N + 1, 3, 2 * N + 1, 3)
        for r in range(2 * N + 1):
            for s in range(2 * N + 1):
                if r == s:
                    k = r if r <= N else r - N
                    expect = -A if r == 0 else lambda_block(A, T, k)
                    np.testing.assert_allclose(J[r, :, s, :], expect, atol=1e-12)
                else:
                    assert np.max(np.abs(J[r, :, s, :])) <= 1e-12

    def test_reference_independent(self):
        # the gradient must not depend on the split into linear part and remainder
        spec = catalog.build("6.7")
        pot = spec.potential
        c = np.random.default_rng(4).normal(size=(9, 1)) * 0.5
        g0 = GalerkinProblem(pot.grad, pot.hess, 1, spec.T, 4, np.zeros((1, 1))).gradient(c)
        g1 = GalerkinProblem(pot.grad, pot.hess, 1, spec.T, 4, np.array([[3.0]])).gradient(c)
        np.testing.assert_allclose(g0, g1, atol=1e-13)

    def test_public_wrapper(self):
        spec = catalog.build("6.7")
        loop = FourierLoop.constant(spec.T, [0.0], 4)
        assert np.all(galerkin_gradient(spec, loop).coeffs() == 0)


class TestSitnikovOrbit:
    def test_accepted(self, sitnikov_orbit):
        r = sitnikov_orbit
        assert r.accepted
        assert r.minimal_period == pytest.approx(TWO_PI)
        assert r.isotropy_k == 1
        assert r.ode_residual <= 1e-7
        assert r.gradient_norm <= 1e-10
        assert r.distance_to_stationary > 1e-4

    def test_shooting_oracle(self, sitnikov_orbit):
        loop = sitnikov_orbit.loop
        A = shooting_orbit()
        assert loop.evaluate(0.0)[0, 0] == pytest.approx(A, abs=1e-6)
        assert abs(loop.evaluate(0.0, 1)[0, 0]) < 1e-9
        t = np.linspace(0, TWO_PI, 201)
        sol = shoot(A, TWO_PI, t)
        assert np.max(np.abs(sol.y[0] - loop.evaluate(t)[:, 0])) <= 1e-6
        assert np.max(np.abs(sol.y[1] - loop.evaluate(t, 1)[:, 0])) <= 1e-6

    def test_rk4(self, sitnikov_orbit):
        pot = catalog.sitnikov_model()
        check = rk4_check(pot.grad, sitnikov_orbit.loop)
        assert check["periodicity_defect"] <= 1e-6
        assert check["max_deviation"] <= 1e-6

    def test_phase_shifts(self, sitnikov_orbit):
        pot = catalog.sitnikov_model()
        base = ode_residual(pot.grad, sitnikov_orbit.loop)
        for j in range(8):
            shifted = sitnikov_orbit.loop.shift(j * TWO_PI / 8 + 0.1)
            assert abs(ode_residual(pot.grad, shifted) - base) <= 1e-8

    def test_mode_doubling(self, sitnikov_orbit):
        spec = catalog.build("6.7")
        r = sitnikov_orbit
        N = r.checks["modes"]
        doubled = find_orbit(spec, 1, 1.0, N=2 * N, refine=False)
        diff = doubled.loop.coeffs() - r.loop.resample(2 * N).coeffs()
        assert np.linalg.norm(diff) <= 1e-6

    def test_json(self, sitnikov_orbit):
        d = json.loads(json.dumps(sitnikov_orbit.to_dict()))
        assert d["isotropy_k"] == 1 and d["accepted"]

    def test_no_orbit_below_edge(self):
        spec = catalog.build("6.7", 1.0)
        accepted, attempts = search_orbits(spec, [1, 2])
        assert accepted == []
        assert len(attempts) == 8

    def test_small_seed_falls_to_origin(self):
        with pytest.raises(OrbitNotFound):
            find_orbit(catalog.build("6.7"), 1, 0.1)


class TestOtherSystems:
    def test_ex65_witness_mode(self):
        spec = catalog.build("6.5")
        accepted, _ = search_orbits(spec, [2])
        r = accepted[0]
        assert r.accepted and r.isotropy_k == 2
        assert r.minimal_period == pytest.approx(math.pi)
        check = rk4_check(spec.potential.grad, r.loop)
        assert check["periodicity_defect"] <= 1e-6 and check["max_deviation"] <= 1e-7

    def test_hessian_only(self):
        spec = catalog.build("6.7")
        bare = SystemSpec(spec.n, spec.T, spec.v_inf, spec.critical_points, brouwer_inf=-1)
        with pytest.raises(VerificationUnavailable, match="hessian-only"):
            find_orbit(bare, 1, 1.0)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            find_orbit(catalog.build("6.7"), 0, 1.0)
