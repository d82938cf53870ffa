import math

import numpy as np
import pytest
import sympy as sp
from scipy.integrate import quad

from mgpinn.autodiff import MultiJet
from mgpinn.errors import ConfigurationError, NumericalFault
from mgpinn.problems import (NU_1D, burgers_residual, exact_1d, exact_1d_jets, exact_2d, exact_3d, forcing_3d,
                             get_problem, residual_1d, residual_2d, residual_3d)
from mgpinn.sampling import test_grid as make_grid

EXACT_1D_AT_HALF_POINT3 = -0.8012403151192206  # 200 and 400 nodes agree to 3e-16


def cole_hopf_by_adaptive_quadrature(t, x, nu=NU_1D):
    """Independent oracle: adaptive quadrature of the two heat-kernel integrals."""
    width = math.sqrt(4 * nu * t)
    logh = lambda y: -math.cos(math.pi * y) / (2 * math.pi * nu)
    shift = max(logh(x - e) for e in np.linspace(-8 * width, 8 * width, 401))
    w = lambda e: math.exp(logh(x - e) - shift - e * e / (4 * nu * t))
    num = quad(lambda e: math.sin(math.pi * (x - e)) * w(e), -12 * width, 12 * width, limit=400,
               epsabs=0, epsrel=1e-13, points=[0.0])[0]
    den = quad(w, -12 * width, 12 * width, limit=400, epsabs=0, epsrel=1e-13, points=[0.0])[0]
    return -num / den


def _jet(value, grads, hess, d):
    n = len(value)
    return MultiJet(np.asarray(value, float), np.asarray(grads, float).reshape(n, d + 1),
                    np.asarray(hess, float).reshape(n, d), tuple(range(d + 1)), tuple(range(1, d + 1)))


# --- residual operators -------------------------------------------------------

def test_zero_and_constant_jets_have_zero_residual():
    assert residual_1d(_jet([0.0], [0, 0], [0], 1))[0] == 0.0
    assert residual_1d(_jet([1.0], [0, 0], [0], 1))[0] == 0.0


def test_residual_by_hand():
    # u_t + u u_x - nu u_xx with u=2, u_t=1, u_x=3, u_xx=4, nu=0.5 -> 1 + 6 - 2
    assert burgers_residual(_jet([2.0], [1, 3], [4], 1), 0.5)[0] == 5.0
    jet = _jet([2.0], [1, 3, 5], [4, 6], 2)
    assert burgers_residual(jet, 0.5, np.array([1.0]))[0] == 1 + 2 * 8 - 0.5 * 10 - 1


def test_residual_partials_match_finite_differences(rng):
    prob = get_problem("burgers2d")
    base = rng.normal(size=6)
    jet = lambda v: _jet([v[0]], v[1:4], v[4:6], 2)
    dv, dg, dh = prob.residual_partials(jet(base), None)
    analytic = np.concatenate([dv, dg[0], dh[0]])
    for i in range(6):
        e = np.zeros(6)
        e[i] = 1e-6
        fd = (prob.residual(jet(base + e), None)[0] - prob.residual(jet(base - e), None)[0]) / 2e-6
        assert abs(fd - analytic[i]) <= 1e-8 * max(1, abs(fd))


# --- 1D exact solution --------------------------------------------------------

def test_exact_1d_matches_adaptive_quadrature():
    for t, x in [(0.5, 0.3), (0.1, -0.7), (0.9, 0.05), (0.3, 0.95), (1.0, -0.01)]:
        assert abs(exact_1d(t, x) - cole_hopf_by_adaptive_quadrature(t, x)) <= 1e-10


def test_exact_1d_regression_value():
    assert abs(exact_1d(0.5, 0.3) - EXACT_1D_AT_HALF_POINT3) <= 1e-14
    assert abs(exact_1d(0.5, 0.3, nodes=200) - exact_1d(0.5, 0.3, nodes=400)) <= 1e-8


def test_exact_1d_initial_and_boundary():
    assert exact_1d(0.0, 0.5) == -1.0
    t = np.linspace(0, 1, 101)
    assert np.max(np.abs(exact_1d(t, -1.0))) <= 1e-9
    assert np.max(np.abs(exact_1d(t, 1.0))) <= 1e-9
    x = np.linspace(-1, 1, 257)
    assert np.max(np.abs(exact_1d(1e-6, x) + np.sin(np.pi * x))) <= 1e-5


def test_exact_1d_odd_symmetry():
    t, x = np.meshgrid(np.linspace(1e-3, 1, 20), np.linspace(0, 1, 33), indexing="ij")
    assert np.max(np.abs(exact_1d(t, -x) + exact_1d(t, x))) <= 1e-8


def test_exact_1d_self_convergent_on_test_grid():
    grid, _ = make_grid(get_problem("burgers1d"), (100, 256))
    a = exact_1d(grid[:, 0], grid[:, 1], nodes=200, check=False)
    b = exact_1d(grid[:, 0], grid[:, 1], nodes=400, check=False)
    assert np.max(np.abs(a - b)) <= 1e-8


def test_exact_1d_flags_unconverged_quadrature():
    with pytest.raises(NumericalFault):
        exact_1d(0.9, 0.1, nodes=6)


def test_exact_1d_jets_match_finite_differences():
    t = np.array([0.2, 0.5, 0.8])
    x = np.array([-0.4, 0.3, 0.6])
    jet = exact_1d_jets(t, x)
    h = 1e-4
    ut = (exact_1d(t + h, x) - exact_1d(t - h, x)) / (2 * h)
    ux = (exact_1d(t, x + h) - exact_1d(t, x - h)) / (2 * h)
    uxx = (exact_1d(t, x + h) - 2 * exact_1d(t, x) + exact_1d(t, x - h)) / h ** 2
    np.testing.assert_allclose(jet.d(0), ut, rtol=1e-5)
    np.testing.assert_allclose(jet.d(1), ux, rtol=1e-5)
    np.testing.assert_allclose(jet.dd(1), uxx, rtol=1e-4)


def test_exact_1d_residual_small():
    jet = exact_1d_jets(0.5, 0.3)
    assert abs(residual_1d(jet)[0]) <= 1e-6


# --- 2D / 3D logistic fronts ------------------------------------------------

def test_front_values_by_hand():
    assert exact_2d(1, 0.5, 0.5) == 0.5
    assert math.isclose(exact_3d(1, 0, 0, 0), 1 / (1 + math.exp(-0.5)), rel_tol=1e-15)
    assert abs(exact_3d(1, 0, 0, 0) - 0.6224593) <= 1e-7


def test_2d_initial_condition_has_half_exponent(rng):
    x, y = rng.uniform(size=(2, 10))
    np.testing.assert_allclose(exact_2d(0.0, x, y), 1 / (1 + np.exp(100 * (x + y) / 2)), rtol=1e-14)
    prob = get_problem("burgers2d")
    pts = np.column_stack([np.zeros(10), x, y])
    assert np.array_equal(prob.initial_target(pts), exact_2d(0.0, x, y))


@pytest.mark.parametrize("name,d,re", [("burgers2d", 2, 100.0), ("burgers3d", 3, 1.0)])
def test_front_jets_and_forcing_against_symbolic(name, d, re, rng):
    t, *xs = sp.symbols("t x0:%d" % d)
    nu = 1 / sp.Float(re)
    u = 1 / (1 + sp.exp((sum(xs) - t) / (2 * nu)))
    exprs = [u, sp.diff(u, t)] + [sp.diff(u, v) for v in xs] + [sp.diff(u, v, 2) for v in xs]
    f = exprs[1] + u * sum(exprs[2:2 + d]) - nu * sum(exprs[2 + d:])
    fns = [sp.lambdify([t, *xs], e, "numpy") for e in exprs + [f]]
    prob = get_problem(name)
    pts = rng.uniform(size=(100, d + 1))
    jet = prob.exact_jets(pts)
    cols = [pts[:, i] for i in range(d + 1)]
    np.testing.assert_allclose(jet.value, fns[0](*cols), rtol=1e-12)
    np.testing.assert_allclose(jet.grad, np.column_stack([fns[1 + i](*cols) for i in range(d + 1)]),
                               rtol=1e-11, atol=1e-14)
    np.testing.assert_allclose(jet.hess, np.column_stack([fns[2 + d + i](*cols) for i in range(d)]),
                               rtol=1e-10, atol=1e-12)
    sym_f = fns[-1](*cols)
    if name == "burgers3d":
        np.testing.assert_allclose(forcing_3d(*cols), sym_f, rtol=1e-11, atol=1e-14)
        np.testing.assert_allclose(prob.forcing(pts), sym_f, rtol=1e-11, atol=1e-14)
    else:
        assert np.max(np.abs(sym_f)) <= 1e-9  # 2D front solves the unforced equation


@pytest.mark.parametrize("name", ["burgers2d", "burgers3d"])
def test_manufactured_closure(name, rng):
    prob = get_problem(name)
    pts = np.column_stack([rng.uniform(1e-3, 1, 100)] + [rng.uniform(1e-3, 1 - 1e-3, 100)
                                                           for _ in range(prob.spatial_dim)])
    assert np.max(np.abs(prob.residual(prob.exact_jets(pts), pts))) <= 1e-9


def test_residual_3d_function_form(rng):
    prob = get_problem("burgers3d")
    pts = rng.uniform(size=(20, 4))
    assert np.max(np.abs(residual_3d(prob.exact_jets(pts), prob.forcing(pts)))) <= 1e-12
    assert np.max(np.abs(residual_2d(get_problem("burgers2d").exact_jets(pts[:, :3])))) <= 1e-9


@pytest.mark.parametrize("name", ["burgers1d", "burgers2d", "burgers3d"])
def test_initial_and_boundary_operators_vanish_on_exact(name):
    from mgpinn.sampling import build_samples
    prob = get_problem(name)
    s = build_samples(prob, 10, 40, 60, seed=2)
    assert np.max(np.abs(prob.initial_residual(prob.exact(s.initial), s.initial))) <= 1e-9
    assert np.max(np.abs(prob.boundary_residual(prob.exact(s.boundary), s.boundary))) <= 1e-9


def test_3d_initial_operator_equals_exact(rng):
    prob = get_problem("burgers3d")
    pts = np.column_stack([np.zeros(20), rng.uniform(size=(20, 3))])
    assert np.array_equal(prob.initial_target(pts), exact_3d(0, pts[:, 1], pts[:, 2], pts[:, 3]))


def test_problem_overrides():
    assert get_problem("burgers2d", re=50).nu == 1 / 50
    assert get_problem("burgers1d", nu=0.1).nu == 0.1
    assert get_problem("burgers1d", T=0.5).T == 0.5
    with pytest.raises(ConfigurationError):
        get_problem("heat")
    with pytest.raises(ConfigurationError):
        get_problem("burgers2d", nu=0.1, re=10)
    with pytest.raises(ConfigurationError):
        get_problem("burgers1d", nu=-1)
