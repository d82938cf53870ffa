"""Oracle self-checks runnable from the command line (``mgpinn check``)."""

import numpy as np

from .autodiff import VALUE, forward_jets
from .gradestack import GradeNet, GradeStack
from .loss import PinnObjective
from .network import NetworkSpec, init_params
from .problems import NU_1D, _cole_hopf_sums, exact_1d, get_problem
from .sampling import build_samples, hammersley, radical_inverse, test_grid


def _rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-3))


def random_store(widths, seed):
    """Network with all weights and biases uniform in [-1, 1]."""
    spec = NetworkSpec(widths)
    store = init_params(spec, seed, output_layer_zero=False)
    store.flat[:] = np.random.default_rng(seed).uniform(-1.0, 1.0, store.flat.size)
    return spec, store


def fd_parameter_gradient(objective, h=1e-6):
    """Central differences of the objective's total loss over every trainable slot."""
    view = objective.view
    theta = view.gather()
    out = np.empty_like(theta)
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + h
        view.scatter(theta)
        lp = objective.evaluate(grad=False)[0].total
        theta[i] = orig - h
        view.scatter(theta)
        lm = objective.evaluate(grad=False)[0].total
        theta[i] = orig
        out[i] = (lp - lm) / (2.0 * h)
    view.scatter(theta)
    return out


def single_net_objective(problem, spec, store, samples):
    stack = GradeStack(problem.input_dim)
    stack.grades.append(GradeNet(spec, store, 1))
    c_in = problem.layout.seed(samples.collocation)
    ib = np.concatenate([samples.initial, samples.boundary])
    return PinnObjective(problem, samples, stack.head(), c_in, VALUE.seed(ib))


def check_gradients(n_nets=5, tol=1e-6):
    results = []
    for name in ("burgers1d", "burgers2d", "burgers3d"):
        prob = get_problem(name)
        samples = build_samples(prob, 6, 4, 2 * len(prob.faces), seed=3)
        worst = 0.0
        for k in range(n_nets):
            spec, store = random_store([prob.input_dim, 8, 8, 1], 100 + k)
            store.flat *= 0.5
            obj = single_net_objective(prob, spec, store, samples)
            _, g = obj.evaluate()
            fd = fd_parameter_gradient(obj)
            err = np.linalg.norm(g - fd) / max(np.linalg.norm(fd), 1e-300)
            worst = max(worst, err)
        results.append((f"gradients/{name}", worst <= tol, f"max rel error {worst:.2e} (tol {tol:g})"))
    return results


def fd_derivatives(f, x, coord, h1=1e-3, h2=1e-2):
    """Five-point central differences of ``f`` along one input coordinate."""
    def at(step):
        y = x.copy()
        y[:, coord] += step
        return f(y)
    d1 = (at(-2 * h1) - 8 * at(-h1) + 8 * at(h1) - at(2 * h1)) / (12 * h1)
    d2 = (-at(-2 * h2) + 16 * at(-h2) - 30 * f(x) + 16 * at(h2) - at(2 * h2)) / (12 * h2 * h2)
    return d1, d2


def check_jets(n_nets=5, tol=1e-5):
    worst = 0.0
    rng = np.random.default_rng(7)
    for k in range(n_nets):
        d = 2 + k % 3
        spec, store = random_store([d, 6, 6, 6, 1], 200 + k)
        x = rng.uniform(-1.0, 1.0, (10, d))
        jet = forward_jets(spec, store, x, tuple(range(d)))

        def value(y):
            return forward_jets(spec, store, y, ()).value
        for c in range(d):
            d1, d2 = fd_derivatives(value, x, c)
            worst = max(worst, _rel(jet.d(c), d1), _rel(jet.dd(c), d2))
    return [("jets/finite-differences", worst <= tol, f"max rel error {worst:.2e} (tol {tol:g})")]


def check_hammersley():
    ok2 = np.array_equal(hammersley(8, 2), np.array(
        [[i / 8, v] for i, v in enumerate([0, .5, .25, .75, .125, .625, .375, .875])]))
    third = [0, 1 / 3, 2 / 3, 1 / 9, 4 / 9, 7 / 9, 2 / 9, 5 / 9]
    pts = hammersley(8, 3)
    ok3 = ok2 and np.array_equal(pts[:, :2], hammersley(8, 2)) and np.allclose(pts[:, 2], third, rtol=0, atol=1e-15)
    ok_ri = all(abs(radical_inverse(b ** m, b) - float(b) ** -(m + 1)) <= 1e-16 for b in (2, 3, 5) for m in range(6))
    return [("hammersley/d=2 first 8", ok2, ""), ("hammersley/d=3 first 8", ok3, ""),
            ("hammersley/radical inverse of powers", ok_ri, "")]


def check_exact_residual(tol=1e-9):
    out = []
    rng = np.random.default_rng(11)
    for name in ("burgers2d", "burgers3d"):
        prob = get_problem(name)
        pts = np.column_stack([rng.uniform(0, 1, 100)] + [rng.uniform(0, 1, 100) for _ in range(prob.spatial_dim)])
        r = prob.residual(prob.exact_jets(pts), pts)
        worst = float(np.max(np.abs(r)))
        out.append((f"exact-residual/{name}", worst <= tol, f"max |F| {worst:.2e}"))
    prob = get_problem("burgers1d")
    pts = np.array([[0.5, 0.3]])
    r = abs(float(prob.residual(prob.exact_jets(pts), pts)[0]))
    out.append(("exact-residual/burgers1d (0.5, 0.3)", r <= 1e-6, f"|F| {r:.2e}"))
    return out


def check_quadrature(tol=1e-8):
    prob = get_problem("burgers1d")
    grid, _ = test_grid(prob, (100, 256))
    late = grid[:, 0] >= 1e-6
    n1, d1 = _cole_hopf_sums(grid[late, 0], grid[late, 1], NU_1D, 200)
    n2, d2 = _cole_hopf_sums(grid[late, 0], grid[late, 1], NU_1D, 400)
    diff = float(np.max(np.abs(n1 / d1 - n2 / d2)))
    t = np.linspace(0, 1, 50)
    edge = float(np.max(np.abs(np.concatenate([exact_1d(t, -1.0), exact_1d(t, 1.0)]))))
    x = np.linspace(-1, 1, 201)
    early = float(np.max(np.abs(exact_1d(1e-6, x) + np.sin(np.pi * x))))
    return [("quadrature/200 vs 400 nodes", diff <= tol, f"max diff {diff:.2e}"),
            ("quadrature/boundary zeros", edge <= 1e-9, f"max |u(t,+-1)| {edge:.2e}"),
            ("quadrature/t=1e-6 initial profile", early <= 1e-5, f"max diff {early:.2e}")]


SUITES = {
    "gradients": check_gradients,
    "jets": check_jets,
    "hammersley": check_hammersley,
    "exact-residual": check_exact_residual,
    "quadrature": check_quadrature,
}


def run_suites(names):
    results = []
    for name in names:
        results += SUITES[name]()
    return results
