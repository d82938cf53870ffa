import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mgpinn.autodiff import MultiJet
from mgpinn.checks import fd_parameter_gradient, single_net_objective
from mgpinn.errors import TrainingFault
from mgpinn.gradestack import stack_predictor, GradeStack, GradeNet
from mgpinn.loss import LossBreakdown, loss_boundary, loss_initial, loss_pde, mean_square, total_loss
from mgpinn.problems import get_problem
from mgpinn.sampling import SampleSet, build_samples

from conftest import random_store


def zero_predictor(points, layout):
    n = len(points)
    return MultiJet.zeros(n, layout.tracked, layout.second)


def constant_predictor(c):
    def predict(points, layout):
        j = zero_predictor(points, layout)
        j.value[:] = c
        return j
    return predict


def test_breakdown_total():
    assert LossBreakdown(0.1, 0.2, 0.3).total == 0.6
    assert LossBreakdown(0.1, 0.2, 0.3).as_dict()["total"] == 0.6


def test_mean_square_by_definition():
    assert mean_square([3.0]) == 9.0
    a, b = 0.3, -1.7
    assert mean_square([a, b]) == (a * a + b * b) / 2


def test_exact_predictor_gives_tiny_loss():
    for name in ("burgers2d", "burgers3d"):
        prob = get_problem(name)
        s = build_samples(prob, 300, 50, 60, seed=1)
        assert total_loss(prob.exact_predictor, prob, s).total <= 1e-14
    prob = get_problem("burgers2d")
    s = build_samples(prob, 100, 10, 10, 0)
    assert loss_pde(prob.exact_predictor, prob.residual, s.collocation, prob.layout) <= 1e-16


def test_zero_predictor_1d_pieces():
    prob = get_problem("burgers1d")
    s = build_samples(prob, 10000, 120, 80, seed=0)
    b = total_loss(zero_predictor, prob, s)
    assert b.pde == 0.0 and b.boundary == 0.0
    expected = math.fsum(np.sin(np.pi * s.initial[:, 1]) ** 2) / 120
    assert b.total == pytest.approx(expected, rel=1e-15)


def test_initial_contribution_by_hand():
    prob = get_problem("burgers1d")
    pts = np.array([[0.0, 0.5]])
    assert loss_initial(zero_predictor, prob.initial_residual, pts) == 1.0
    assert loss_initial(constant_predictor(2.0), prob.initial_residual, np.array([[0.0, 0.5], [0.0, -0.5]])) \
        == ((2.0 + 1.0) ** 2 + (2.0 - 1.0) ** 2) / 2


def test_boundary_contribution_2d_by_hand():
    prob = get_problem("burgers2d", re=37.0)
    assert loss_boundary(zero_predictor, prob.boundary_residual, np.array([[1.0, 0.0, 1.0]])) == 0.25
    prob1 = get_problem("burgers1d")
    assert loss_boundary(constant_predictor(0.5), prob1.boundary_residual, np.array([[0.3, 1.0]])) == 0.25


def test_non_finite_prediction_faults():
    prob = get_problem("burgers1d")
    with pytest.raises(TrainingFault, match="initial"):
        loss_initial(constant_predictor(np.nan), prob.initial_residual, np.array([[0.0, 0.1]]))


def _net_predictor(prob, seed):
    spec, store = random_store([prob.input_dim, 7, 7, 1], seed)
    store.flat *= 0.5
    stack = GradeStack(prob.input_dim)
    stack.grades.append(GradeNet(spec, store, 1))
    return stack_predictor(stack)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["burgers1d", "burgers2d", "burgers3d"]))
def test_components_invariant_to_permutation_and_duplication(seed, name):
    prob = get_problem(name)
    s = build_samples(prob, 40, 12, 18, seed)
    pred = _net_predictor(prob, seed)
    base = total_loss(pred, prob, s)
    rng = np.random.default_rng(seed)
    perm = SampleSet(rng.permutation(s.collocation), rng.permutation(s.initial), rng.permutation(s.boundary), s.seed)
    dup = SampleSet(*(np.concatenate([a, a]) for a in (s.collocation, s.initial, s.boundary)), s.seed)
    assert total_loss(pred, prob, perm) == base
    assert total_loss(pred, prob, dup) == base


@pytest.mark.parametrize("name", ["burgers1d", "burgers2d", "burgers3d"])
def test_objective_matches_predictor_loss(name):
    prob = get_problem(name)
    s = build_samples(prob, 50, 10, 12, 4)
    spec, store = random_store([prob.input_dim, 9, 9, 1], 2)
    obj = single_net_objective(prob, spec, store, s)
    stack = GradeStack(prob.input_dim)
    stack.grades.append(GradeNet(spec, store, 1))
    ref = total_loss(stack_predictor(stack), prob, s)
    got, _ = obj.evaluate(grad=False)
    for a, b in zip((got.pde, got.initial, got.boundary), (ref.pde, ref.initial, ref.boundary)):
        assert a == pytest.approx(b, rel=1e-13)


@pytest.mark.parametrize("name", ["burgers1d", "burgers2d", "burgers3d"])
def test_total_loss_gradient_matches_finite_differences(name):
    prob = get_problem(name)
    s = build_samples(prob, 8, 4, 2 * len(prob.faces), 1)
    spec, store = random_store([prob.input_dim, 6, 6, 1], 17)
    store.flat *= 0.5
    obj = single_net_objective(prob, spec, store, s)
    _, g = obj.evaluate()
    fd = fd_parameter_gradient(obj)
    assert np.linalg.norm(g - fd) / np.linalg.norm(fd) <= 1e-6
