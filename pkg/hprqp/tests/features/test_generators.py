import json

import numpy as np
import pytest

from hprqp import StructureError, assignment_duals, from_recipe, gen_lasso, gen_qap, gen_random_qp, \
    lasso_instance, lasso_native, lasso_objective, lasso_to_cqp, qap_from_matrices, split_lasso_solution
from hprqp.generators_ import dense_qap_operator, from_recipe_entry, recipe_entries


def test_random_qp_is_deterministic():
    p1, p2 = gen_random_qp(4, 8, seed=0), gen_random_qp(4, 8, seed=0)
    assert (p1.Q.matrix != p2.Q.matrix).nnz == 0
    assert (p1.A != p2.A).nnz == 0
    for a, b in ((p1.c, p2.c), (p1.K.l, p2.K.l), (p1.K.u, p2.K.u), (p1.phi.L, p2.phi.L)):
        assert np.array_equal(a, b)
    assert p1.name == "random_qp_n4_m8_s0"
    assert not np.array_equal(p1.c, gen_random_qp(4, 8, seed=1).c)


def test_random_qp_structure():
    """ Two nonzeros per row of A, m / n = 10, PSD Q, x0 feasible rows """
    prob = gen_random_qp(50, 500, density=0.05, seed=3)
    assert prob.A.nnz == 2 * 500
    assert np.all(np.diff(prob.A.indptr) == 2)
    assert np.all(prob.K.l <= prob.K.u)
    assert np.sum(prob.K.l == prob.K.u) == 250
    rng = np.random.default_rng(0)
    for _ in range(100):
        v = rng.standard_normal(50)
        assert v.dot(prob.Q(v)) >= -1e-10 * v.dot(v)


def test_lasso_reformulation_objective():
    """ At (x, s = A_hat x - b_hat, t = |x|) the CQP objective is the Lasso objective """
    inst = gen_lasso(6, 9, seed=2)
    cqp = lasso_to_cqp(inst)
    assert (cqp.n, cqp.m) == (6 + 2 * 9, 6 + 2 * 9)
    x = np.random.default_rng(0).standard_normal(9)
    v = np.concatenate((x, inst.A_hat.dot(x) - inst.b_hat, np.abs(x)))
    assert abs(cqp.objective(v) - lasso_objective(inst, x)) <= 1e-12 * (1. + lasso_objective(inst, x))
    Av = cqp.A.dot(v)
    assert np.all(Av >= cqp.K.l - 1e-12) and np.all(Av <= cqp.K.u + 1e-12)
    xs, s, t = split_lasso_solution(inst, v)
    assert np.array_equal(xs, x) and np.array_equal(t, np.abs(x))


def test_lasso_native_problem():
    inst = gen_lasso(6, 9, seed=2)
    prob = lasso_native(inst)
    assert prob.m == 0 and not prob.Q.is_explicit and prob.Q.tag == 'lasso'
    assert lasso_native(inst, explicit=True).Q.is_explicit
    x = np.random.default_rng(1).standard_normal(9)
    assert prob.objective(x) == pytest.approx(lasso_objective(inst, x), rel=1e-12)


def test_lasso_instance_checks():
    inst = lasso_instance(np.array([[1., 0.], [0., 2.]]), np.array([1., 1.]), lambda_factor=0.5)
    assert inst.lam == pytest.approx(1.)
    with pytest.raises(StructureError):
        lasso_instance(np.eye(2), np.ones(3))
    with pytest.raises(ValueError):
        lasso_instance(np.eye(2), np.ones(2), lam=0.)


def test_assignment_duals_example():
    s, t = assignment_duals(np.array([2., 1.]), np.array([1., 2.]))
    np.testing.assert_allclose(s, [2., 1.])
    np.testing.assert_allclose(t, [0., 1.])
    assert s.sum() + t.sum() == 4.


@pytest.mark.parametrize('seed', range(4))
def test_assignment_duals_optimal(seed):
    """ Feasible for every pair and equal to the optimal assignment cost """
    inst, _ = gen_qap(5, seed=seed)
    assert np.all(inst.s_bar[:, None] + inst.t_bar[None, :] <= np.outer(inst.alpha, inst.beta) + 1e-8)
    assert inst.check_duals()
    assert np.all(np.diff(inst.alpha) <= 0) and np.all(np.diff(inst.beta) >= 0)


@pytest.mark.parametrize('d', [2, 3, 6])
def test_qap_operator_against_dense(d):
    inst, prob = gen_qap(d, seed=d)
    Q_dense = dense_qap_operator(inst)
    rng = np.random.default_rng(d)
    for _ in range(5):
        v = rng.standard_normal(d * d)
        np.testing.assert_allclose(prob.Q(v), Q_dense.dot(v), rtol=0., atol=1e-9 * (1. + np.abs(Q_dense).max()))
    assert np.linalg.eigvalsh(Q_dense)[0] >= -1e-8


def test_qap_permutation_objective():
    """ For a permutation matrix X, tr(X^T A X B) = <vec X, Q vec X> + sum(s) + sum(t) """
    inst, prob = gen_qap(4, seed=5)
    X = np.eye(4)[[2, 0, 3, 1]]
    x = X.ravel(order='F')
    assert inst.qap_objective(X) == pytest.approx(x.dot(prob.Q(x)) + inst.dual_value(), rel=1e-10)
    assert inst.lower_bound(0.5 * x.dot(prob.Q(x))) == pytest.approx(inst.qap_objective(X), rel=1e-10)


def test_qap_rotated_duals():
    inst, prob = gen_qap(4, seed=2)
    S = inst.V_A.dot(np.diag(inst.s_bar)).dot(inst.V_A.T)
    np.testing.assert_allclose(inst.S, S, atol=1e-12)
    np.testing.assert_allclose(inst.T, inst.V_B.dot(np.diag(inst.t_bar)).dot(inst.V_B.T), atol=1e-12)
    assert inst.S is inst.S
    X = np.arange(16.).reshape(4, 4)
    expected = inst.A_hat.dot(X).dot(inst.B_hat) - S.dot(X) - X.dot(inst.T)
    np.testing.assert_allclose(prob.Q(X.ravel(order='F')), expected.ravel(order='F'), atol=1e-9)


def test_qap_problem_structure():
    inst, prob = gen_qap(3, seed=0)
    assert (prob.n, prob.m) == (9, 6)
    X = np.full((3, 3), 1. / 3.)
    np.testing.assert_allclose(prob.A.dot(X.ravel(order='F')), 1.)
    assert np.all(prob.phi.L == 0.) and np.all(np.isinf(prob.phi.U))
    assert inst.A_hat.diagonal().max() == 0. and inst.B_hat.diagonal().max() == 0.


def test_qap_input_checks():
    with pytest.raises(StructureError):
        qap_from_matrices(np.array([[0., 1.], [2., 0.]]), np.eye(2))
    with pytest.raises(StructureError):
        qap_from_matrices(np.eye(2), np.eye(3))
    with pytest.raises(StructureError):
        qap_from_matrices(np.ones((2, 3)), np.ones((2, 3)))


def test_recipes(tmp_path):
    recipe = {'instances': [{'family': 'random_qp', 'n': 5, 'm': 7, 'seed': 1},
                            {'family': 'lasso', 'p': 4, 'q': 6, 'name': 'my_lasso'},
                            {'family': 'lasso_cqp', 'p': 4, 'q': 6},
                            {'family': 'qap', 'd': 3}]}
    problems = from_recipe(recipe)
    assert [p.name for p in problems] == ['random_qp_n5_m7_s1', 'my_lasso', 'lasso_p4_q6_s0_cqp', 'qap_d3_s0']

    path = tmp_path / 'recipe.json'
    path.write_text(json.dumps(recipe))
    assert len(recipe_entries(str(path))) == 4
    assert from_recipe_entry(recipe['instances'][1], explicit=True).Q.is_explicit

    with pytest.raises(StructureError):
        from_recipe({'problems': []})
    with pytest.raises(ValueError):
        from_recipe({'instances': [{'family': 'svm'}]})


@pytest.mark.parametrize('entry, bad', [
    ({'family': 'random_qp', 'n': 5, 'm': 7, 'sed': 1}, 'sed'),
    ({'family': 'lasso', 'p': 4}, 'q'),
    ({'family': 'qap', 'd': 3, 'density': 0.5}, 'density'),
], ids=['misspelled key', 'missing key', 'key of another family'])
def test_recipe_entry_keys(entry, bad):
    with pytest.raises(StructureError) as exc_info:
        from_recipe_entry(entry)
    assert bad in str(exc_info.value)
