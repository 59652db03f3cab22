import numpy as np
import pytest
import scipy.sparse as sp

from hprqp import CcqpProblem, Box, BoxIndicator, SolverConfig, solve, gen_lasso, lasso_native, lasso_to_cqp, \
    split_lasso_solution, gen_qap, solve_variant


def test_readme_index_solve():
    """ The first example of the documentation """
    # min 1/2 (x1^2 + x2^2) - x1 - x2  s.t.  x1 + x2 <= 1,  0 <= x <= 1
    prob = CcqpProblem(Q=sp.identity(2), A=sp.csr_matrix([[1., 1.]]), c=np.array([-1., -1.]),
                       K=Box([-np.inf], [1.]), phi=BoxIndicator([0., 0.], [1., 1.]))

    res = solve(prob, SolverConfig(tol=1e-8))
    assert res.report.status == 'Optimal'
    np.testing.assert_allclose(res.iterate.x, [0.5, 0.5], atol=1e-6)
    assert res.report.primal_obj == pytest.approx(-0.75, abs=1e-7)

    # the report behaves as a dictionary
    assert dict(res.report)['status'] == res.report['status'] == 'Optimal'
    assert res.trace[-1].k == res.report.iterations


def test_readme_index_config():
    cfg = SolverConfig(tol=1e-6, time_limit=60., scaling=False, sigma0=1.)
    assert (cfg.tol, cfg.scaling, cfg.sigma0) == (1e-6, False, 1.)
    cfg = SolverConfig.from_dict({'tol': 1e-6, 'max_iter': 10000})
    assert cfg.max_iter == 10000
    defaults = SolverConfig()
    assert (defaults.alpha1, defaults.alpha2, defaults.alpha3) == (0.2, 0.8, 0.5)
    assert defaults.check_interval == 100 and defaults.sigma_bounds == (1e-9, 1e9)


@pytest.mark.slow
def test_readme_index_lasso_qap():
    inst = gen_lasso(p=50, q=200, seed=0)
    native = solve(lasso_native(inst))
    cqp = solve(lasso_to_cqp(inst))
    x, s, t = split_lasso_solution(inst, cqp.iterate.x)
    assert native.report.status == cqp.report.status == 'Optimal'
    # both formulations have the Lasso objective
    assert native.report.primal_obj == pytest.approx(cqp.report.primal_obj, rel=1e-5)
    np.testing.assert_allclose(t, np.abs(x), atol=1e-4)

    qap, relaxation = gen_qap(d=6, seed=0)
    res = solve(relaxation)
    assert res.report.status == 'Optimal'
    assert np.isfinite(qap.lower_bound(res.report.primal_obj))


def test_readme_index_baselines():
    prob = CcqpProblem(Q=sp.identity(2), A=sp.csr_matrix([[1., 1.]]), c=np.array([-1., -1.]),
                       K=Box([-np.inf], [1.]), phi=BoxIndicator([0., 0.], [1., 1.]))
    for variant in ('dual', 'primal1', 'primal2'):
        res = solve_variant(prob, SolverConfig(), variant)
        assert res.report.variant == variant
        np.testing.assert_allclose(res.iterate.x, [0.5, 0.5], atol=1e-6)
