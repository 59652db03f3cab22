import numpy as np
import pytest
import scipy.sparse as sp

from hprqp import OPTIMAL, Box, BoxIndicator, CcqpProblem, IterateBundle, kkt_residuals


def _iterate(prob, x, y, z):
    return IterateBundle(y=np.asarray(y, float), w_Q=x, z=np.asarray(z, float), x=x, Qw=prob.Q(x),
                         Aty=prob.A.T.dot(y))


def _two_variable_qp():
    """ min 1/2 ||x||^2 - x1 - x2  s.t.  x1 + x2 <= 1: x* = (1/2, 1/2), y* = -1/2 """
    return CcqpProblem(sp.identity(2), sp.csr_matrix([[1., 1.]]), np.array([-1., -1.]), Box([0.], [1.]))


def test_exact_kkt_point():
    prob = _two_variable_qp()
    x = np.array([0.5, 0.5])
    report = kkt_residuals(_iterate(prob, x, [-0.5], [0., 0.]), prob, tol=1e-12)
    assert report.eta_gap <= 1e-12 and report.eta_p <= 1e-12 and report.eta_d <= 1e-12
    assert report.primal_obj == pytest.approx(-0.75)
    assert report.dual_obj == pytest.approx(-0.75)
    assert report.status == OPTIMAL
    np.testing.assert_allclose(report.residual_norms, 0., atol=1e-12)


def test_lp_dual_residual():
    """ Q = 0, y = z = 0: eta_d = ||c||_inf / (1 + ||c||_inf) """
    c = np.array([3., -1.])
    prob = CcqpProblem(sp.csr_matrix((2, 2)), sp.identity(2), c, Box([0., 0.], [1., 1.]))
    report = kkt_residuals(_iterate(prob, np.array([0.5, 0.5]), [0., 0.], [0., 0.]), prob)
    assert report.eta_d == pytest.approx(3. / 4., abs=1e-15)
    assert report.eta_p == 0.
    assert report.status is None


def test_primal_residual_after_perturbation():
    prob = _two_variable_qp()
    x = np.array([0.5 + 1e-3, 0.5])
    report = kkt_residuals(_iterate(prob, x, [-0.5], [0., 0.]), prob)
    # Ax = 1.001 is 1e-3 above u = 1; b = max(|0|, |1|) = 1
    assert abs(report.eta_p - 1e-3 / (1. + 1.001)) <= 1e-12


def test_infinite_conjugate():
    """ A dual iterate outside the domain of phi* gives an infinite gap """
    prob = CcqpProblem(sp.identity(1), sp.csr_matrix((0, 1)), np.array([1.]), Box(np.zeros(0), np.zeros(0)),
                       phi=BoxIndicator([0.], [np.inf]))
    report = kkt_residuals(_iterate(prob, np.zeros(1), np.zeros(0), [-1.]), prob)
    assert report.eta_gap == np.inf
    assert report.dual_obj == -np.inf
    assert not report.is_optimal(1.)


def test_offset_and_materialized_z():
    prob = _two_variable_qp().replace(obj_offset=10.)
    x = np.array([0.5, 0.5])
    report = kkt_residuals(_iterate(prob, x, [-0.5], [0., 0.]), prob)
    assert report.primal_obj == pytest.approx(9.25)
    assert report.dual_obj == pytest.approx(9.25)
    with pytest.raises(ValueError):
        kkt_residuals(_iterate(prob, x, [-0.5], [0., 0.]).replace(z=None), prob)
