from math import e, exp, sqrt

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st
from valid8 import ValidationError

from hprqp import Box, CcqpProblem, IterateBundle, RestartDecision, RestartState, SolverConfig, SpectralEstimates, \
    check_restart, minimize_sigma_merit, sigma_update
from hprqp.engine_ import initial_sigma, next_sigma, register_restart, sigma_merit


def _state(t, k, first, prev, tightened=False):
    rs = RestartState(sigma=1., t=t, k=k)
    rs.R_tilde_first = first
    rs.R_tilde_prev = prev
    rs.alpha3_tightened = tightened
    return rs


@pytest.mark.parametrize('rs, R_new, expected', [
    (_state(3, 100, 10., 2.5), 1.9, RestartDecision.SUFFICIENT_DECAY),
    (_state(3, 100, 10., 5.), 6., RestartDecision.INSUFFICIENT_PROGRESS),
    (_state(50, 99, 10., 9.), 9., RestartDecision.LONG_LOOP),
    (_state(3, 100, 10., 9.5), 9., RestartDecision.CONTINUE),
    (_state(3, 100, 10., 5.), 9., RestartDecision.CONTINUE),
    (_state(30, 99, 10., 9.), 9., RestartDecision.CONTINUE),
    (_state(30, 99, 10., 9., tightened=True), 9., RestartDecision.LONG_LOOP),
], ids=['sufficient decay', 'insufficient progress', 'long loop', 'continue', 'progress above alpha2',
        'loop not long yet', 'tightened alpha3'])
def test_check_restart(rs, R_new, expected):
    decision = check_restart(rs, R_new, SolverConfig())
    assert decision is expected
    assert decision.restart == (expected is not RestartDecision.CONTINUE)


def test_check_restart_needs_an_inner_step():
    with pytest.raises(ValidationError):
        check_restart(_state(0, 0, 1., 1.), 1., SolverConfig())


def test_merit_bookkeeping():
    """ The first cycle sets the baseline; alpha3 is tightened once the ratio drops to 0.1 """
    cfg = SolverConfig()
    rs = RestartState(sigma=1.)
    for t, R in enumerate((8., 6., 4.), start=1):
        rs.t = t
        rs.record_merit(R)
    assert (rs.R_tilde_first, rs.R_tilde_prev, rs.R_tilde_last) == (8., 6., 4.)
    assert rs.merit_ratio() == 1.
    assert register_restart(rs, cfg) == 1.
    assert rs.R_tilde_baseline == 4.
    assert not rs.alpha3_tightened

    rs.t = 1
    rs.record_merit(0.3)
    assert rs.R_tilde_first == rs.R_tilde_prev == 0.3
    assert register_restart(rs, cfg) == pytest.approx(0.075)
    assert rs.alpha3_tightened
    assert rs.R_tilde_baseline == 4.


def test_sigma_closed_form():
    assert minimize_sigma_merit(4., 1., 0., 0.) == 0.5
    # saturation at the bounds
    assert minimize_sigma_merit(1., 1e30, 0., 0.) == 1e9
    assert minimize_sigma_merit(1e30, 1., 0., 0.) == 1e-9


_GRID = np.geomspace(1e-4, 1e4, 10 ** 6)
_coefficients = st.floats(min_value=1e-2, max_value=1e2)


@settings(max_examples=100, deadline=None)
@given(_coefficients, _coefficients, _coefficients, st.floats(min_value=0., max_value=10.))
def test_golden_section_against_grid(theta1, theta2, theta3, lambda_Q):
    """ The minimizer lies in [1e-4, 1e2] for these draws; the grid step is below 2e-5 relative """
    best = _GRID[np.argmin(sigma_merit(_GRID, theta1, theta2, theta3, lambda_Q))]
    found = minimize_sigma_merit(theta1, theta2, theta3, lambda_Q)
    assert found == pytest.approx(best, rel=1e-4)


def test_sigma_smoothing_at_first_restart():
    """ beta = exp(-1) at the first restart: sigma = exp(e^-1 log sigma_new + (1 - e^-1) log sigma_r) """
    rs = RestartState(sigma=1.)
    rs.R_tilde_last = rs.R_tilde_baseline = 2.
    new = next_sigma((1., e ** 2, 0.), 0., rs, SolverConfig())
    assert new == pytest.approx(exp(exp(-1.)), rel=1e-12)
    assert new == pytest.approx(1.4447, abs=1e-4)


def test_sigma_update_guards():
    rs = RestartState(sigma=3.)
    assert next_sigma((float('nan'), 1., 0.), 0., rs, SolverConfig()) == 3.
    # thetas floored at 1e-12: sigma_new = 1
    rs = RestartState(sigma=1.)
    assert next_sigma((0., -1., 0.), 0., rs, SolverConfig()) == pytest.approx(1.)


def test_sigma_update_thetas():
    """ sigma_update on the dual splitting uses the theta coefficients of the cycle """
    rng = np.random.default_rng(2)
    A = rng.standard_normal((2, 3))
    M = rng.standard_normal((3, 3))
    Q = M.T.dot(M)
    prob = CcqpProblem(sp.csr_matrix(Q), sp.csr_matrix(A), np.ones(3), Box([-1., -1.], [1., 1.]))
    est = SpectralEstimates(lambda_A=10., lambda_Q=20.)
    mk = lambda: (rng.standard_normal(2), rng.standard_normal(3), rng.standard_normal(3))
    (y0, w0, x0), (y1, w1, x1) = mk(), mk()
    anchor = IterateBundle(y=y0, w_Q=w0, x=x0, Qw=Q.dot(w0), Aty=A.T.dot(y0))
    u_bar = IterateBundle(y=y1, w_Q=w1, x=x1, Qw=Q.dot(w1), Aty=A.T.dot(y1))

    dy, dw, dx = y1 - y0, w1 - w0, x1 - x0
    Atdy = A.T.dot(dy)
    theta1 = 10. * dy.dot(dy) + 20. * dw.dot(Q.dot(dw)) - 2. * Q.dot(dw).dot(Atdy)
    theta2 = dx.dot(dx)
    theta3 = Atdy.dot(Q.dot(Atdy))

    rs = RestartState(sigma=0.5)
    rs.R_tilde_last = 1.
    rs.R_tilde_baseline = 4.
    cfg = SolverConfig()
    expected = next_sigma((theta1, theta2, theta3), 20., rs, cfg)
    assert sigma_update(u_bar, anchor, prob, est, rs, cfg) == pytest.approx(expected, rel=1e-12)


def test_initial_sigma():
    c = np.array([3., 4.])
    prob = CcqpProblem(sp.identity(2), sp.identity(2), c, Box([-np.inf, 1.], [2., np.inf]))
    # b = (2, 1)
    assert initial_sigma(prob) == pytest.approx(sqrt(5.) / 5.)
    assert initial_sigma(prob.replace(c=np.zeros(2))) == 1.


def test_config_validation():
    cfg = SolverConfig(tol=1e-6)
    assert cfg['tol'] == 1e-6
    assert SolverConfig.from_dict(dict(cfg)).tol == 1e-6
    with pytest.raises(ValidationError):
        SolverConfig(alpha1=0.9, alpha2=0.8)
    with pytest.raises(ValueError):
        SolverConfig(tol=0.)
    with pytest.raises(ValidationError):
        SolverConfig(sigma_bounds=(1., 0.5))
