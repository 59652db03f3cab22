import logging

try:
    from typing import Callable, Tuple, Union
except ImportError:
    pass

import numpy as np
from autoclass import autoclass
from pyfields import field
from valid8 import validate
from valid8.validation_lib import gt

from hprqp.problem_ import CcqpProblem
from hprqp.utils import log_duration


_logger = logging.getLogger(__name__)

ZERO_OPERATOR_NORM = 1e-30


@autoclass
class SpectralEstimates(object):
    """
    Upper estimates of the largest eigenvalues of A A^T and Q, used by the proximal terms of the solvers.
    """
    lambda_A = field(validators=gt(0.), doc="Safe upper estimate of the largest eigenvalue of A A^T")
    lambda_Q = field(validators=gt(0.), doc="Safe upper estimate of the largest eigenvalue of Q, 0 iff Q = 0")
    iterations_A = field(default=0, doc="Power iterations spent on A A^T")
    iterations_Q = field(default=0, doc="Power iterations spent on Q")


def power_method(op,                        # type: Callable[[np.ndarray], np.ndarray]
                 dim,                       # type: int
                 tol=1e-4,                  # type: float
                 max_iter=5000,             # type: int
                 seed=0,                    # type: int
                 return_iterations=False    # type: bool
                 ):
    # type: (...) -> Union[float, Tuple[float, int]]
    """
    Estimates the largest eigenvalue of a self-adjoint PSD operator by the power method: normalize, apply, take the
    Rayleigh quotient, and stop when two successive quotients differ by less than tol times the current one.

    :param op: the operator v -> Mv
    :param dim: the dimension of the space
    :param tol: relative stopping tolerance
    :param max_iter: maximum number of operator applications
    :param seed: seed of the random starting vector
    :param return_iterations: if True, a tuple (estimate, iterations) is returned
    :return: the estimate, 0 when M is detected to be zero
    """
    validate('dim', dim, min_value=1)
    validate('tol', tol, min_value=0., min_strict=True)
    validate('max_iter', max_iter, min_value=1)

    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)

    estimate = 0.
    it = 0
    for it in range(1, max_iter + 1):
        Mv = op(v)
        norm_Mv = np.linalg.norm(Mv)
        if norm_Mv < ZERO_OPERATOR_NORM:
            estimate = 0.
            break
        new_estimate = float(np.dot(v, Mv))
        v = Mv / norm_Mv
        if it > 1 and abs(new_estimate - estimate) < tol * abs(new_estimate):
            estimate = new_estimate
            break
        estimate = new_estimate
    else:
        _logger.debug("Power method reached max_iter=%d, last estimate %.6g", max_iter, estimate)

    return (estimate, it) if return_iterations else estimate


@log_duration("spectral estimation")
def estimate(prob,              # type: CcqpProblem
             safety=1.002,      # type: float
             tol=1e-4,          # type: float
             max_iter=5000,     # type: int
             seed=0             # type: int
             ):
    # type: (...) -> SpectralEstimates
    """
    Computes lambda_A >= lambda_max(A A^T) and lambda_Q >= lambda_max(Q) by the power method, inflated by a
    multiplicative safety factor.

    lambda_A falls back to 1 when A is zero or has no rows, so that the proximal term of the y-block stays positive
    definite. lambda_Q is 0 exactly when Q is zero.

    :param prob: the problem (the scaled one, when scaling is on)
    :param safety: multiplicative safety factor, >= 1
    :return:
    """
    validate('safety', safety, min_value=1.)

    A = prob.A
    lam_A, it_A = 0., 0
    if prob.m > 0 and A.nnz > 0:
        AT = A.T.tocsr()
        lam_A, it_A = power_method(lambda v: A.dot(AT.dot(v)), prob.m, tol=tol, max_iter=max_iter, seed=seed,
                                   return_iterations=True)
    lambda_A = safety * lam_A if lam_A > 0 else 1.

    lam_Q, it_Q = 0., 0
    if not prob.Q.is_zero:
        lam_Q, it_Q = power_method(prob.Q, prob.n, tol=tol, max_iter=max_iter, seed=seed, return_iterations=True)
    lambda_Q = safety * max(lam_Q, 0.)

    _logger.debug("Spectral estimates: lambda_A=%.6g (%d its), lambda_Q=%.6g (%d its)", lambda_A, it_A, lambda_Q, it_Q)
    return SpectralEstimates(lambda_A=lambda_A, lambda_Q=lambda_Q, iterations_A=it_A, iterations_Q=it_Q)
