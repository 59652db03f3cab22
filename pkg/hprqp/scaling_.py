"""
Diagonal preconditioning: Ruiz equilibration of the stacked block [[Q, A^T], [A, 0]] followed by Pock-Chambolle
scaling of A. A scaled problem reads

    A_s = diag(D_row) A diag(D_col),  Q_s = diag(D_col) Q diag(D_col),  c_s = D_col c,
    K_s = D_row K,                    C_s = C / D_col

so that x = D_col x_s, y = D_row y_s and z = z_s / D_col. The objective itself is not rescaled.
"""
import logging

try:
    from typing import Optional, Tuple
except ImportError:
    pass

import numpy as np
import scipy.sparse as sp
from valid8 import validate

from hprqp.problem_ import BoxIndicator, CcqpProblem, PsdOperator
from hprqp.utils import DimensionMismatch, log_duration


_logger = logging.getLogger(__name__)


class ScalingInfo(object):
    """
    The cumulated diagonal scaling factors of a problem. `applied` is False for the identity scaling returned when a
    problem can not be scaled.
    """
    __slots__ = ('D_row', 'D_col', 'applied')

    def __init__(self,
                 D_row,         # type: np.ndarray
                 D_col,         # type: np.ndarray
                 applied=True   # type: bool
                 ):
        self.D_row = D_row
        self.D_col = D_col
        self.applied = applied

    @classmethod
    def identity(cls, m, n):
        # type: (...) -> ScalingInfo
        return cls(np.ones(m), np.ones(n), applied=False)

    def compose(self, other):
        # type: (...) -> ScalingInfo
        """ The scaling obtained by applying `self` first, then `other` """
        return ScalingInfo(self.D_row * other.D_row, self.D_col * other.D_col,
                           applied=self.applied or other.applied)

    def __repr__(self):
        return "ScalingInfo(applied=%s, D_row in [%.3g, %.3g], D_col in [%.3g, %.3g])" \
               % (self.applied, *(_range(self.D_row) + _range(self.D_col)))


def _range(v):
    return (float(v.min()), float(v.max())) if v.size > 0 else (1., 1.)


def is_scalable(prob  # type: CcqpProblem
                ):
    # type: (...) -> bool
    """ Scaling needs an explicit Q, and a box phi (a l1 term is not invariant under column scaling) """
    return prob.Q.is_explicit and isinstance(prob.phi, BoxIndicator)


def _abs_max(M, axis):
    """ Per-column (axis=0) or per-row (axis=1) max of |M|, 0 for empty lines """
    size = M.shape[1 - axis]
    if M.shape[axis] == 0 or M.nnz == 0:
        return np.zeros(size)
    return np.asarray(abs(M).max(axis=axis).toarray()).ravel()


def _abs_pow_sum(M, p, axis):
    """ Per-column (axis=0) or per-row (axis=1) sum of |M_ij|^p over the stored nonzeros """
    if p == 0:
        return np.asarray((M != 0).sum(axis=axis), dtype=float).ravel()
    return np.asarray(abs(M).power(p).sum(axis=axis)).ravel()


def _diag(d):
    k = d.shape[0]
    return sp.csr_matrix((d, (np.arange(k), np.arange(k))), shape=(k, k))


def _inv_sqrt(norms):
    """ 1/sqrt(norms), with factor 1 for zero norms """
    out = np.ones_like(norms)
    nz = norms > 0
    out[nz] = 1. / np.sqrt(norms[nz])
    return out


def apply_scaling(prob,     # type: CcqpProblem
                  d_row,    # type: np.ndarray
                  d_col     # type: np.ndarray
                  ):
    # type: (...) -> CcqpProblem
    """ Returns the problem scaled by the given row and column factors (see module docstring) """
    Dr = _diag(d_row)
    Dc = _diag(d_col)
    A = sp.csr_matrix(Dr.dot(prob.A).dot(Dc))
    Q = PsdOperator.explicit(Dc.dot(prob.Q.matrix).dot(Dc))
    phi = BoxIndicator(prob.phi.L / d_col, prob.phi.U / d_col)
    return prob.replace(Q=Q, A=A, c=prob.c * d_col, K=prob.K.scaled(d_row), phi=phi)


@log_duration("ruiz equilibration")
def ruiz_equilibrate(prob,      # type: CcqpProblem
                     iters=10   # type: int
                     ):
    # type: (...) -> Tuple[CcqpProblem, ScalingInfo]
    """
    Ruiz equilibration of the symmetric block [[Q, A^T], [A, 0]]: each round divides every row and column by the
    square root of its infinity norm. Q and the columns of A share the same factors. Zero lines get a factor 1.

    :param prob: a problem with an explicit Q
    :param iters: the number of rounds
    :return: the scaled problem and its ScalingInfo
    """
    validate('iters', iters, min_value=0)
    if not prob.Q.is_explicit:
        raise ValueError("Ruiz equilibration needs an explicit Q")

    A = prob.A
    Q = prob.Q.matrix
    D_row = np.ones(prob.m)
    D_col = np.ones(prob.n)
    for it in range(iters):
        d_col = _inv_sqrt(np.maximum(_abs_max(Q, axis=0), _abs_max(A, axis=0)))
        d_row = _inv_sqrt(_abs_max(A, axis=1))
        A = _diag(d_row).dot(A).dot(_diag(d_col)).tocsr()
        Q = _diag(d_col).dot(Q).dot(_diag(d_col)).tocsr()
        D_row *= d_row
        D_col *= d_col
        _logger.debug("Equilibration: iter %d, row factors in [%.3g, %.3g], col factors in [%.3g, %.3g]",
                      it, *(_range(d_row) + _range(d_col)))

    return apply_scaling(prob, D_row, D_col), ScalingInfo(D_row, D_col)


@log_duration("pock-chambolle scaling")
def pock_chambolle(prob,        # type: CcqpProblem
                   alpha=1.,    # type: float
                   info=None    # type: Optional[ScalingInfo]
                   ):
    # type: (...) -> Tuple[CcqpProblem, ScalingInfo]
    """
    Pock-Chambolle diagonal scaling: row i is scaled by 1/sqrt(sum_j |A_ij|^(2 - alpha)) and column j by
    1/sqrt(sum_i |A_ij|^alpha). Zero lines get a factor 1. Q and c follow the column scaling.

    :param prob: the (possibly already scaled) problem
    :param alpha: the exponent parameter, in [0, 2]
    :param info: the scaling already applied to `prob`, if any. The returned info is the composition.
    :return: the scaled problem and the cumulated ScalingInfo
    """
    validate('alpha', alpha, min_value=0., max_value=2.)
    if not prob.Q.is_explicit:
        raise ValueError("Pock-Chambolle scaling needs an explicit Q")

    d_row = _inv_sqrt(_abs_pow_sum(prob.A, 2. - alpha, axis=1))
    d_col = _inv_sqrt(_abs_pow_sum(prob.A, alpha, axis=0))
    new_info = ScalingInfo(d_row, d_col)
    if info is not None:
        new_info = info.compose(new_info)
    return apply_scaling(prob, d_row, d_col), new_info


def scale_problem(prob,                     # type: CcqpProblem
                  ruiz_iters=10,            # type: int
                  pock_chambolle_alpha=1.   # type: float
                  ):
    # type: (...) -> Tuple[CcqpProblem, ScalingInfo]
    """
    Ruiz followed by Pock-Chambolle, or the identity scaling when the problem is not scalable.
    """
    if not is_scalable(prob):
        _logger.warning("Preconditioning skipped: it needs an explicit Q and a box term (got %r, %r)",
                        prob.Q, prob.phi)
        return prob, ScalingInfo.identity(prob.m, prob.n)
    scaled, info = ruiz_equilibrate(prob, iters=ruiz_iters)
    return pock_chambolle(scaled, alpha=pock_chambolle_alpha, info=info)


def unscale_solution(info,  # type: ScalingInfo
                     u      # IterateBundle
                     ):
    """
    Maps an iterate of the scaled problem back to the original coordinates: x = D_col x_s, w = D_col w_s,
    y = D_row y_s, z = z_s / D_col, and the cached products Qw, A^T y are divided by D_col.

    :param info: the scaling of the solved problem
    :param u: an IterateBundle of the scaled problem
    :return: a new IterateBundle
    """
    if u.x.shape != info.D_col.shape:
        raise DimensionMismatch('x', info.D_col.shape, u.x.shape)
    if u.y.shape != info.D_row.shape:
        raise DimensionMismatch('y', info.D_row.shape, u.y.shape)
    if not info.applied:
        return u.copy()

    Dc = info.D_col
    return u.replace(y=u.y * info.D_row,
                     w_Q=u.w_Q * Dc,
                     x=u.x * Dc,
                     z=None if u.z is None else u.z / Dc,
                     Qw=None if u.Qw is None else u.Qw / Dc,
                     Aty=None if u.Aty is None else u.Aty / Dc)
