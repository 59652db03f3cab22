"""
Termination measures: relative duality gap, primal and dual infeasibilities, and the norms of the KKT residual map,
all evaluated in the coordinates of the original (unscaled) problem.
"""
try:
    from typing import Optional
except ImportError:
    pass

import numpy as np
from autoclass import autoclass
from pyfields import field

from hprqp.problem_ import CcqpProblem, support_box
from hprqp.utils import check_size, inf_norm


OPTIMAL = 'Optimal'
TIME_LIMIT = 'TimeLimit'
ITER_LIMIT = 'IterLimit'
STATUSES = (OPTIMAL, TIME_LIMIT, ITER_LIMIT)

TRACE_COLUMNS = ('k', 'r', 't', 'sigma', 'R_tilde', 'eta_gap', 'eta_p', 'eta_d', 'seconds')


def _is_status(s):
    return s is None or s in STATUSES


@autoclass
class KktReport(object):
    """
    Termination measures of an iterate, and the bookkeeping of the solve that produced it.
    """
    eta_gap = field(doc="Relative duality gap, +inf when a conjugate is infinite")
    eta_p = field(doc="Relative primal infeasibility")
    eta_d = field(doc="Relative dual infeasibility")
    primal_obj = field(doc="Primal objective, offset included")
    dual_obj = field(doc="Dual objective, offset included (-inf when a conjugate is infinite)")
    residual_norms = field(doc="Euclidean norms of the four blocks of the KKT residual map")
    status = field(default=None, validators={'status should be one of %s' % (STATUSES,): _is_status})
    iterations = field(default=0)
    restarts = field(default=0)
    sigma = field(default=None)
    solve_seconds = field(default=0.)
    setup_seconds = field(default=0.)
    variant = field(default='dual')

    @property
    def max_eta(self):
        # type: (...) -> float
        return max(self.eta_gap, self.eta_p, self.eta_d)

    def is_optimal(self, tol):
        # type: (...) -> bool
        return self.max_eta <= tol


@autoclass
class TraceRecord(object):
    """
    One line of an iteration trace. The eta fields are NaN on lines recorded between termination checks.
    """
    k = field(doc="Total iteration count")
    r = field(doc="Restart count")
    t = field(doc="Inner iteration count")
    sigma = field(doc="Current penalty parameter")
    R_tilde = field(doc="Last restart merit")
    eta_gap = field(default=float('nan'))
    eta_p = field(default=float('nan'))
    eta_d = field(default=float('nan'))
    seconds = field(default=0.)


def kkt_residuals(u,            # IterateBundle
                  prob,         # type: CcqpProblem
                  tol=None      # type: Optional[float]
                  ):
    # type: (...) -> KktReport
    """
    Evaluates, on the original problem data:

     - eta_gap = |pobj - dobj| / (1 + max(|pobj|, |dobj|)) with pobj = 1/2 <x,Qx> + <c,x> + phi(x) and
       dobj = -1/2 <x,Qx> - supp_K(-y) - phi*(-z); +inf when a conjugate is infinite
     - eta_p = ||Ax - Proj_K(Ax)||_inf / (1 + max(||b||_inf, ||Ax||_inf)) with b = max(|l|, |u|), infinite -> 0
     - eta_d = ||-Qx + A^T y + z - c||_inf / (1 + max(||c||_inf, ||A^T y||_inf, ||Qx||_inf))

    :param u: an unscaled IterateBundle with z materialized
    :param prob: the original problem
    :param tol: if provided, the status is set to 'Optimal' when all three measures are <= tol
    :return:
    """
    if u.z is None:
        raise ValueError("kkt_residuals needs an iterate with a materialized z")
    x, y, z = u.x, u.y, u.z
    check_size('x', x, prob.n)
    check_size('y', y, prob.m)
    check_size('z', z, prob.n)

    Ax = prob.A.dot(x)
    Aty = prob.A.T.dot(y)
    Qx = prob.Q(x)
    Qw = u.Qw if u.Qw is not None else prob.Q(u.w_Q)

    b = prob.K.magnitude()
    eta_p = inf_norm(Ax - prob.K.project(Ax)) / (1. + max(inf_norm(b), inf_norm(Ax)))
    eta_d = inf_norm(-Qx + Aty + z - prob.c) / (1. + max(inf_norm(prob.c), inf_norm(Aty), inf_norm(Qx)))

    half_xQx = 0.5 * float(np.dot(x, Qx))
    pobj = half_xQx + float(np.dot(prob.c, x)) + prob.phi.value(x)
    dual_terms = half_xQx + support_box(prob.K, -y) + prob.phi.conjugate(-z)
    if np.isfinite(dual_terms):
        dobj = -dual_terms
        eta_gap = abs(pobj - dobj) / (1. + max(abs(pobj), abs(dual_terms)))
    else:
        dobj = -float('inf')
        eta_gap = float('inf')

    residual_norms = (float(np.linalg.norm(Ax - prob.K.project(Ax - y))),
                      float(np.linalg.norm(Qw - Qx)),
                      float(np.linalg.norm(x - prob.phi.prox(1., x - z))),
                      float(np.linalg.norm(prob.c - Aty + Qw - z)))

    report = KktReport(eta_gap=float(eta_gap), eta_p=float(eta_p), eta_d=float(eta_d),
                       primal_obj=pobj + prob.obj_offset, dual_obj=dobj + prob.obj_offset,
                       residual_norms=residual_norms)
    if tol is not None and report.is_optimal(tol):
        report.status = OPTIMAL
    return report
