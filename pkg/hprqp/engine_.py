"""
The dual Halpern Peaceman-Rachford solver. Iterates u = (y, w, z, x) live on the dual of

    min  1/2 <x, Qx> + <c, x> + phi(x)    s.t.  Ax in K

where w is carried as a full-space shadow vector whose projection on Range(Q) is the true dual iterate; z is only
materialized when a termination check needs it. Each inner iteration computes a "bar" iterate by one symmetric
Gauss-Seidel sweep, reflects it and averages the reflection with the anchor of the current restart cycle (Halpern).
Restarts reset the anchor and adapt the penalty sigma.
"""
import logging
from collections import namedtuple
from enum import Enum
from math import exp, log, sqrt
from timeit import default_timer

try:
    from typing import List, Optional, Tuple
except ImportError:
    pass

import numpy as np
from autoclass import autoclass
from pyfields import field, init_fields
from valid8 import validate
from valid8.validation_lib import gt, between

from hprqp.kkt_ import KktReport, TraceRecord, kkt_residuals, OPTIMAL, TIME_LIMIT, ITER_LIMIT
from hprqp.problem_ import CcqpProblem, WeightedL1
from hprqp.scaling_ import ScalingInfo, scale_problem, unscale_solution
from hprqp.spectral_ import SpectralEstimates, estimate
from hprqp.utils import MetricNotPsd, NumericalBreakdown, finite_output


_logger = logging.getLogger(__name__)

_GOLDEN = (sqrt(5.) - 1.) / 2.
THETA_FLOOR = 1e-12
SIGMA0_NORM_RANGE = (1e-16, 1e16)


# ------------- iterates -------------

class Blocks(object):
    """
    Base class for iterates made of named vector blocks. Blocks may be None (not materialized); linear combinations
    propagate None.
    """
    __slots__ = ()

    def __init__(self, **blocks):
        for name in self.__slots__:
            setattr(self, name, blocks.get(name))

    def blocks(self):
        return tuple((name, getattr(self, name)) for name in self.__slots__)

    def replace(self, **changes):
        values = dict(self.blocks())
        values.update(changes)
        return type(self)(**values)

    def copy(self):
        return type(self)(**{name: (None if v is None else v.copy()) for name, v in self.blocks()})

    def lincomb(self, a, other, b):
        """ Returns a * self + b * other, block by block """
        out = {}
        for name in self.__slots__:
            v, w = getattr(self, name), getattr(other, name)
            out[name] = None if (v is None or w is None) else a * v + b * w
        return type(self)(**out)

    def __repr__(self):
        return "%s(%s)" % (type(self).__name__, ", ".join("%s=%r" % nv for nv in self.blocks() if nv[1] is not None))


class IterateBundle(Blocks):
    """
    An iterate (y, w_Q, z, x) of the dual method, with the cached products Qw = Q w_Q and Aty = A^T y.
    z is None unless materialized for a termination check.
    """
    __slots__ = ('y', 'w_Q', 'z', 'x', 'Qw', 'Aty')

    @classmethod
    def zeros(cls, m, n):
        # type: (...) -> IterateBundle
        return cls(y=np.zeros(m), w_Q=np.zeros(n), x=np.zeros(n), Qw=np.zeros(n), Aty=np.zeros(n))


def halpern_update(anchor,  # type: Blocks
                   u,       # type: Blocks
                   u_bar,   # type: Blocks
                   t        # type: int
                   ):
    # type: (...) -> Blocks
    """
    Reflection u_hat = 2 u_bar - u followed by the Halpern averaging u+ = anchor / (t + 2) + (t + 1) / (t + 2) u_hat,
    where t is the inner iteration counter (the anchor is reset at each restart).
    """
    u_hat = u_bar.lincomb(2., u, -1.)
    return anchor.lincomb(1. / (t + 2), u_hat, (t + 1.) / (t + 2))


# ------------- configuration -------------

@autoclass
class SolverConfig(object):
    """
    Parameters of the solvers. Behaves as a read-only dictionary and can be rebuilt with `SolverConfig.from_dict`.
    """
    tol = field(default=1e-8, validators=gt(0., strict=True), doc="Target for the three relative KKT measures")
    time_limit = field(default=3600., validators=gt(0., strict=True), doc="Wall-clock limit in seconds")
    max_iter = field(default=10 ** 7, validators=gt(1), doc="Maximum number of inner iterations")
    alpha1 = field(default=0.2, doc="Sufficient decay restart ratio")
    alpha2 = field(default=0.8, doc="Insufficient local progress restart ratio")
    alpha3 = field(default=0.5, validators=between(0., 1., open_left=True, open_right=True),
                   doc="Long inner loop restart ratio")
    alpha3_tight = field(default=0.2, validators=between(0., 1., open_left=True, open_right=True),
                         doc="Value of alpha3 once the merit has decreased enough")
    alpha3_tight_ratio = field(default=0.1, validators=gt(0., strict=True),
                               doc="Merit ratio triggering the alpha3 tightening")
    sigma0 = field(default=None, doc="Initial penalty. None means ||b|| / ||c||")
    check_interval = field(default=100, validators=gt(1), doc="Termination check period (checks also at restarts)")
    sigma_bounds = field(default=(1e-9, 1e9), doc="Search interval of the penalty update")
    sigma_rtol = field(default=1e-6, validators=gt(0., strict=True), doc="Relative tolerance of the penalty search")
    seed = field(default=0, doc="Seed of the power method")
    scaling = field(default=True, doc="Apply Ruiz + Pock-Chambolle preconditioning when possible")
    ruiz_iters = field(default=10, validators=gt(0))
    pock_chambolle_alpha = field(default=1., validators=between(0., 2.))
    restart = field(default=True, doc="Enable adaptive restarts")
    adaptive_sigma = field(default=True, doc="Update sigma at restarts")
    power_tol = field(default=1e-4, validators=gt(0., strict=True))
    power_max_iter = field(default=5000, validators=gt(1))
    safety = field(default=1.002, validators=gt(1.), doc="Safety factor on the spectral estimates")
    trace_interval = field(default=None, doc="If set, also record a trace line every that many iterations")
    consistency_interval = field(default=0, validators=gt(0),
                                 doc="If positive, recompute the cached products every that many iterations")

    @init_fields
    def __init__(self):
        validate('alpha2', self.alpha2, max_value=1., max_strict=True)
        validate('alpha1', self.alpha1, min_value=0., min_strict=True, max_value=self.alpha2, max_strict=True,
                 help_msg="alpha1 and alpha2 should satisfy 0 < alpha1 < alpha2 < 1")
        lo, hi = self.sigma_bounds
        validate('sigma_bounds[0]', lo, min_value=0., min_strict=True, max_value=hi, max_strict=True)
        if self.sigma0 is not None:
            validate('sigma0', self.sigma0, min_value=0., min_strict=True)


# ------------- restarts -------------

class RestartDecision(Enum):
    """ Outcome of the restart test. All members but CONTINUE trigger a restart. """
    CONTINUE = 'continue'
    SUFFICIENT_DECAY = 'sufficient decay'
    INSUFFICIENT_PROGRESS = 'insufficient local progress'
    LONG_LOOP = 'long inner loop'

    @property
    def restart(self):
        return self is not RestartDecision.CONTINUE


class RestartState(object):
    """
    Counters and merits of the restart scheme. `t` counts the inner iterations of the current cycle, `k` all
    iterations, `r` the restarts.
    """
    __slots__ = ('r', 't', 'k', 'sigma', 'R_tilde_first', 'R_tilde_prev', 'R_tilde_last', 'R_tilde_baseline',
                 'alpha3_tightened', 'u_anchor')

    def __init__(self, sigma, u_anchor=None, r=0, t=0, k=0):
        self.r = r
        self.t = t
        self.k = k
        self.sigma = sigma
        self.R_tilde_first = None
        self.R_tilde_prev = None
        self.R_tilde_last = None
        self.R_tilde_baseline = None
        self.alpha3_tightened = False
        self.u_anchor = u_anchor

    def record_merit(self, R_tilde):
        """ Stores the merit of the step that just completed (call after incrementing t) """
        if self.t == 1:
            self.R_tilde_first = R_tilde
            self.R_tilde_prev = R_tilde
        else:
            self.R_tilde_prev = self.R_tilde_last
        self.R_tilde_last = R_tilde

    def merit_ratio(self):
        # type: (...) -> float
        """ Last merit of the cycle divided by the last merit of the first cycle """
        if self.R_tilde_baseline is None:
            return 1.
        if self.R_tilde_baseline <= 0.:
            return 0.
        return self.R_tilde_last / self.R_tilde_baseline

    def __repr__(self):
        return "RestartState(r=%s, t=%s, k=%s, sigma=%.6g, R_first=%r, R_last=%r, baseline=%r, tight=%s)" \
               % (self.r, self.t, self.k, self.sigma, self.R_tilde_first, self.R_tilde_last, self.R_tilde_baseline,
                  self.alpha3_tightened)


def check_restart(rs,           # type: RestartState
                  R_tilde_new,  # type: float
                  cfg           # type: SolverConfig
                  ):
    # type: (...) -> RestartDecision
    """
    Restart test, evaluated after the inner step producing `R_tilde_new`:

     - sufficient decay: R_new <= alpha1 * R_first
     - insufficient local progress: R_new <= alpha2 * R_first and R_new > R_prev
     - long inner loop: t >= alpha3 * k (alpha3 is tightened once the merit ratio dropped enough)

    :param rs: the restart state. `rs.R_tilde_prev` is the merit of the previous step of the cycle
    :param R_tilde_new: the merit of the step that just completed
    :param cfg: the solver configuration
    :return:
    """
    validate('t', rs.t, min_value=1)
    if R_tilde_new <= cfg.alpha1 * rs.R_tilde_first:
        return RestartDecision.SUFFICIENT_DECAY
    if R_tilde_new <= cfg.alpha2 * rs.R_tilde_first and R_tilde_new > rs.R_tilde_prev:
        return RestartDecision.INSUFFICIENT_PROGRESS
    alpha3 = cfg.alpha3_tight if rs.alpha3_tightened else cfg.alpha3
    if rs.t >= alpha3 * rs.k:
        return RestartDecision.LONG_LOOP
    return RestartDecision.CONTINUE


def register_restart(rs,    # type: RestartState
                     cfg    # type: SolverConfig
                     ):
    # type: (...) -> float
    """
    Updates the restart bookkeeping at the end of a cycle: the first cycle sets the baseline merit, and alpha3 is
    tightened once the merit ratio is <= cfg.alpha3_tight_ratio. The counters are not touched.

    :return: the merit ratio of the cycle
    """
    if rs.R_tilde_baseline is None:
        rs.R_tilde_baseline = rs.R_tilde_last
    ratio = rs.merit_ratio()
    if ratio <= cfg.alpha3_tight_ratio and not rs.alpha3_tightened:
        _logger.debug("Restart %d: merit ratio %.3g, alpha3 tightened to %g", rs.r, ratio, cfg.alpha3_tight)
        rs.alpha3_tightened = True
    return ratio


# ------------- sigma -------------

def sigma_merit(sigma, theta1, theta2, theta3, lambda_Q):
    # type: (...) -> float
    """ f(sigma) = theta1 sigma + theta2 / sigma + sigma^2 theta3 / (1 + lambda_Q sigma) """
    return theta1 * sigma + theta2 / sigma + sigma * sigma * theta3 / (1. + lambda_Q * sigma)


def minimize_sigma_merit(theta1,                # type: float
                         theta2,                # type: float
                         theta3,                # type: float
                         lambda_Q,              # type: float
                         bounds=(1e-9, 1e9),    # type: Tuple[float, float]
                         rtol=1e-6              # type: float
                         ):
    # type: (...) -> float
    """
    Minimizes f(sigma) (see `sigma_merit`) over the bounds. With theta3 = 0 the minimizer sqrt(theta2 / theta1) is
    returned directly; otherwise a golden-section search on log(sigma) is used, f being unimodal there. Minimizers
    outside the bounds saturate to the nearest bound.
    """
    lo, hi = bounds
    if theta3 == 0.:
        return min(max(sqrt(theta2 / theta1), lo), hi)

    def g(s):
        return sigma_merit(exp(s), theta1, theta2, theta3, lambda_Q)

    a, b = log(lo), log(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    width = log(1. + rtol)
    while b - a > width:
        if gc < gd:
            b, d, gd = d, c, gc
            c = b - _GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + _GOLDEN * (b - a)
            gd = g(d)
    return exp(0.5 * (a + b))


def next_sigma(thetas,      # type: Tuple[float, float, float]
               lambda_Q,    # type: float
               rs,          # type: RestartState
               cfg          # type: SolverConfig
               ):
    # type: (...) -> float
    """
    Penalty update from the theta coefficients of a completed cycle: theta1 and theta2 are floored at 1e-12, f is
    minimized, and the result is smoothed in log space with beta = exp(-merit ratio):
    sigma+ = exp(beta log sigma_new + (1 - beta) log sigma_r). Nonfinite thetas keep sigma unchanged.
    """
    theta1, theta2, theta3 = thetas
    if not all(np.isfinite(thetas)):
        _logger.warning("Nonfinite sigma update coefficients %r: sigma kept at %.6g", thetas, rs.sigma)
        return rs.sigma
    theta1 = max(theta1, THETA_FLOOR)
    theta2 = max(theta2, THETA_FLOOR)
    sigma_new = minimize_sigma_merit(theta1, theta2, theta3, lambda_Q, bounds=cfg.sigma_bounds, rtol=cfg.sigma_rtol)
    beta = exp(-rs.merit_ratio())
    return exp(beta * log(sigma_new) + (1. - beta) * log(rs.sigma))


def initial_sigma(prob  # type: CcqpProblem
                  ):
    # type: (...) -> float
    """ ||b|| / ||c|| with b = max(|l|, |u|) (infinite entries as 0), or 1 when a norm is out of [1e-16, 1e16] """
    nb = float(np.linalg.norm(prob.K.magnitude()))
    nc = float(np.linalg.norm(prob.c))
    lo, hi = SIGMA0_NORM_RANGE
    if lo <= nb <= hi and lo <= nc <= hi:
        return nb / nc
    return 1.


# ------------- the dual splitting -------------

DualBarStep = namedtuple('DualBarStep', ('u_bar', 'r_z', 'Qw_half'))


class _BarBlocks(DualBarStep):
    __slots__ = ()

    def blocks(self):
        return self.u_bar.blocks() + (('r_z', self.r_z), ('Qw_half', self.Qw_half))


def _dot(a, b):
    return float(np.dot(a, b))


def m_norm_sq_from_products(dy, dx, Atdy, Qdw, dw_Qdw, Atdy_QAtdy, lambda_A, lambda_Q, sigma):
    # type: (...) -> float
    """
    Squared M-norm of a difference of dual iterates given the products A^T dy, Q dw, <dw, Q dw> and
    <A^T dy, Q A^T dy>. The z-block does not contribute.
    """
    v = Atdy - Qdw
    sq_v = _dot(v, v)
    sq_dy = _dot(dy, dy)
    sq_Atdy = _dot(Atdy, Atdy)
    sq_Qdw = _dot(Qdw, Qdw)
    sq_dx = _dot(dx, dx)
    cross = _dot(v, dx)
    sgs = sigma * sigma / (1. + sigma * lambda_Q) * Atdy_QAtdy
    value = (sigma * (sq_v + lambda_A * sq_dy - sq_Atdy + lambda_Q * dw_Qdw - sq_Qdw) + sgs
             + 2. * cross + sq_dx / sigma)
    if value < 0.:
        scale = (sigma * (sq_v + lambda_A * sq_dy + sq_Atdy + lambda_Q * abs(dw_Qdw) + sq_Qdw) + abs(sgs)
                 + 2. * abs(cross) + sq_dx / sigma)
        value = clamp_metric(value, scale)
    return value


def clamp_metric(value, scale):
    # type: (float, float) -> float
    """ Returns max(value, 0), raising MetricNotPsd when value < -1e-9 * scale """
    if value < -1e-9 * scale:
        raise MetricNotPsd(value, scale)
    return max(value, 0.)


def m_norm_sq(d,        # type: IterateBundle
              prob,     # type: CcqpProblem
              est,      # type: SpectralEstimates
              sigma     # type: float
              ):
    # type: (...) -> float
    """
    ||d||_M^2 for a difference d = (dy, dw_Q, dz, dx) of dual iterates, computed without assembling M:

        sigma ||A^T dy - Q dw||^2 + sigma lambda_A ||dy||^2 - sigma ||A^T dy||^2 + sigma lambda_Q <dw, Q dw>
        - sigma ||Q dw||^2 + sigma^2 / (1 + sigma lambda_Q) <A^T dy, Q A^T dy> + 2 <A^T dy - Q dw, dx>
        + ||dx||^2 / sigma

    Small negative values caused by rounding are clamped to 0; clearly negative ones raise MetricNotPsd.
    """
    validate('sigma', sigma, min_value=0., min_strict=True)
    Atdy = prob.A.T.dot(d.y)
    Qdw = prob.Q(d.w_Q)
    QAtdy = prob.Q(Atdy)
    return m_norm_sq_from_products(d.y, d.x, Atdy, Qdw, _dot(d.w_Q, Qdw), _dot(Atdy, QAtdy),
                                   est.lambda_A, est.lambda_Q, sigma)


class DualSplitting(object):
    """
    The dual HPR iteration on a (scaled) problem: bar step, merit, sigma-update coefficients and reporting.
    The w-block is skipped when lambda_Q = 0 (Q = 0) and the y-block when there are no rows.
    """
    variant = 'dual'

    def __init__(self,
                 prob,  # type: CcqpProblem
                 est    # type: SpectralEstimates
                 ):
        self.prob = prob
        self.est = est
        self.AT = prob.A.T.tocsr()
        self.has_w = est.lambda_Q > 0.
        self.has_y = prob.m > 0

    @property
    def lambda_Q(self):
        return self.est.lambda_Q

    def initial(self):
        # type: (...) -> IterateBundle
        return IterateBundle.zeros(self.prob.m, self.prob.n)

    def default_sigma(self):
        return initial_sigma(self.prob)

    @finite_output
    def bar_step(self,
                 u,     # type: IterateBundle
                 sigma  # type: float
                 ):
        # type: (...) -> DualBarStep
        """
        One sGS sweep from u: r_z, x_bar = prox(r_z), x_hat = 2 x_bar - x, w_half, r_y, y_bar, w_bar.
        """
        p = self.prob
        lam_A, lam_Q = self.est.lambda_A, self.est.lambda_Q

        r_z = u.x + sigma * (u.Aty - u.Qw - p.c)
        x_bar = p.phi.prox(sigma, r_z)
        x_hat = 2. * x_bar - u.x

        if self.has_w:
            coef = 1. / (1. + sigma * lam_Q)
            w_half = coef * (sigma * lam_Q * u.w_Q + x_hat)
            Qw_half = p.Q(w_half)
        else:
            w_half, Qw_half = u.w_Q, u.Qw

        if self.has_y:
            r_y = p.A.dot(x_hat + sigma * (u.Qw - Qw_half)) - (sigma * lam_A) * u.y
            y_bar = (p.K.project(r_y) - r_y) / (sigma * lam_A)
            Aty_bar = self.AT.dot(y_bar)
        else:
            y_bar, Aty_bar = u.y, u.Aty

        if self.has_w:
            w_bar = w_half + (sigma * coef) * (Aty_bar - u.Aty)
            Qw_bar = p.Q(w_bar)
        else:
            w_bar, Qw_bar = u.w_Q, u.Qw

        u_bar = IterateBundle(y=y_bar, w_Q=w_bar, x=x_bar, Qw=Qw_bar, Aty=Aty_bar)
        return _BarBlocks(u_bar, r_z, Qw_half)

    def merit_sq(self,
                 u,         # type: IterateBundle
                 bar,       # type: DualBarStep
                 sigma      # type: float
                 ):
        # type: (...) -> float
        """ ||u - u_bar||_M^2, reusing the products of the bar step """
        ub = bar.u_bar
        lam_Q = self.est.lambda_Q
        dy = u.y - ub.y
        dx = u.x - ub.x
        Atdy = u.Aty - ub.Aty
        Qdw = u.Qw - ub.Qw
        if self.has_w:
            # Q A^T (y_bar - y) = (1 + sigma lambda_Q) / sigma (Q w_bar - Q w_half)
            QAtdy = -((1. + sigma * lam_Q) / sigma) * (ub.Qw - bar.Qw_half)
            dw_Qdw = _dot(u.w_Q - ub.w_Q, Qdw)
            Atdy_QAtdy = _dot(Atdy, QAtdy)
        else:
            dw_Qdw = Atdy_QAtdy = 0.
        return m_norm_sq_from_products(dy, dx, Atdy, Qdw, dw_Qdw, Atdy_QAtdy, self.est.lambda_A, lam_Q, sigma)

    def thetas(self,
               u_bar,       # type: IterateBundle
               u_anchor     # type: IterateBundle
               ):
        # type: (...) -> Tuple[float, float, float]
        """ Coefficients (theta1, theta2, theta3) of the penalty merit for the cycle anchor -> u_bar """
        dy = u_bar.y - u_anchor.y
        dx = u_bar.x - u_anchor.x
        Atdy = u_bar.Aty - u_anchor.Aty
        Qdw = u_bar.Qw - u_anchor.Qw
        theta1 = (self.est.lambda_A * _dot(dy, dy) + self.est.lambda_Q * _dot(u_bar.w_Q - u_anchor.w_Q, Qdw)
                  - 2. * _dot(Qdw, Atdy))
        theta2 = _dot(dx, dx)
        theta3 = _dot(Atdy, self.prob.Q(Atdy)) if (self.has_w and self.has_y) else 0.
        return theta1, theta2, theta3

    def materialize_z(self,
                      bar,      # type: DualBarStep
                      sigma     # type: float
                      ):
        # type: (...) -> np.ndarray
        """ z_bar = (Prox(r_z) - r_z) / sigma, kept in [-lam, lam] for a l1 term """
        z = (bar.u_bar.x - bar.r_z) / sigma
        if isinstance(self.prob.phi, WeightedL1):
            z = np.clip(z, -self.prob.phi.lam, self.prob.phi.lam)
        return z

    def report_iterate(self, bar, sigma):
        # type: (...) -> IterateBundle
        return bar.u_bar.replace(z=self.materialize_z(bar, sigma))

    def check_cached(self, u, iteration):
        """ Raises NumericalBreakdown if the cached products drifted from a fresh recomputation """
        for name, cached, fresh in (('cached Qw', u.Qw, self.prob.Q(u.w_Q)), ('cached Aty', u.Aty, self.AT.dot(u.y))):
            if np.linalg.norm(cached - fresh) > 1e-9 * (1. + np.linalg.norm(fresh)):
                raise NumericalBreakdown(name, iteration)


def inner_step(u,           # type: IterateBundle
               anchor,      # type: IterateBundle
               t,           # type: int
               prob,        # type: CcqpProblem
               est,         # type: SpectralEstimates
               sigma        # type: float
               ):
    # type: (...) -> Tuple[IterateBundle, DualBarStep]
    """
    One inner iteration of the dual method: the bar step from u, then reflection and Halpern averaging against the
    anchor of the cycle with weight 1 / (t + 2).

    :return: a tuple (next iterate, bar step). The bar step holds u_bar and what is needed to materialize z_bar.
    """
    validate('sigma', sigma, min_value=0., min_strict=True)
    splitting = DualSplitting(prob, est)
    bar = splitting.bar_step(u, sigma)
    return halpern_update(anchor, u, bar.u_bar, t), bar


def sigma_update(u_bar_final,   # type: IterateBundle
                 u_anchor,      # type: IterateBundle
                 prob,          # type: CcqpProblem
                 est,           # type: SpectralEstimates
                 rs,            # type: RestartState
                 cfg            # type: SolverConfig
                 ):
    # type: (...) -> float
    """ The new penalty after a cycle of the dual method, see `next_sigma` """
    splitting = DualSplitting(prob, est)
    return next_sigma(splitting.thetas(u_bar_final, u_anchor), est.lambda_Q, rs, cfg)


# ------------- driver -------------

SolveResult = namedtuple('SolveResult', ('iterate', 'report', 'trace'))


def prepare(prob,   # type: CcqpProblem
            cfg     # type: SolverConfig
            ):
    # type: (...) -> Tuple[CcqpProblem, ScalingInfo]
    """ Scales the problem when configured and possible """
    if cfg.scaling:
        return scale_problem(prob, ruiz_iters=cfg.ruiz_iters, pock_chambolle_alpha=cfg.pock_chambolle_alpha)
    return prob, ScalingInfo.identity(prob.m, prob.n)


def run_restarted_halpern(splitting,        # DualSplitting or a primal splitting
                          prob,             # type: CcqpProblem
                          info,             # type: ScalingInfo
                          cfg,              # type: SolverConfig
                          start,            # type: float
                          setup_seconds=0.  # type: float
                          ):
    # type: (...) -> SolveResult
    """
    The restarted Halpern loop shared by all splittings: bar step, merit, Halpern averaging, restart test, penalty
    update at restarts, and termination checks on the original problem every cfg.check_interval iterations, at
    restarts and when a limit is hit.

    :param splitting: the splitting of the scaled problem
    :param prob: the original problem, for the termination checks
    :param info: the scaling between the two
    :param cfg: the configuration
    :param start: the timer value at which the solve time starts
    :param setup_seconds: the time spent in data preparation, reported separately
    :return: the unscaled reported iterate, its KktReport and the trace
    """
    sigma0 = cfg.sigma0 if cfg.sigma0 is not None else splitting.default_sigma()
    u = splitting.initial()
    rs = RestartState(sigma=sigma0, u_anchor=u)
    trace = []  # type: List[TraceRecord]

    _logger.info("%s splitting: n=%d, m=%d, lambda_A=%.4g, lambda_Q=%.4g, sigma0=%.4g", splitting.variant, prob.n,
                 prob.m, splitting.est.lambda_A, splitting.est.lambda_Q, sigma0)
    _logger.debug("%8s %6s %10s %10s %10s %10s %10s", 'iter', 'restarts', 'sigma', 'R_tilde', 'eta_gap', 'eta_p',
                  'eta_d')

    report, iterate, status = None, None, None
    while status is None:
        sigma = rs.sigma
        try:
            bar = splitting.bar_step(u, sigma)
        except NumericalBreakdown as e:
            e.iteration = rs.k
            raise
        R_tilde = sqrt(splitting.merit_sq(u, bar, sigma))
        u = halpern_update(rs.u_anchor, u, bar.u_bar, rs.t)
        rs.t += 1
        rs.k += 1
        rs.record_merit(R_tilde)
        decision = check_restart(rs, R_tilde, cfg) if cfg.restart else RestartDecision.CONTINUE

        if cfg.consistency_interval and rs.k % cfg.consistency_interval == 0:
            splitting.check_cached(u, rs.k)

        elapsed = default_timer() - start
        out_of_time = elapsed >= cfg.time_limit
        out_of_iters = rs.k >= cfg.max_iter
        if decision.restart or rs.k % cfg.check_interval == 0 or out_of_time or out_of_iters:
            iterate = unscale_solution(info, splitting.report_iterate(bar, sigma))
            report = kkt_residuals(iterate, prob)
            trace.append(TraceRecord(k=rs.k, r=rs.r, t=rs.t, sigma=sigma, R_tilde=R_tilde, eta_gap=report.eta_gap,
                                     eta_p=report.eta_p, eta_d=report.eta_d, seconds=elapsed))
            _logger.debug("%8d %6d %10.3e %10.3e %10.3e %10.3e %10.3e", rs.k, rs.r, sigma, R_tilde, report.eta_gap,
                          report.eta_p, report.eta_d)
            if report.is_optimal(cfg.tol):
                status = OPTIMAL
            elif out_of_time:
                status = TIME_LIMIT
            elif out_of_iters:
                status = ITER_LIMIT
        elif cfg.trace_interval and rs.k % cfg.trace_interval == 0:
            trace.append(TraceRecord(k=rs.k, r=rs.r, t=rs.t, sigma=sigma, R_tilde=R_tilde, seconds=elapsed))

        if status is None and decision.restart:
            ratio = register_restart(rs, cfg)
            u = bar.u_bar
            if cfg.adaptive_sigma:
                rs.sigma = next_sigma(splitting.thetas(u, rs.u_anchor), splitting.lambda_Q, rs, cfg)
            _logger.debug("Restart %d at k=%d (%s): cycle length %d, merit ratio %.3g, sigma %.4g -> %.4g",
                          rs.r + 1, rs.k, decision.value, rs.t, ratio, sigma, rs.sigma)
            rs.r += 1
            rs.t = 0
            rs.u_anchor = u

    report.status = status
    report.iterations = rs.k
    report.restarts = rs.r
    report.sigma = rs.sigma
    report.solve_seconds = default_timer() - start
    report.setup_seconds = setup_seconds
    report.variant = splitting.variant
    _logger.info("%s after %d iterations (%d restarts, %.3fs): eta_gap=%.2e, eta_p=%.2e, eta_d=%.2e, obj=%.10g",
                 status, rs.k, rs.r, report.solve_seconds, report.eta_gap, report.eta_p, report.eta_d,
                 report.primal_obj)
    return SolveResult(iterate, report, trace)


def solve(prob,         # type: CcqpProblem
          cfg=None      # type: Optional[SolverConfig]
          ):
    # type: (...) -> SolveResult
    """
    Solves the problem with the dual HPR method: optional preconditioning, spectral estimates, then restarted
    Halpern iterations from the origin until the three relative KKT measures are <= cfg.tol or a limit is hit.
    The spectral estimation is counted in the solve time, the preconditioning in the setup time.

    :param prob: the problem
    :param cfg: the configuration, defaults to SolverConfig()
    :return: a SolveResult (iterate, report, trace). The iterate is in original coordinates with z materialized.
    """
    if cfg is None:
        cfg = SolverConfig()
    setup_start = default_timer()
    scaled, info = prepare(prob, cfg)
    start = default_timer()
    est = estimate(scaled, safety=cfg.safety, tol=cfg.power_tol, max_iter=cfg.power_max_iter, seed=cfg.seed)
    return run_restarted_halpern(DualSplitting(scaled, est), prob, info, cfg, start,
                                 setup_seconds=start - setup_start)
