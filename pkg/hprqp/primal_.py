"""
HPR methods on the primal reformulations, used as baselines for the dual method.

 - 'primal1' splits (x, s) with s = Ax in K, multiplier y, and linearizes the whole x-subproblem with the proximal
   term S_x = lambda_Q I - Q + sigma (lambda_A I - A^T A).
 - 'primal2' additionally splits v = x to carry the quadratic, with multipliers (y, t), proximal terms
   S_v = lambda_Q I - Q and S_x = sigma (lambda_A I - A^T A).

Both run the restart and penalty machinery of the dual method, with the merit and the sigma coefficients of their own
splitting.
"""
import logging
from collections import namedtuple
from timeit import default_timer

try:
    from typing import Tuple
except ImportError:
    pass

import numpy as np
from valid8 import validate

from hprqp.engine_ import Blocks, IterateBundle, SolverConfig, SolveResult, clamp_metric, initial_sigma, prepare, \
    run_restarted_halpern, solve
from hprqp.problem_ import BoxIndicator, CcqpProblem
from hprqp.spectral_ import SpectralEstimates, estimate
from hprqp.utils import NumericalBreakdown, StructureError, finite_output


_logger = logging.getLogger(__name__)

DUAL = 'dual'
PRIMAL1 = 'primal1'
PRIMAL2 = 'primal2'
VARIANTS = (DUAL, PRIMAL1, PRIMAL2)


class PrimalIterate(Blocks):
    """
    An iterate of a primal splitting: x, its multiplier y (and v, t for 'primal2'), with the cached products Ax, Qx
    (Qv for 'primal2'). s and z are outputs of the bar step only.
    """
    __slots__ = ('x', 'v', 'y', 't', 'Ax', 'Qx', 'Qv', 's', 'z')


class _PrimalBar(namedtuple('PrimalBarStep', ('u_bar',))):
    __slots__ = ()

    def blocks(self):
        return self.u_bar.blocks()


def _dot(a, b):
    return float(np.dot(a, b))


class _PrimalSplitting(object):
    """ What both primal splittings share: data, default penalty and reporting """
    variant = None

    def __init__(self,
                 prob,  # type: CcqpProblem
                 est    # type: SpectralEstimates
                 ):
        self.prob = prob
        self.est = est
        self.AT = prob.A.T.tocsr()

    @property
    def lambda_Q(self):
        return self.est.lambda_Q

    def default_sigma(self):
        # the primal penalty plays the role of the inverse of the dual one
        return 1. / initial_sigma(self.prob)

    def report_iterate(self, bar, sigma):
        # type: (...) -> IterateBundle
        """ The bar iterate as a dual bundle, its multipliers restricted to the domain of the dual objective """
        ub = bar.u_bar
        p = self.prob
        y = -p.K.support_domain_part(-ub.y)
        z = -p.phi.box.support_domain_part(-ub.z)
        Qx = ub.Qx if ub.Qx is not None else p.Q(ub.x)
        return IterateBundle(y=y, w_Q=ub.x, z=z, x=ub.x, Qw=Qx, Aty=self.AT.dot(y))

    def _check(self, pairs, iteration):
        for name, cached, fresh in pairs:
            if np.linalg.norm(cached - fresh) > 1e-9 * (1. + np.linalg.norm(fresh)):
                raise NumericalBreakdown(name, iteration)


class Primal1Splitting(_PrimalSplitting):
    """
    Bar step from (x, y):

        s_bar = Proj_K(Ax - y / sigma),  y_bar = y + sigma (s_bar - Ax)
        g = Qx + c - A^T (y_bar - sigma (Ax - s_bar)),  tau = lambda_Q + sigma lambda_A
        x_bar = Prox_{phi / tau}(x - g / tau),  z_bar = g - tau (x - x_bar)
    """
    variant = PRIMAL1

    def initial(self):
        n, m = self.prob.n, self.prob.m
        return PrimalIterate(x=np.zeros(n), y=np.zeros(m), Ax=np.zeros(m), Qx=np.zeros(n))

    @finite_output
    def bar_step(self, u, sigma):
        p = self.prob
        s_bar = p.K.project(u.Ax - u.y / sigma)
        y_bar = u.y + sigma * (s_bar - u.Ax)
        g = u.Qx + p.c - self.AT.dot(y_bar - sigma * (u.Ax - s_bar))
        tau = self.est.lambda_Q + sigma * self.est.lambda_A
        x_bar = p.phi.prox(1. / tau, u.x - g / tau)
        z_bar = g - tau * (u.x - x_bar)
        u_bar = PrimalIterate(x=x_bar, y=y_bar, Ax=p.A.dot(x_bar), Qx=p.Q(x_bar), s=s_bar, z=z_bar)
        return _PrimalBar(u_bar)

    def merit_sq(self, u, bar, sigma):
        """
        ||sqrt(sigma) A dx - dy / sqrt(sigma)||^2 + lambda_Q ||dx||^2 - <dx, Q dx> + sigma (lambda_A ||dx||^2
        - ||A dx||^2)
        """
        ub = bar.u_bar
        dx, dy = u.x - ub.x, u.y - ub.y
        Adx, Qdx = self.prob.A.dot(dx), self.prob.Q(dx)
        lam_A, lam_Q = self.est.lambda_A, self.est.lambda_Q
        sq_dx, sq_Adx, dx_Qdx = _dot(dx, dx), _dot(Adx, Adx), _dot(dx, Qdx)
        coupled = sigma * sq_Adx - 2. * _dot(Adx, dy) + _dot(dy, dy) / sigma
        value = coupled + lam_Q * sq_dx - dx_Qdx + sigma * (lam_A * sq_dx - sq_Adx)
        if value < 0.:
            value = clamp_metric(value, abs(coupled) + lam_Q * sq_dx + abs(dx_Qdx) + sigma * (lam_A * sq_dx + sq_Adx))
        return value

    def thetas(self, u_bar, u_anchor):
        # type: (...) -> Tuple[float, float, float]
        dx = u_bar.x - u_anchor.x
        dy = u_bar.y - u_anchor.y
        return self.est.lambda_A * _dot(dx, dx), _dot(dy, dy), 0.

    def check_cached(self, u, iteration):
        self._check((('cached Ax', u.Ax, self.prob.A.dot(u.x)), ('cached Qx', u.Qx, self.prob.Q(u.x))), iteration)


class Primal2Splitting(_PrimalSplitting):
    """
    Bar step from (x, v, y, t):

        s_bar = Proj_K(Ax - y / sigma),  v_bar = v - (Qv + t + sigma (v - x)) / (lambda_Q + sigma)
        y_bar = y + sigma (s_bar - Ax),  t_bar = t + sigma (v_bar - x)
        g = c - A^T y_bar - t_bar + sigma A^T (Ax - s_bar) + sigma (x - v_bar),  tau = sigma (1 + lambda_A)
        x_bar = Prox_{phi / tau}(x - g / tau),  z_bar = g - tau (x - x_bar)
    """
    variant = PRIMAL2

    def initial(self):
        n, m = self.prob.n, self.prob.m
        return PrimalIterate(x=np.zeros(n), v=np.zeros(n), y=np.zeros(m), t=np.zeros(n), Ax=np.zeros(m),
                             Qv=np.zeros(n))

    @finite_output
    def bar_step(self, u, sigma):
        p = self.prob
        lam_A, lam_Q = self.est.lambda_A, self.est.lambda_Q
        s_bar = p.K.project(u.Ax - u.y / sigma)
        v_bar = u.v - (u.Qv + u.t + sigma * (u.v - u.x)) / (lam_Q + sigma)
        y_bar = u.y + sigma * (s_bar - u.Ax)
        t_bar = u.t + sigma * (v_bar - u.x)
        g = p.c - self.AT.dot(y_bar - sigma * (u.Ax - s_bar)) - t_bar + sigma * (u.x - v_bar)
        tau = sigma * (1. + lam_A)
        x_bar = p.phi.prox(1. / tau, u.x - g / tau)
        z_bar = g - tau * (u.x - x_bar)
        u_bar = PrimalIterate(x=x_bar, v=v_bar, y=y_bar, t=t_bar, Ax=p.A.dot(x_bar), Qv=p.Q(v_bar), s=s_bar,
                              z=z_bar)
        return _PrimalBar(u_bar)

    def merit_sq(self, u, bar, sigma):
        """
        ||sqrt(sigma) A dx - dy / sqrt(sigma)||^2 + ||sqrt(sigma) dx - dt / sqrt(sigma)||^2
        + sigma (lambda_A ||dx||^2 - ||A dx||^2) + lambda_Q ||dv||^2 - <dv, Q dv>
        """
        ub = bar.u_bar
        dx, dv, dy, dt = u.x - ub.x, u.v - ub.v, u.y - ub.y, u.t - ub.t
        Adx, Qdv = self.prob.A.dot(dx), self.prob.Q(dv)
        lam_A, lam_Q = self.est.lambda_A, self.est.lambda_Q
        sq_dx, sq_Adx, sq_dv, dv_Qdv = _dot(dx, dx), _dot(Adx, Adx), _dot(dv, dv), _dot(dv, Qdv)
        coupled = (sigma * sq_Adx - 2. * _dot(Adx, dy) + _dot(dy, dy) / sigma
                   + sigma * sq_dx - 2. * _dot(dx, dt) + _dot(dt, dt) / sigma)
        value = coupled + sigma * (lam_A * sq_dx - sq_Adx) + lam_Q * sq_dv - dv_Qdv
        if value < 0.:
            value = clamp_metric(value, abs(coupled) + sigma * (lam_A * sq_dx + sq_Adx) + lam_Q * sq_dv + abs(dv_Qdv))
        return value

    def thetas(self, u_bar, u_anchor):
        # type: (...) -> Tuple[float, float, float]
        dx = u_bar.x - u_anchor.x
        dy = u_bar.y - u_anchor.y
        dt = u_bar.t - u_anchor.t
        return (1. + self.est.lambda_A) * _dot(dx, dx), _dot(dy, dy) + _dot(dt, dt), 0.

    def check_cached(self, u, iteration):
        self._check((('cached Ax', u.Ax, self.prob.A.dot(u.x)), ('cached Qv', u.Qv, self.prob.Q(u.v))), iteration)


_SPLITTINGS = {PRIMAL1: Primal1Splitting, PRIMAL2: Primal2Splitting}


def solve_primal_variant(prob,          # type: CcqpProblem
                         cfg=None,      # type: SolverConfig
                         variant=PRIMAL1
                         ):
    # type: (...) -> SolveResult
    """
    Solves the problem with one of the primal HPR variants, with the same preconditioning, restarts, penalty updates
    and termination as `solve`. When cfg.sigma0 is None the initial penalty is ||c|| / ||b||.

    :param prob: the problem. Its composite term must be a box indicator
    :param cfg: the configuration, defaults to SolverConfig()
    :param variant: 'primal1' or 'primal2'
    :return: a SolveResult (iterate, report, trace); the iterate is an unscaled IterateBundle with w_Q = x
    """
    validate('variant', variant, is_in=_SPLITTINGS)
    if not isinstance(prob.phi, BoxIndicator):
        raise StructureError("The primal variants support box composite terms only, found %r" % prob.phi)
    if cfg is None:
        cfg = SolverConfig()
    setup_start = default_timer()
    scaled, info = prepare(prob, cfg)
    start = default_timer()
    est = estimate(scaled, safety=cfg.safety, tol=cfg.power_tol, max_iter=cfg.power_max_iter, seed=cfg.seed)
    return run_restarted_halpern(_SPLITTINGS[variant](scaled, est), prob, info, cfg, start,
                                 setup_seconds=start - setup_start)


def solve_variant(prob,         # type: CcqpProblem
                  cfg=None,     # type: SolverConfig
                  variant=DUAL
                  ):
    # type: (...) -> SolveResult
    """ Dispatches to `solve` or `solve_primal_variant` according to `variant` (one of VARIANTS) """
    validate('variant', variant, is_in=VARIANTS)
    if variant == DUAL:
        return solve(prob, cfg)
    return solve_primal_variant(prob, cfg, variant=variant)
