"""
Problem families: sparse random convex QPs, Lasso problems (native l1 form and CQP reformulation) and convex QP
relaxations of quadratic assignment problems with a matrix-free quadratic operator.
"""
import json
import logging
from inspect import signature

try:
    from typing import Any, Dict, List, Optional, Tuple, Union
except ImportError:
    pass

import numpy as np
import scipy.sparse as sp
from autoclass import autoclass
from pyfields import field
from scipy.optimize import linear_sum_assignment
from valid8 import validate
from valid8.validation_lib import gt

from hprqp.problem_ import Box, BoxIndicator, CcqpProblem, PsdOperator, WeightedL1
from hprqp.utils import StructureError


_logger = logging.getLogger(__name__)

Q_REGULARIZATION = 1e-2


# ------------- random QP -------------

def _two_per_row(m, n, rng):
    # type: (...) -> sp.csr_matrix
    """ m x n matrix with 2 Gaussian nonzeros in distinct columns on each row (1 when n == 1) """
    first = rng.integers(0, n, size=m)
    if n == 1:
        rows, cols = np.arange(m), first
    else:
        second = (first + rng.integers(1, n, size=m)) % n
        rows = np.repeat(np.arange(m), 2)
        cols = np.column_stack((first, second)).ravel()
    vals = rng.standard_normal(rows.shape[0])
    return sp.csr_matrix((vals, (rows, cols)), shape=(m, n))


def gen_random_qp(n,                        # type: int
                  m,                        # type: int
                  density=0.1,              # type: float
                  seed=0,                   # type: int
                  equality_fraction=0.5,    # type: float
                  var_bound=10.             # type: float
                  ):
    # type: (...) -> CcqpProblem
    """
    A sparse random convex QP:

     - A has 2 standard Gaussian entries per row, in distinct random columns,
     - Q = M^T M + 1e-2 I, where M is n x n sparse with the given density and Gaussian entries,
     - c is standard Gaussian,
     - a point x0 uniform in [-var_bound/2, var_bound/2]^n is planted: the first round(equality_fraction * m) rows
       are equalities l = u = A x0, the other rows get l = A x0 - U(0, 1) and u = A x0 + U(0, 1), every second one
       of them having u = +inf,
     - variables are in [-var_bound, var_bound] (free if var_bound is None).

    The problem is feasible by construction and deterministic under `seed`.
    """
    validate('n', n, min_value=1)
    validate('m', m, min_value=1)
    validate('density', density, min_value=0., min_strict=True, max_value=1.)
    validate('equality_fraction', equality_fraction, min_value=0., max_value=1.)

    rng = np.random.default_rng(seed)
    A = _two_per_row(m, n, rng)
    M = sp.random(n, n, density=density, format='csr', random_state=rng, data_rvs=rng.standard_normal)
    Q = (M.T.dot(M) + Q_REGULARIZATION * sp.identity(n)).tocsr()
    c = rng.standard_normal(n)

    half_width = 0.5 * var_bound if var_bound is not None else 1.
    x0 = rng.uniform(-half_width, half_width, size=n)
    Ax0 = A.dot(x0)
    n_eq = int(round(equality_fraction * m))
    l = Ax0 - rng.uniform(0., 1., size=m)
    u = Ax0 + rng.uniform(0., 1., size=m)
    l[:n_eq] = Ax0[:n_eq]
    u[:n_eq] = Ax0[:n_eq]
    u[n_eq + 1::2] = np.inf

    if var_bound is None:
        phi = BoxIndicator.free(n)
    else:
        validate('var_bound', var_bound, min_value=0., min_strict=True)
        phi = BoxIndicator(np.full(n, -var_bound), np.full(n, var_bound))
    return CcqpProblem(Q, A, c, Box(l, u), phi=phi, name="random_qp_n%s_m%s_s%s" % (n, m, seed))


# ------------- lasso -------------

@autoclass(autohash=False, autoeq=False)
class LassoInstance(object):
    """ min 1/2 ||A_hat x - b_hat||^2 + lam ||x||_1 """
    A_hat = field(doc="p x q design matrix (sparse)")
    b_hat = field(doc="p-vector of observations")
    lam = field(validators=gt(0., strict=True), doc="Regularization weight")
    name = field(default=None)

    @property
    def p(self):
        return self.A_hat.shape[0]

    @property
    def q(self):
        return self.A_hat.shape[1]


def lasso_instance(A_hat, b_hat, lam=None, lambda_factor=1e-3, name=None):
    # type: (...) -> LassoInstance
    """ Builds a LassoInstance, with lam = lambda_factor * ||A_hat^T b_hat||_inf when lam is None """
    A_hat = sp.csr_matrix(A_hat, dtype=float)
    b_hat = np.asarray(b_hat, dtype=float).ravel()
    if b_hat.shape[0] != A_hat.shape[0]:
        raise StructureError("b_hat has %s entries, A_hat has %s rows" % (b_hat.shape[0], A_hat.shape[0]))
    if lam is None:
        lam = lambda_factor * float(np.max(np.abs(A_hat.T.dot(b_hat))))
    return LassoInstance(A_hat=A_hat, b_hat=b_hat, lam=lam, name=name)


def gen_lasso(p,                    # type: int
              q,                    # type: int
              density=0.15,         # type: float
              seed=0,               # type: int
              lambda_factor=0.2     # type: float
              ):
    # type: (...) -> LassoInstance
    """
    A random Lasso instance: sparse Gaussian design, ground truth with about half of its entries zero and
    N(0, 1/q) nonzeros, b_hat = A_hat x_true + N(0, 1) noise, lam = lambda_factor * ||A_hat^T b_hat||_inf.
    """
    validate('p', p, min_value=1)
    validate('q', q, min_value=1)
    rng = np.random.default_rng(seed)
    A_hat = sp.random(p, q, density=density, format='csr', random_state=rng, data_rvs=rng.standard_normal)
    x_true = (rng.uniform(size=q) > 0.5) * rng.normal(0., 1. / np.sqrt(q), size=q)
    b_hat = A_hat.dot(x_true) + rng.standard_normal(p)
    return lasso_instance(A_hat, b_hat, lambda_factor=lambda_factor, name="lasso_p%s_q%s_s%s" % (p, q, seed))


def lasso_objective(inst,   # type: LassoInstance
                    x       # type: np.ndarray
                    ):
    # type: (...) -> float
    r = inst.A_hat.dot(x) - inst.b_hat
    return 0.5 * float(np.dot(r, r)) + inst.lam * float(np.sum(np.abs(x)))


def lasso_native(inst,           # type: LassoInstance
                 explicit=False  # type: bool
                 ):
    # type: (...) -> CcqpProblem
    """
    The Lasso problem as it stands: Q = A_hat^T A_hat, c = -A_hat^T b_hat, phi = lam ||.||_1, no rows.
    The constant 1/2 ||b_hat||^2 is the objective offset.

    :param explicit: if False (default) Q is applied matrix-free as two products, otherwise it is assembled
    """
    A_hat, AT = inst.A_hat, inst.A_hat.T.tocsr()
    q = inst.q
    if explicit:
        Q = PsdOperator.explicit(AT.dot(A_hat))
    else:
        Q = PsdOperator.matrix_free(lambda v: AT.dot(A_hat.dot(v)), q, tag='lasso')
    return CcqpProblem(Q, sp.csr_matrix((0, q)), -AT.dot(inst.b_hat), Box(np.zeros(0), np.zeros(0)),
                       phi=WeightedL1(inst.lam), obj_offset=0.5 * float(np.dot(inst.b_hat, inst.b_hat)),
                       name=inst.name)


def lasso_to_cqp(inst  # type: LassoInstance
                 ):
    # type: (...) -> CcqpProblem
    """
    The CQP reformulation over (x, s, t) in R^q x R^p x R^q:

        min 1/2 ||s||^2 + lam sum(t)   s.t.  A_hat x - s = b_hat,  x - t <= 0,  -x - t <= 0
    """
    p, q = inst.p, inst.q
    I_q, I_p = sp.identity(q, format='csr'), sp.identity(p, format='csr')
    Z_pq, Z_qp = sp.csr_matrix((p, q)), sp.csr_matrix((q, p))
    A = sp.bmat([[inst.A_hat, -I_p, Z_pq],
                 [I_q, Z_qp, -I_q],
                 [-I_q, Z_qp, -I_q]], format='csr')
    l = np.concatenate((inst.b_hat, np.full(2 * q, -np.inf)))
    u = np.concatenate((inst.b_hat, np.zeros(2 * q)))
    Q = sp.block_diag((sp.csr_matrix((q, q)), I_p, sp.csr_matrix((q, q))), format='csr')
    c = np.concatenate((np.zeros(q + p), np.full(q, inst.lam)))
    name = None if inst.name is None else inst.name + "_cqp"
    return CcqpProblem(Q, A, c, Box(l, u), name=name)


def split_lasso_solution(inst,  # type: LassoInstance
                         v      # type: np.ndarray
                         ):
    # type: (...) -> Tuple[np.ndarray, np.ndarray, np.ndarray]
    """ Splits a solution of `lasso_to_cqp(inst)` into (x, s, t) """
    p, q = inst.p, inst.q
    return v[:q], v[q:q + p], v[q + p:]


# ------------- QAP relaxation -------------

def assignment_duals(alpha,  # type: np.ndarray
                     beta    # type: np.ndarray
                     ):
    # type: (...) -> Tuple[np.ndarray, np.ndarray]
    """
    Optimal solution of max <e, s + t> s.t. s_i + t_j <= alpha_i beta_j, for alpha nonincreasing and beta
    nondecreasing. The identity assignment is optimal for the costs alpha_i beta_j, and complementary slackness along
    it gives t_1 = 0, t_{j+1} = t_j + alpha_{j+1} (beta_{j+1} - beta_j), s_i = alpha_i beta_i - t_i.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    t = np.zeros_like(beta)
    t[1:] = np.cumsum(alpha[1:] * np.diff(beta))
    s = alpha * beta - t
    return s, t


def _compose_S(inst):
    return (inst.V_A * inst.s_bar).dot(inst.V_A.T)


def _compose_T(inst):
    return (inst.V_B * inst.t_bar).dot(inst.V_B.T)


@autoclass(autohash=False, autoeq=False)
class QapInstance(object):
    """
    Data of a QAP relaxation: the symmetric matrices A_hat, B_hat, their eigendecompositions (alpha nonincreasing,
    beta nondecreasing) and the assignment duals (s_bar, t_bar) defining S = V_A diag(s_bar) V_A^T and
    T = V_B diag(t_bar) V_B^T.
    """
    A_hat = field()
    B_hat = field()
    alpha = field()
    V_A = field()
    beta = field()
    V_B = field()
    s_bar = field()
    t_bar = field()
    name = field(default=None)
    S = field(default_factory=_compose_S, doc="V_A diag(s_bar) V_A^T, composed from the duals when not provided")
    T = field(default_factory=_compose_T, doc="V_B diag(t_bar) V_B^T, composed from the duals when not provided")

    @property
    def d(self):
        return self.A_hat.shape[0]

    def dual_value(self):
        # type: (...) -> float
        return float(np.sum(self.s_bar) + np.sum(self.t_bar))

    def apply(self, v):
        # type: (np.ndarray) -> np.ndarray
        """ vec(A_hat X B_hat - S X - X T) for v = vec(X), column-major """
        d = self.d
        X = np.reshape(v, (d, d), order='F')
        Y = self.A_hat.dot(X).dot(self.B_hat) - self.S.dot(X) - X.dot(self.T)
        return Y.ravel(order='F')

    def check_duals(self, tol=1e-8):
        # type: (...) -> bool
        """
        True when (s_bar, t_bar) is feasible and its value equals the optimal assignment cost for the costs
        alpha_i beta_j, both within tol.
        """
        costs = np.outer(self.alpha, self.beta)
        feasible = np.all(self.s_bar[:, None] + self.t_bar[None, :] <= costs + tol)
        rows, cols = linear_sum_assignment(costs)
        value = self.dual_value()
        return bool(feasible and abs(costs[rows, cols].sum() - value) <= tol * (1. + abs(value)))

    def lower_bound(self, obj):
        # type: (float) -> float
        """
        QAP lower bound from the optimal value `obj` of `to_problem()`: that problem minimizes 1/2 <x, Q_hat x>, and the
        QAP objective of a permutation matrix X is <vec X, Q_hat vec X> + sum(s_bar) + sum(t_bar).
        """
        return 2. * obj + self.dual_value()

    def qap_objective(self, X):
        # type: (np.ndarray) -> float
        """ <vec X, (B_hat kron A_hat) vec X> = tr(X^T A_hat X B_hat) """
        return float(np.sum(X * self.A_hat.dot(X).dot(self.B_hat)))

    def to_problem(self):
        # type: (...) -> CcqpProblem
        """
        min 1/2 <vec X, Q_hat vec X>  s.t.  X e = e,  X^T e = e,  X >= 0, with Q_hat matrix-free.
        """
        d = self.d
        Q = PsdOperator.matrix_free(self.apply, d * d, tag='qap')
        ones, I_d = np.ones((1, d)), sp.identity(d, format='csr')
        A = sp.vstack((sp.kron(ones, I_d), sp.kron(I_d, ones)), format='csr')
        K = Box(np.ones(2 * d), np.ones(2 * d))
        phi = BoxIndicator(np.zeros(d * d), np.full(d * d, np.inf))
        return CcqpProblem(Q, A, np.zeros(d * d), K, phi=phi, name=self.name)


def qap_from_matrices(A_hat,        # type: np.ndarray
                      B_hat,        # type: np.ndarray
                      name=None,    # type: str
                      sym_tol=1e-10
                      ):
    # type: (...) -> QapInstance
    """
    Builds the QAP relaxation data from two symmetric d x d matrices.

    :raises StructureError: if a matrix is not square, not symmetric, or if the sizes differ
    """
    A_hat = np.asarray(A_hat.toarray() if sp.issparse(A_hat) else A_hat, dtype=float)
    B_hat = np.asarray(B_hat.toarray() if sp.issparse(B_hat) else B_hat, dtype=float)
    for what, M in (('A_hat', A_hat), ('B_hat', B_hat)):
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise StructureError("%s should be a square matrix, found shape %s" % (what, M.shape))
        if not np.allclose(M, M.T, rtol=0., atol=sym_tol * (1. + np.max(np.abs(M), initial=0.))):
            raise StructureError("%s is not symmetric" % what)
    if A_hat.shape != B_hat.shape:
        raise StructureError("A_hat and B_hat have different shapes %s and %s" % (A_hat.shape, B_hat.shape))
    validate('d', A_hat.shape[0], min_value=2)

    alpha, V_A = np.linalg.eigh(A_hat)
    alpha, V_A = alpha[::-1], V_A[:, ::-1]
    beta, V_B = np.linalg.eigh(B_hat)
    s_bar, t_bar = assignment_duals(alpha, beta)
    inst = QapInstance(A_hat=A_hat, B_hat=B_hat, alpha=alpha, V_A=V_A, beta=beta, V_B=V_B, s_bar=s_bar, t_bar=t_bar,
                       name=name)
    return inst


def gen_qap(d,      # type: int
            seed=0  # type: int
            ):
    # type: (...) -> Tuple[QapInstance, CcqpProblem]
    """
    A random QAP relaxation: A_hat is the distance matrix of d uniform points of [0, 1)^2, B_hat is symmetric with
    U[0, 1) entries and a zero diagonal.
    """
    validate('d', d, min_value=2)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(size=(d, 2))
    A_hat = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=2)
    B_hat = np.triu(rng.uniform(size=(d, d)), k=1)
    B_hat = B_hat + B_hat.T
    inst = qap_from_matrices(A_hat, B_hat, name="qap_d%s_s%s" % (d, seed))
    return inst, inst.to_problem()


def dense_qap_operator(inst  # type: QapInstance
                       ):
    # type: (...) -> np.ndarray
    """ B_hat kron A_hat - I kron S - T kron I """
    I_d = np.eye(inst.d)
    return np.kron(inst.B_hat, inst.A_hat) - np.kron(I_d, inst.S) - np.kron(inst.T, I_d)


# ------------- recipes -------------

FAMILIES = ('random_qp', 'lasso', 'lasso_cqp', 'qap')


def recipe_arguments(entry  # type: Dict[str, Any]
                     ):
    # type: (...) -> Tuple[str, Optional[str], Dict[str, Any]]
    """
    Splits a recipe entry into its family, its optional name and the generator's keyword arguments.

    :raises StructureError: if the arguments do not match the generator's signature
    """
    kwargs = dict(entry)
    family = kwargs.pop('family', None)
    validate('family', family, is_in=FAMILIES)
    name = kwargs.pop('name', None)
    generator = gen_random_qp if family == 'random_qp' else gen_qap if family == 'qap' else gen_lasso
    try:
        signature(generator).bind(**kwargs)
    except TypeError as e:
        raise StructureError("Invalid '%s' recipe entry %r: %s" % (family, entry, e))
    return family, name, kwargs


def from_recipe_entry(entry,          # type: Dict[str, Any]
                      explicit=False   # type: bool
                      ):
    # type: (...) -> CcqpProblem
    """
    Builds one problem from a recipe entry such as {"family": "random_qp", "n": 20, "m": 40, "seed": 1}. Families
    are 'random_qp', 'lasso' (native form), 'lasso_cqp' and 'qap'; the other keys are the generator's arguments.
    `explicit` assembles the quadratic term of native Lasso problems.
    """
    family, name, kwargs = recipe_arguments(entry)
    if family == 'random_qp':
        prob = gen_random_qp(**kwargs)
    elif family == 'lasso':
        prob = lasso_native(gen_lasso(**kwargs), explicit=explicit)
    elif family == 'lasso_cqp':
        prob = lasso_to_cqp(gen_lasso(**kwargs))
    else:
        prob = gen_qap(**kwargs)[1]
    return prob if name is None else prob.replace(name=name)


def recipe_entries(recipe  # type: Union[str, Dict[str, Any]]
                   ):
    # type: (...) -> List[Dict[str, Any]]
    """ The entries of a recipe, given as a dict or as the path of a JSON file with an "instances" list """
    if not isinstance(recipe, dict):
        with open(recipe) as f:
            recipe = json.load(f)
    if 'instances' not in recipe:
        raise StructureError("A recipe should contain an 'instances' list")
    return list(recipe['instances'])


def from_recipe(recipe  # type: Union[str, Dict[str, Any]]
                ):
    # type: (...) -> List[CcqpProblem]
    """ Builds the problems listed in a recipe, see `recipe_entries` and `from_recipe_entry` """
    problems = [from_recipe_entry(e) for e in recipe_entries(recipe)]
    _logger.debug("Recipe built %d problems", len(problems))
    return problems
