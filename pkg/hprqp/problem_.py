"""
Problem data of a convex composite quadratic program

    min  1/2 <x, Qx> + <c, x> + phi(x)    s.t.  Ax in K = [l, u]

where Q is a positive semidefinite operator (explicit sparse matrix or callback), A is a sparse m x n matrix, K is a
box with possibly infinite bounds and phi is either the indicator of a box [L, U] or a weighted l1 norm.
"""
try:
    from typing import Callable, Optional, Union
except ImportError:
    pass

import numpy as np
import scipy.sparse as sp
from valid8 import validate

from hprqp.utils import DimensionMismatch, check_size, finite_part


class InvalidBounds(ValueError):
    """ Raised when a lower bound exceeds the matching upper bound (or is NaN) """
    __slots__ = ('what', 'index')

    def __init__(self, what, index):
        self.what = what
        self.index = index
        super(InvalidBounds, self).__init__(what, index)

    def __str__(self):
        return "Invalid %s bounds at index %s: lower bound must be <= upper bound" % (self.what, self.index)


def _as_vector(v):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    return arr


def _check_bounds(lower, upper, what):
    bad = np.flatnonzero(~(lower <= upper))
    if bad.size > 0:
        raise InvalidBounds(what, int(bad[0]))


class Box(object):
    """
    A box [l, u] with entries in R u {-inf, +inf}.
    """
    __slots__ = ('l', 'u')

    def __init__(self,
                 l,  # type: np.ndarray
                 u   # type: np.ndarray
                 ):
        l = _as_vector(l)
        u = _as_vector(u)
        if l.shape != u.shape:
            raise DimensionMismatch('box upper bound', l.shape, u.shape)
        _check_bounds(l, u, 'box')
        self.l = l
        self.u = u

    @property
    def size(self):
        return self.l.shape[0]

    def project(self, v):
        return np.minimum(np.maximum(v, self.l), self.u)

    def magnitude(self):
        """ max(|l|, |u|) componentwise, infinite entries being treated as zero """
        return np.maximum(np.abs(finite_part(self.l)), np.abs(finite_part(self.u)))

    def support_domain_part(self, v):
        """
        v with the entries zeroed where they make the support function infinite: v_i > 0 with u_i = +inf, or v_i < 0
        with l_i = -inf
        """
        unbounded = ((v > 0) & np.isinf(self.u)) | ((v < 0) & np.isinf(self.l))
        return np.where(unbounded, 0., v)

    def scaled(self, factor):
        """ The box {factor * s : s in self}, for a positive factor vector """
        return Box(self.l * factor, self.u * factor)

    def __repr__(self):
        return "Box(l=%r, u=%r)" % (self.l, self.u)


def support_box(box,  # type: Box
                y     # type: np.ndarray
                ):
    # type: (...) -> float
    """
    Support function sup_{s in box} <s, y> = sum_i u_i max(y_i, 0) + l_i min(y_i, 0), with 0 * inf = 0.

    :return: a float, possibly +inf
    """
    pos = y > 0
    neg = y < 0
    if np.any(pos & np.isinf(box.u)) or np.any(neg & np.isinf(box.l)):
        return float('inf')
    upper = np.where(pos, box.u, 0.)
    lower = np.where(neg, box.l, 0.)
    return float(np.dot(upper, np.where(pos, y, 0.)) + np.dot(lower, np.where(neg, y, 0.)))


class CompositeTerm(object):
    """
    Base class of the closed set of composite terms phi. Subclasses are BoxIndicator and WeightedL1.
    """
    __slots__ = ()

    def prox(self, sigma_phi, r):
        raise NotImplementedError()

    def conjugate(self, v):
        raise NotImplementedError()

    def value(self, x):
        raise NotImplementedError()

    def check_size(self, n):
        pass


class BoxIndicator(CompositeTerm):
    """ phi = indicator of the box [L, U] """
    __slots__ = ('box',)

    def __init__(self,
                 L,  # type: np.ndarray
                 U   # type: np.ndarray
                 ):
        self.box = Box(L, U)

    @classmethod
    def free(cls, n):
        return cls(np.full(n, -np.inf), np.full(n, np.inf))

    @property
    def L(self):
        return self.box.l

    @property
    def U(self):
        return self.box.u

    def prox(self, sigma_phi, r):
        return self.box.project(r)

    def conjugate(self, v):
        return support_box(self.box, v)

    def value(self, x):
        # iterates reported by the solvers come out of the projection: they are in the box
        return 0.

    def check_size(self, n):
        if self.box.size != n:
            raise DimensionMismatch('phi box', n, self.box.size)

    def __repr__(self):
        return "BoxIndicator(L=%r, U=%r)" % (self.L, self.U)


class WeightedL1(CompositeTerm):
    """ phi = lam * ||x||_1 """
    __slots__ = ('lam',)

    def __init__(self,
                 lam  # type: float
                 ):
        validate('lam', lam, min_value=0., min_strict=True)
        self.lam = float(lam)

    def prox(self, sigma_phi, r):
        thresh = sigma_phi * self.lam
        return np.sign(r) * np.maximum(np.abs(r) - thresh, 0.)

    def conjugate(self, v):
        if v.size == 0 or np.max(np.abs(v)) <= self.lam:
            return 0.
        return float('inf')

    def value(self, x):
        return self.lam * float(np.sum(np.abs(x)))

    def __repr__(self):
        return "WeightedL1(lam=%r)" % self.lam


def prox_phi(t,          # type: CompositeTerm
             sigma_phi,  # type: float
             r           # type: np.ndarray
             ):
    # type: (...) -> np.ndarray
    """
    Proximal mapping argmin_z { phi(z) + 1/(2 sigma_phi) ||z - r||^2 }: a clamp for BoxIndicator, a soft-thresholding
    at sigma_phi * lam for WeightedL1.
    """
    validate('sigma_phi', sigma_phi, min_value=0., min_strict=True)
    return t.prox(sigma_phi, r)


def conj_phi(t,  # type: CompositeTerm
             v   # type: np.ndarray
             ):
    # type: (...) -> float
    """ Fenchel conjugate phi*(v), possibly +inf """
    return t.conjugate(v)


class PsdOperator(object):
    """
    A self-adjoint positive semidefinite operator on R^n: either an explicit sparse matrix or a matrix-free callback.
    An optional `tag` names structured operators (e.g. 'qap').
    """
    __slots__ = ('n', 'matrix', '_apply', 'tag')

    def __init__(self,
                 n,             # type: int
                 matrix=None,   # type: Optional[sp.spmatrix]
                 apply=None,    # type: Optional[Callable[[np.ndarray], np.ndarray]]
                 tag=None       # type: Optional[str]
                 ):
        if (matrix is None) == (apply is None):
            raise ValueError("Exactly one of `matrix` and `apply` should be provided")
        self.n = n
        self.matrix = matrix
        self._apply = apply
        self.tag = tag

    @classmethod
    def explicit(cls, matrix):
        # type: (...) -> PsdOperator
        mat = sp.csr_matrix(matrix, dtype=float, copy=True)
        if mat.shape[0] != mat.shape[1]:
            raise DimensionMismatch('Q', (mat.shape[0], mat.shape[0]), mat.shape)
        mat.eliminate_zeros()
        return cls(mat.shape[0], matrix=mat)

    @classmethod
    def zero(cls, n):
        # type: (...) -> PsdOperator
        return cls(n, matrix=sp.csr_matrix((n, n)))

    @classmethod
    def matrix_free(cls, apply, n, tag=None):
        # type: (...) -> PsdOperator
        return cls(n, apply=apply, tag=tag)

    @property
    def is_explicit(self):
        return self.matrix is not None

    @property
    def is_zero(self):
        return self.matrix is not None and self.matrix.nnz == 0

    def __call__(self, v):
        if self.matrix is not None:
            return self.matrix.dot(v)
        return np.asarray(self._apply(v), dtype=float)

    def __repr__(self):
        if self.is_explicit:
            return "PsdOperator(explicit %sx%s, nnz=%s)" % (self.n, self.n, self.matrix.nnz)
        return "PsdOperator(matrix-free, n=%s, tag=%r)" % (self.n, self.tag)


def apply_Q(p,  # type: PsdOperator
            v   # type: np.ndarray
            ):
    # type: (...) -> np.ndarray
    """ Returns Qv, after checking that v has the operator's dimension """
    check_size('Q argument', v, p.n)
    return p(v)


class CcqpProblem(object):
    """
    Immutable data of a convex composite quadratic program. `obj_offset` is a constant added to the reported
    objective values.
    """
    __slots__ = ('Q', 'A', 'c', 'K', 'phi', 'obj_offset', 'name')

    def __init__(self,
                 Q,                 # type: Union[PsdOperator, sp.spmatrix, np.ndarray]
                 A,                 # type: Union[sp.spmatrix, np.ndarray]
                 c,                 # type: np.ndarray
                 K,                 # type: Box
                 phi=None,          # type: CompositeTerm
                 obj_offset=0.,     # type: float
                 name=None          # type: str
                 ):
        if not isinstance(Q, PsdOperator):
            Q = PsdOperator.explicit(Q)
        A = sp.csr_matrix(A, dtype=float)
        c = _as_vector(c)
        n = c.shape[0]
        if n < 1:
            raise DimensionMismatch('variable count', '>= 1', n)
        if Q.n != n:
            raise DimensionMismatch('Q', n, Q.n)
        if A.shape[1] != n:
            raise DimensionMismatch('columns of A', n, A.shape[1])
        if K.size != A.shape[0]:
            raise DimensionMismatch('rows of K', A.shape[0], K.size)
        if not np.all(np.isfinite(c)):
            raise ValueError("c has nonfinite entries")
        if not np.all(np.isfinite(A.data)):
            raise ValueError("A has nonfinite entries")
        if Q.is_explicit and not np.all(np.isfinite(Q.matrix.data)):
            raise ValueError("Q has nonfinite entries")
        if phi is None:
            phi = BoxIndicator.free(n)
        phi.check_size(n)

        self.Q = Q
        self.A = A
        self.c = c
        self.K = K
        self.phi = phi
        self.obj_offset = float(obj_offset)
        self.name = name

    @property
    def n(self):
        return self.c.shape[0]

    @property
    def m(self):
        return self.A.shape[0]

    def replace(self, **changes):
        # type: (...) -> CcqpProblem
        """ Returns a new problem with some fields replaced """
        fields = dict(Q=self.Q, A=self.A, c=self.c, K=self.K, phi=self.phi, obj_offset=self.obj_offset,
                      name=self.name)
        fields.update(changes)
        return CcqpProblem(**fields)

    def objective(self, x):
        # type: (...) -> float
        """ 1/2 <x, Qx> + <c, x> + phi(x) + offset """
        check_size('x', x, self.n)
        return 0.5 * float(np.dot(x, self.Q(x))) + float(np.dot(self.c, x)) + self.phi.value(x) + self.obj_offset

    def residual_products(self, x, y):
        """ Returns the tuple (Ax, A^T y, Qx) """
        check_size('x', x, self.n)
        check_size('y', y, self.m)
        return self.A.dot(x), self.A.T.dot(y), self.Q(x)

    def __repr__(self):
        return "CcqpProblem(name=%r, n=%s, m=%s, Q=%r, phi=%r)" % (self.name, self.n, self.m, self.Q, self.phi)
