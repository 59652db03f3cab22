import logging
from timeit import default_timer

try:
    from typing import Callable, Iterable, Optional, Tuple, Any
except ImportError:
    pass

import numpy as np
from decopatch import function_decorator, DECORATED
from makefun import wraps


_logger = logging.getLogger(__name__)


class DimensionMismatch(ValueError):
    """ Raised when a vector or matrix does not have the size implied by the problem it is used with """
    __slots__ = ('what', 'expected', 'got')

    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super(DimensionMismatch, self).__init__(what, expected, got)

    def __str__(self):
        return "Dimension mismatch for %s: expected %s, got %s" % (self.what, self.expected, self.got)


class NumericalBreakdown(ArithmeticError):
    """ Raised when an iterate block becomes nonfinite """
    __slots__ = ('block', 'iteration')

    def __init__(self, block, iteration=None):
        self.block = block
        self.iteration = iteration
        super(NumericalBreakdown, self).__init__(block, iteration)

    def __str__(self):
        where = "" if self.iteration is None else " at iteration %s" % self.iteration
        return "Nonfinite values in block '%s'%s" % (self.block, where)


class MetricNotPsd(ArithmeticError):
    """ Raised when a squared M-norm evaluates to a clearly negative number """
    __slots__ = ('value', 'scale')

    def __init__(self, value, scale):
        self.value = value
        self.scale = scale
        super(MetricNotPsd, self).__init__(value, scale)

    def __str__(self):
        return "Squared M-norm is negative: %r (scale %r)" % (self.value, self.scale)


class StructureError(ValueError):
    """ Raised when input data does not have the structure an operation requires (symmetry, explicit storage...) """


class ParseError(ValueError):
    """ Base class of all located input errors """
    __slots__ = ('message', 'lineno', 'source')

    def __init__(self, message, lineno=None, source=None):
        self.message = message
        self.lineno = lineno
        self.source = source
        super(ParseError, self).__init__(message, lineno, source)

    def __str__(self):
        prefix = "" if self.source is None else "%s: " % self.source
        if self.lineno is not None:
            prefix += "line %s: " % self.lineno
        return prefix + self.message


def inf_norm(v  # type: np.ndarray
             ):
    # type: (...) -> float
    """ Infinity norm that returns 0 on empty vectors """
    return float(np.max(np.abs(v))) if v.size > 0 else 0.0


def finite_part(v  # type: np.ndarray
                ):
    # type: (...) -> np.ndarray
    """ Returns a copy of v where infinite entries are replaced with 0 """
    return np.where(np.isfinite(v), v, 0.0)


def check_size(what,      # type: str
               v,         # type: np.ndarray
               expected   # type: int
               ):
    """ Raises a DimensionMismatch if the 1-d array v does not have `expected` entries """
    if v.ndim != 1 or v.shape[0] != expected:
        raise DimensionMismatch(what, expected, v.shape)


@function_decorator
def finite_output(names=None,  # type: Tuple[str, ...]
                  f=DECORATED
                  ):
    """
    A decorator checking that the arrays returned by the decorated function are all finite. The function may return a
    single array or a tuple of arrays; objects exposing a `blocks()` method yielding (name, array) pairs are supported
    too.

    :param names: the block names to use in the error when the function returns an array or a tuple of arrays.
    :return:
    """
    return finite_output_decorate(f, names=names)


def finite_output_decorate(f,           # type: Callable
                           names=None,  # type: Tuple[str, ...]
                           ):
    # type: (...) -> Callable
    """
    Manual version of `@finite_output`.

    :param f: the function to wrap
    :param names: see `finite_output`
    :return:
    """
    @wraps(f)
    def _checked(*args, **kwargs):
        res = f(*args, **kwargs)
        for block_name, block in _iter_blocks(res, names):
            if block is not None and not np.all(np.isfinite(block)):
                raise NumericalBreakdown(block_name)
        return res

    return _checked


def _iter_blocks(res, names):
    # type: (...) -> Iterable[Tuple[str, Any]]
    if hasattr(res, 'blocks'):
        return res.blocks()
    if isinstance(res, tuple):
        labels = names if names is not None else tuple('output[%s]' % i for i in range(len(res)))
        return zip(labels, res)
    return (((names or ('output',))[0], res),)


@function_decorator
def log_duration(what=None,  # type: Optional[str]
                 f=DECORATED
                 ):
    """
    A decorator logging the wall time spent in the decorated function, at DEBUG level.

    :param what: a label for the log message. Defaults to the function name.
    :return:
    """
    label = what if what is not None else f.__name__

    @wraps(f)
    def _timed(*args, **kwargs):
        start = default_timer()
        try:
            return f(*args, **kwargs)
        finally:
            _logger.debug("%s took %.3fs", label, default_timer() - start)

    return _timed
