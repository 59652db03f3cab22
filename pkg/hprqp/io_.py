"""
Reading and writing problems and results:

 - QPS / MPS free format (whitespace-delimited fields, section headers at column 0),
 - Matrix Market bundles: a directory with A.mtx, optional Q.mtx, c.vec, K.bounds, optional x.bounds and l1.lambda,
   or A_hat.mtx and B_hat.mtx for a QAP relaxation,
 - JSON results with a CSV iteration trace.
"""
import csv
import json
import logging
import os
from collections import OrderedDict
from io import StringIO

try:
    from typing import Dict, Iterable, List, Optional, Tuple, Union
except ImportError:
    pass

import numpy as np
import scipy.io
import scipy.sparse as sp

from hprqp.generators_ import QapInstance, qap_from_matrices
from hprqp.kkt_ import KktReport, TRACE_COLUMNS, TraceRecord
from hprqp.problem_ import Box, BoxIndicator, CcqpProblem, WeightedL1
from hprqp.utils import ParseError, StructureError, log_duration


_logger = logging.getLogger(__name__)

RESULTS_SCHEMA_VERSION = 1
INFINITE_BOUND = 1e20

_SECTIONS = ('NAME', 'OBJSENSE', 'ROWS', 'COLUMNS', 'RHS', 'RANGES', 'BOUNDS', 'QUADOBJ', 'QMATRIX', 'ENDATA')
_SECTION_RANK = {'NAME': 0, 'OBJSENSE': 1, 'ROWS': 2, 'COLUMNS': 3, 'RHS': 4, 'RANGES': 5, 'BOUNDS': 6,
                 'QUADOBJ': 7, 'QMATRIX': 7, 'ENDATA': 8}
_ROW_TYPES = ('N', 'E', 'L', 'G')
_VALUED_BOUNDS = ('UP', 'LO', 'FX', 'LI', 'UI')
_FLAG_BOUNDS = ('FR', 'MI', 'PL', 'BV')
_OPTIONAL_BUNDLE_FILES = ('Q.mtx', 'x.bounds', 'l1.lambda', 'obj.offset')


class QpsParseError(ParseError):
    """ A located error in a QPS / MPS document """


class MatrixMarketError(ParseError):
    """ An error in a Matrix Market file or in a matrix bundle """


# ------------- QPS -------------

class QpsDocument(object):
    """
    The content of a QPS document, in declaration order. Coefficients are accumulated (duplicates are summed), and
    each quadratic entry keeps the line it comes from.
    """
    __slots__ = ('name', 'maximize', 'obj_row', 'rows', 'row_types', 'columns', 'coefs', 'rhs', 'ranges', 'lower',
                 'upper', 'lower_set', 'bound_lines', 'quad', 'quad_kind')

    def __init__(self):
        self.name = None
        self.maximize = False
        self.obj_row = None
        self.rows = OrderedDict()     # name -> index among constraint rows
        self.row_types = {}           # name -> N/E/L/G
        self.columns = OrderedDict()  # name -> index
        self.coefs = {}               # (row, col) -> value
        self.rhs = {}
        self.ranges = {}
        self.lower = {}
        self.upper = {}
        self.lower_set = set()
        self.bound_lines = {}         # name -> line of the last bound on that column
        self.quad = []                # (i, j, value, lineno)
        self.quad_kind = None

    def to_problem(self):
        # type: (...) -> CcqpProblem
        """
        Assembles the problem: E rows give l = u = rhs, L rows (-inf, rhs], G rows [rhs, +inf), adjusted by RANGES;
        variable bounds default to [0, +inf); an objective RHS value r gives an objective offset -r. OBJSENSE MAX
        documents are negated into minimization form.
        """
        if self.obj_row is None:
            raise QpsParseError("no objective (N) row declared")
        n, m = len(self.columns), len(self.rows)
        c = np.zeros(n)
        rows, cols, vals = [], [], []
        for (r, j), v in self.coefs.items():
            if r == self.obj_row:
                c[j] += v
            else:
                rows.append(self.rows[r])
                cols.append(j)
                vals.append(v)
        A = sp.csr_matrix((vals, (rows, cols)), shape=(m, n))

        l, u = np.empty(m), np.empty(m)
        for r, i in self.rows.items():
            b = self.rhs.get(r, 0.)
            kind = self.row_types[r]
            l[i], u[i] = {'E': (b, b), 'L': (-np.inf, b), 'G': (b, np.inf)}[kind]
            if r in self.ranges:
                rng = self.ranges[r]
                if kind == 'E':
                    l[i], u[i] = (b, b + abs(rng)) if rng > 0 else (b - abs(rng), b)
                elif kind == 'L':
                    l[i] = b - abs(rng)
                else:
                    u[i] = b + abs(rng)

        L = np.array([self.lower.get(name, 0.) for name in self.columns])
        U = np.array([self.upper.get(name, np.inf) for name in self.columns])
        crossed = np.flatnonzero(~(L <= U))
        if crossed.size > 0:
            j = crossed[0]
            name = list(self.columns)[j]
            raise QpsParseError("lower bound %g above upper bound %g on column %r" % (L[j], U[j], name),
                                self.bound_lines.get(name))

        Q = self._quadratic(n)
        offset = -self.rhs.get(self.obj_row, 0.)
        if self.maximize:
            c, Q, offset = -c, -Q, -offset
        return CcqpProblem(Q, A, c, Box(l, u), phi=BoxIndicator(L, U), obj_offset=offset, name=self.name)

    def _quadratic(self, n):
        if not self.quad:
            return sp.csr_matrix((n, n))
        i, j, v, _ = (np.array(a) for a in zip(*self.quad))
        if self.quad_kind == 'QUADOBJ':
            off = i != j
            i, j, v = np.concatenate((i, j[off])), np.concatenate((j, i[off])), np.concatenate((v, v[off]))
            return sp.csr_matrix((v, (i, j)), shape=(n, n))

        Q = sp.csr_matrix((v, (i, j)), shape=(n, n))
        asym = abs(Q - Q.T).tocoo()
        bad = asym.data > 1e-12 * (1. + abs(Q).max())
        if np.any(bad):
            bi, bj = asym.row[bad][0], asym.col[bad][0]
            lineno = next((ln for (a, b, _, ln) in self.quad if (a, b) in ((bi, bj), (bj, bi))), None)
            raise QpsParseError("QMATRIX is not symmetric at entry (%s, %s)" % (list(self.columns)[bi],
                                                                               list(self.columns)[bj]), lineno)
        return Q


def _value(tok):
    try:
        return float(tok)
    except ValueError:
        raise QpsParseError("invalid number %r" % tok)


def _bound_value(tok):
    v = _value(tok)
    if v >= INFINITE_BOUND:
        return np.inf
    if v <= -INFINITE_BOUND:
        return -np.inf
    return v


def _pairs(doc, toks, lineno, where):
    """ Yields (row, value) from a 'row value [row value]' list """
    if len(toks) not in (2, 4):
        raise QpsParseError("expected 2 or 4 fields in %s, found %d (fixed-format files are not supported)"
                            % (where, len(toks)), lineno)
    for k in range(0, len(toks), 2):
        row = toks[k]
        if row not in doc.row_types:
            raise QpsParseError("undeclared row %r" % row, lineno)
        yield row, _value(toks[k + 1])


def _column_index(doc, name, lineno):
    try:
        return doc.columns[name]
    except KeyError:
        raise QpsParseError("undeclared column %r" % name, lineno)


def _parse_line(doc, section, toks, lineno):
    if section == 'NAME':
        raise QpsParseError("unexpected data after NAME", lineno)

    elif section == 'OBJSENSE':
        if len(toks) != 1 or toks[0].upper() not in ('MIN', 'MAX', 'MINIMIZE', 'MAXIMIZE'):
            raise QpsParseError("invalid OBJSENSE %r" % ' '.join(toks), lineno)
        doc.maximize = toks[0].upper().startswith('MAX')

    elif section == 'ROWS':
        if len(toks) != 2:
            raise QpsParseError("expected 2 fields in ROWS, found %d" % len(toks), lineno)
        kind, name = toks[0].upper(), toks[1]
        if kind not in _ROW_TYPES:
            raise QpsParseError("unknown row type %r" % kind, lineno)
        if name in doc.row_types:
            raise QpsParseError("duplicate row %r" % name, lineno)
        if kind == 'N':
            if doc.obj_row is not None:
                raise QpsParseError("a second objective (N) row %r is declared" % name, lineno)
            doc.obj_row = name
        else:
            doc.rows[name] = len(doc.rows)
        doc.row_types[name] = kind

    elif section == 'COLUMNS':
        if len(toks) >= 2 and toks[1].strip("'").upper() == 'MARKER':
            _logger.warning("Line %s: integrality marker ignored", lineno)
            return
        col = toks[0]
        j = doc.columns.setdefault(col, len(doc.columns))
        for row, v in _pairs(doc, toks[1:], lineno, 'COLUMNS'):
            doc.coefs[(row, j)] = doc.coefs.get((row, j), 0.) + v

    elif section in ('RHS', 'RANGES'):
        target = doc.rhs if section == 'RHS' else doc.ranges
        entries = toks[1:] if len(toks) % 2 == 1 else toks
        for row, v in _pairs(doc, entries, lineno, section):
            if section == 'RANGES' and row == doc.obj_row:
                raise QpsParseError("RANGES on the objective row", lineno)
            target[row] = v

    elif section == 'BOUNDS':
        kind = toks[0].upper()
        if kind in _VALUED_BOUNDS:
            if len(toks) not in (3, 4):
                raise QpsParseError("expected 3 or 4 fields for a %s bound, found %d" % (kind, len(toks)), lineno)
            name, v = toks[-2], _bound_value(toks[-1])
        elif kind in _FLAG_BOUNDS:
            if len(toks) not in (2, 3):
                raise QpsParseError("expected 2 or 3 fields for a %s bound, found %d" % (kind, len(toks)), lineno)
            name, v = toks[-1], None
        else:
            raise QpsParseError("unknown bound type %r" % kind, lineno)
        _column_index(doc, name, lineno)
        doc.bound_lines[name] = lineno
        if kind in ('LI', 'UI', 'BV'):
            _logger.warning("Line %s: integrality of bound type %s ignored", lineno, kind)
        if kind in ('UP', 'UI'):
            doc.upper[name] = v
            if v < 0 and name not in doc.lower_set:
                _logger.warning("Line %s: negative upper bound on %r with a default lower bound, lower bound set "
                                "to -inf", lineno, name)
                doc.lower[name] = -np.inf
        elif kind in ('LO', 'LI'):
            doc.lower[name] = v
            doc.lower_set.add(name)
        elif kind == 'FX':
            doc.lower[name] = doc.upper[name] = v
            doc.lower_set.add(name)
        elif kind == 'FR':
            doc.lower[name], doc.upper[name] = -np.inf, np.inf
            doc.lower_set.add(name)
        elif kind == 'MI':
            doc.lower[name] = -np.inf
            doc.lower_set.add(name)
        elif kind == 'PL':
            doc.upper[name] = np.inf
        else:
            doc.lower[name], doc.upper[name] = 0., 1.
            doc.lower_set.add(name)

    else:
        # QUADOBJ / QMATRIX
        if len(toks) != 3:
            raise QpsParseError("expected 3 fields in %s, found %d" % (section, len(toks)), lineno)
        i = _column_index(doc, toks[0], lineno)
        j = _column_index(doc, toks[1], lineno)
        doc.quad.append((i, j, _value(toks[2]), lineno))


def parse_qps(text,         # type: str
              source=None   # type: str
              ):
    # type: (...) -> QpsDocument
    """
    Parses a free-format QPS / MPS document. Sections must appear in the order NAME, [OBJSENSE], ROWS, COLUMNS,
    [RHS], [RANGES], [BOUNDS], [QUADOBJ | QMATRIX], ENDATA. Lines starting with '*' are comments.

    :raises QpsParseError: on any malformed input, with the line number
    """
    doc = QpsDocument()
    section = None
    seen = set()
    lineno = None
    try:
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip()
            if not line.strip() or line.lstrip().startswith('*'):
                continue
            toks = line.split()
            if not line[0].isspace():
                header = toks[0].upper()
                if header not in _SECTIONS:
                    raise QpsParseError("unknown section %r" % toks[0], lineno)
                if header in seen:
                    raise QpsParseError("duplicate section %s" % header, lineno)
                if section is not None and _SECTION_RANK[header] < _SECTION_RANK[section]:
                    raise QpsParseError("section %s after section %s" % (header, section), lineno)
                if header in ('QUADOBJ', 'QMATRIX'):
                    if doc.quad_kind is not None:
                        raise QpsParseError("both QUADOBJ and QMATRIX sections", lineno)
                    doc.quad_kind = header
                seen.add(header)
                section = header
                if header == 'ENDATA':
                    break
                if header == 'NAME':
                    doc.name = toks[1] if len(toks) > 1 else None
                elif header == 'OBJSENSE' and len(toks) > 1:
                    _parse_line(doc, section, toks[1:], lineno)
                elif len(toks) > 1:
                    raise QpsParseError("unexpected fields after section header %s" % header, lineno)
                continue
            if section is None:
                raise QpsParseError("data line before any section", lineno)
            _parse_line(doc, section, toks, lineno)
    except QpsParseError as e:
        if e.lineno is None:
            e.lineno = lineno
        e.source = source
        raise
    except (ValueError, IndexError, KeyError, TypeError, ArithmeticError) as e:
        raise QpsParseError("%s: %s" % (type(e).__name__, e), lineno, source)

    if 'ENDATA' not in seen:
        raise QpsParseError("missing ENDATA", lineno, source)
    if 'ROWS' not in seen:
        raise QpsParseError("missing ROWS section", lineno, source)
    return doc


def read_qps(text,          # type: str
             source=None    # type: str
             ):
    # type: (...) -> CcqpProblem
    """
    Reads a problem from the text of a free-format QPS / MPS document. QUADOBJ entries are the lower triangle of
    the Q of the 1/2 <x, Qx> term (diagonal entries stored once); QMATRIX entries are the full Q, checked for symmetry.

    :raises QpsParseError: on any malformed or inconsistent input
    """
    doc = parse_qps(text, source=source)
    try:
        return doc.to_problem()
    except ParseError as e:
        e.source = source
        raise
    except (ValueError, IndexError, KeyError, TypeError, ArithmeticError) as e:
        raise QpsParseError("%s: %s" % (type(e).__name__, e), None, source)


@log_duration("QPS parsing")
def read_qps_file(path  # type: str
                  ):
    # type: (...) -> CcqpProblem
    with open(path) as f:
        text = f.read()
    prob = read_qps(text, source=path)
    if prob.name is None:
        prob = prob.replace(name=os.path.splitext(os.path.basename(path))[0])
    return prob


# ------------- matrix bundles -------------

def _read_mtx(path):
    # type: (str) -> sp.csr_matrix
    try:
        return sp.csr_matrix(scipy.io.mmread(path), dtype=float)
    except (ValueError, IndexError, TypeError, OverflowError) as e:
        raise MatrixMarketError("%s: %s" % (type(e).__name__, e), source=path)


def _read_table(path, columns):
    # type: (str, int) -> np.ndarray
    with open(path) as f:
        text = f.read()
    if not text.strip():
        return np.zeros((0, columns))
    try:
        table = np.loadtxt(StringIO(text), ndmin=2)
    except ValueError as e:
        raise MatrixMarketError(str(e), source=path)
    if table.shape[1] != columns:
        raise MatrixMarketError("expected %d columns, found %d" % (columns, table.shape[1]), source=path)
    return table


@log_duration("bundle reading")
def read_matrix_bundle(path  # type: str
                       ):
    # type: (...) -> CcqpProblem
    """
    Reads a problem from a directory containing:

     - A.mtx: the m x n constraint matrix (Matrix Market),
     - Q.mtx: optional n x n quadratic term (Q = 0 when absent; symmetric storage is expanded),
     - c.vec: n values, one per line,
     - K.bounds: m lines 'l u' (inf / -inf allowed),
     - x.bounds: optional n lines 'L U' (free variables when absent),
     - l1.lambda: optional weight of a l1 term, exclusive with x.bounds,
     - obj.offset: optional constant added to the objective.
    """
    def f(name):
        return os.path.join(path, name)

    A = _read_mtx(f('A.mtx'))
    Q = _read_mtx(f('Q.mtx')) if os.path.exists(f('Q.mtx')) else sp.csr_matrix((A.shape[1], A.shape[1]))
    c = _read_table(f('c.vec'), 1).ravel()
    K = _read_table(f('K.bounds'), 2)
    phi = None
    if os.path.exists(f('l1.lambda')):
        if os.path.exists(f('x.bounds')):
            raise MatrixMarketError("a bundle can not have both x.bounds and l1.lambda", source=path)
        phi = WeightedL1(float(_read_table(f('l1.lambda'), 1)[0, 0]))
    elif os.path.exists(f('x.bounds')):
        X = _read_table(f('x.bounds'), 2)
        phi = BoxIndicator(X[:, 0], X[:, 1])
    offset = float(_read_table(f('obj.offset'), 1)[0, 0]) if os.path.exists(f('obj.offset')) else 0.
    try:
        return CcqpProblem(Q, A, c, Box(K[:, 0], K[:, 1]), phi=phi, obj_offset=offset,
                           name=os.path.basename(os.path.normpath(path)))
    except ValueError as e:
        raise MatrixMarketError(str(e), source=path)


def write_matrix_bundle(prob,   # type: CcqpProblem
                        path    # type: str
                        ):
    """
    Writes `prob` as a matrix bundle readable by `read_matrix_bundle`. Values are written with 17 significant digits
    so that reading the bundle back gives the same data.

    :raises StructureError: if Q is matrix-free
    """
    if not prob.Q.is_explicit:
        raise StructureError("A matrix-free Q can not be written to a matrix bundle")
    if not os.path.isdir(path):
        os.makedirs(path)

    def f(name):
        return os.path.join(path, name)

    for optional in _OPTIONAL_BUNDLE_FILES:
        if os.path.exists(f(optional)):
            os.remove(f(optional))

    scipy.io.mmwrite(f('A.mtx'), prob.A.tocoo(), precision=17)
    if not prob.Q.is_zero:
        scipy.io.mmwrite(f('Q.mtx'), prob.Q.matrix.tocoo(), precision=17)
    np.savetxt(f('c.vec'), prob.c, fmt='%.17g')
    np.savetxt(f('K.bounds'), np.column_stack((prob.K.l, prob.K.u)), fmt='%.17g')
    if isinstance(prob.phi, WeightedL1):
        np.savetxt(f('l1.lambda'), [prob.phi.lam], fmt='%.17g')
    else:
        np.savetxt(f('x.bounds'), np.column_stack((prob.phi.L, prob.phi.U)), fmt='%.17g')
    if prob.obj_offset != 0.:
        np.savetxt(f('obj.offset'), [prob.obj_offset], fmt='%.17g')


def read_qap_bundle(path  # type: str
                    ):
    # type: (...) -> QapInstance
    """ Reads A_hat.mtx and B_hat.mtx from a directory and builds the QAP relaxation data """
    A_hat = _read_mtx(os.path.join(path, 'A_hat.mtx'))
    B_hat = _read_mtx(os.path.join(path, 'B_hat.mtx'))
    return qap_from_matrices(A_hat, B_hat, name=os.path.basename(os.path.normpath(path)))


def write_qap_bundle(inst,  # type: QapInstance
                     path   # type: str
                     ):
    if not os.path.isdir(path):
        os.makedirs(path)
    scipy.io.mmwrite(os.path.join(path, 'A_hat.mtx'), inst.A_hat, precision=17)
    scipy.io.mmwrite(os.path.join(path, 'B_hat.mtx'), inst.B_hat, precision=17)


def is_qap_bundle(path):
    # type: (str) -> bool
    return os.path.isdir(path) and os.path.exists(os.path.join(path, 'A_hat.mtx'))


# ------------- results -------------

def trace_path_for(json_path):
    # type: (str) -> str
    """ The CSV trace written next to a JSON result: 'res.json' -> 'res_trace.csv' """
    return os.path.splitext(json_path)[0] + '_trace.csv'


def results_dict(report,        # type: KktReport
                 name=None      # type: str
                 ):
    # type: (...) -> Dict
    d = OrderedDict(schema_version=RESULTS_SCHEMA_VERSION, instance=name)
    d.update(dict(report))
    d['residual_norms'] = list(report.residual_norms)
    return d


def write_results(report,           # type: KktReport
                  trace,            # type: Iterable[TraceRecord]
                  path,             # type: str
                  name=None,        # type: str
                  trace_path=None   # type: str
                  ):
    # type: (...) -> Tuple[str, str]
    """
    Writes the report as JSON (versioned schema, keys sorted, infinite values as Infinity) and the trace as CSV with
    the columns TRACE_COLUMNS. An empty trace gives a header-only CSV.

    :return: the paths of the JSON and CSV files
    """
    if trace_path is None:
        trace_path = trace_path_for(path)
    with open(path, 'w') as f:
        json.dump(results_dict(report, name), f, indent=2, sort_keys=True)
        f.write('\n')
    write_trace(trace, trace_path)
    return path, trace_path


def write_trace(trace, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(TRACE_COLUMNS)
        for rec in trace:
            d = dict(rec)
            writer.writerow([repr(d[col]) if isinstance(d[col], float) else d[col] for col in TRACE_COLUMNS])


def read_trace(path):
    # type: (str) -> List[TraceRecord]
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != TRACE_COLUMNS:
            raise ParseError("unexpected trace columns %r" % (reader.fieldnames, ), source=path)
        return [TraceRecord(k=int(row['k']), r=int(row['r']), t=int(row['t']),
                            **{col: float(row[col]) for col in TRACE_COLUMNS[3:]}) for row in reader]


def read_results(path  # type: str
                 ):
    # type: (...) -> Tuple[KktReport, Optional[str]]
    """
    Reads a JSON result written by `write_results`.

    :return: a tuple (report, instance name)
    """
    with open(path) as f:
        d = json.load(f)
    version = d.pop('schema_version', None)
    if version != RESULTS_SCHEMA_VERSION:
        raise ParseError("unsupported results schema version %r" % version, source=path)
    name = d.pop('instance', None)
    d['residual_norms'] = tuple(d['residual_norms'])
    return KktReport.from_dict(d), name


def load_problem(path  # type: str
                 ):
    # type: (...) -> CcqpProblem
    """
    Loads a problem from a QPS / MPS file, a matrix bundle directory or a QAP bundle directory.
    """
    if os.path.isdir(path):
        if is_qap_bundle(path):
            return read_qap_bundle(path).to_problem()
        return read_matrix_bundle(path)
    return read_qps_file(path)
