import os

import numpy as np
import pytest
import scipy.sparse as sp

from hprqp import OPTIMAL, Box, BoxIndicator, CcqpProblem, KktReport, MatrixMarketError, ParseError, \
    QpsParseError, SolverConfig, TraceRecord, WeightedL1, gen_qap, gen_random_qp, load_problem, read_matrix_bundle, \
    read_qps, read_results, solve, write_matrix_bundle, write_results
from hprqp.io_ import read_trace, trace_path_for, write_qap_bundle


TINY_QPS = """NAME          TINY
* min x^2 - x  s.t.  x <= 4, x in [0, 1]
ROWS
 N  obj
 L  c1
COLUMNS
    x         obj       -1.0     c1        1.0
RHS
    rhs       c1        4.0
BOUNDS
 UP bnd       x         1.0
QUADOBJ
    x         x         2.0
ENDATA
"""


def test_minimal_qps():
    prob = read_qps(TINY_QPS)
    assert prob.name == 'TINY'
    assert (prob.n, prob.m) == (1, 1)
    np.testing.assert_array_equal(prob.Q.matrix.toarray(), [[2.]])
    np.testing.assert_array_equal(prob.c, [-1.])
    assert prob.K.l[0] == -np.inf and prob.K.u[0] == 4.
    assert prob.phi.L[0] == 0. and prob.phi.U[0] == 1.

    res = solve(prob, SolverConfig(time_limit=60.))
    assert res.report.status == OPTIMAL
    assert abs(res.iterate.x[0] - 0.5) <= 1e-6
    assert res.report.primal_obj == pytest.approx(-0.25, abs=1e-7)


def test_row_types_ranges_and_offset():
    text = """NAME RNG
ROWS
 N obj
 L lrow
 G grow
 E erow
 E erow2
COLUMNS
    x obj 1.0 lrow 1.0
    x grow 1.0 erow 1.0
    y erow2 2.0 obj 3.0
RHS
    rhs lrow 4.0 grow 1.0
    rhs erow 2.0 erow2 5.0
    rhs obj 7.0
RANGES
    rng lrow 1.0 grow 2.5
    rng erow 3.0 erow2 -1.0
BOUNDS
 FR bnd x
 MI bnd y
ENDATA
"""
    prob = read_qps(text)
    np.testing.assert_array_equal(prob.K.l, [3., 1., 2., 4.])
    np.testing.assert_array_equal(prob.K.u, [4., 3.5, 5., 5.])
    np.testing.assert_array_equal(prob.c, [1., 3.])
    assert prob.obj_offset == -7.
    assert prob.Q.is_zero
    # MI only sets the lower bound
    np.testing.assert_array_equal(prob.phi.L, [-np.inf, -np.inf])
    np.testing.assert_array_equal(prob.phi.U, [np.inf, np.inf])


def test_qmatrix_and_maximization():
    text = """NAME QM
OBJSENSE
    MAX
ROWS
 N obj
COLUMNS
    x obj 1.0
    y obj 1.0
BOUNDS
 LO bnd x -1e30
 UP bnd y 1e30
QMATRIX
    x x -2.0
    x y 1.0
    y x 1.0
    y y -2.0
ENDATA
"""
    prob = read_qps(text)
    assert prob.m == 0
    np.testing.assert_array_equal(prob.Q.matrix.toarray(), [[2., -1.], [-1., 2.]])
    np.testing.assert_array_equal(prob.c, [-1., -1.])
    assert prob.phi.L[0] == -np.inf and prob.phi.U[1] == np.inf


@pytest.mark.parametrize('body, lineno, message', [
    ("ROWS\n N obj\nCOLUMNS\n    x obj abc\nENDATA\n", 4, "invalid number"),
    ("ROWS\n N obj\nCOLUMNS\n    x foo 1.0\nENDATA\n", 4, "undeclared row"),
    ("ROWS\n N obj\n X bad\nENDATA\n", 3, "unknown row type"),
    ("ROWS\n N obj\nCOLUMNS\n    x obj 1.0\nBOUNDS\n UP bnd z 1.0\nENDATA\n", 6, "undeclared column"),
    ("ROWS\n N obj\nCOLUMNS\n    x obj 1.0\nQMATRIX\n    x x 1.0 2.0\nENDATA\n", 6, "expected 3 fields"),
    ("ROWS\n N obj\nBOUNDS\nCOLUMNS\n    x obj 1.0\nENDATA\n", 4, "section COLUMNS after section BOUNDS"),
    ("ROWS\n N obj\nCOLUMNS\n    x obj 1.0\n", 4, "missing ENDATA"),
    ("    x obj 1.0\nENDATA\n", 1, "data line before any section"),
], ids=['number', 'row', 'row type', 'column', 'fields', 'order', 'endata', 'orphan data'])
def test_located_errors(body, lineno, message):
    with pytest.raises(QpsParseError) as exc_info:
        read_qps(body, source='bad.qps')
    e = exc_info.value
    assert e.lineno == lineno
    assert message in str(e)
    assert str(e).startswith("bad.qps: line %s: " % lineno)


def test_asymmetric_qmatrix():
    text = "ROWS\n N obj\nCOLUMNS\n    x obj 1.0\n    y obj 1.0\nQMATRIX\n    x y 1.0\n    y x 2.0\nENDATA\n"
    with pytest.raises(QpsParseError) as exc_info:
        read_qps(text)
    assert "not symmetric" in str(exc_info.value)
    assert exc_info.value.lineno in (7, 8)


def test_inconsistent_bounds_are_parse_errors():
    text = "ROWS\n N obj\nCOLUMNS\n    x obj 1.0\n    y obj 1.0\nBOUNDS\n LO bnd x 5.0\n UP bnd x 1.0\nENDATA\n"
    with pytest.raises(QpsParseError) as exc_info:
        read_qps(text, source='bad.qps')
    assert exc_info.value.lineno == 8
    assert str(exc_info.value).startswith("bad.qps: line 8: lower bound 5 above upper bound 1 on column 'x'")


_FUZZ_TOKENS = ('zz', '1e400', '-', 'nan', 'MARKER', 'N', 'E', 'UP', 'FR', 'x', 'obj', 'c1', '0', 'QUADOBJ', '*')


@pytest.mark.parametrize('seed', [s if s < 5 else pytest.param(s, marks=pytest.mark.slow) for s in range(100)])
def test_parser_is_total(seed):
    """ Random line and token mutations of a valid document, 100 per seed: a problem or a ParseError, nothing else """
    rng = np.random.default_rng(seed)
    lines = TINY_QPS.splitlines()
    for _ in range(100):
        mutated = list(lines)
        for _ in range(rng.integers(1, 4)):
            op = rng.integers(4)
            i = int(rng.integers(len(mutated)))
            if op == 0 and len(mutated) > 1:
                del mutated[i]
            elif op == 1:
                mutated.insert(i, mutated[int(rng.integers(len(mutated)))])
            elif op == 2:
                toks = mutated[i].split() or ['']
                toks[int(rng.integers(len(toks)))] = _FUZZ_TOKENS[int(rng.integers(len(_FUZZ_TOKENS)))]
                mutated[i] = (' ' if mutated[i][:1].isspace() else '') + ' '.join(toks)
            else:
                j = int(rng.integers(len(mutated)))
                mutated[i], mutated[j] = mutated[j], mutated[i]
        try:
            prob = read_qps('\n'.join(mutated))
        except ParseError:
            continue
        assert isinstance(prob, CcqpProblem)


def _write(path, text):
    with open(path, 'w') as f:
        f.write(text)


def test_hand_written_bundle(tmp_path):
    d = str(tmp_path / 'ident')
    os.makedirs(d)
    _write(os.path.join(d, 'A.mtx'), "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    _write(os.path.join(d, 'c.vec'), "1.0\n-2.0\n")
    _write(os.path.join(d, 'K.bounds'), "-inf 1.0\n0.0 inf\n")
    prob = read_matrix_bundle(d)
    assert prob.name == 'ident'
    np.testing.assert_array_equal(prob.A.toarray(), np.eye(2))
    assert prob.Q.is_zero
    np.testing.assert_array_equal(prob.K.l, [-np.inf, 0.])
    np.testing.assert_array_equal(prob.K.u, [1., np.inf])
    assert np.all(np.isinf(prob.phi.L)) and np.all(np.isinf(prob.phi.U))
    assert prob.obj_offset == 0.


def test_bundle_errors(tmp_path):
    d = str(tmp_path / 'bad')
    os.makedirs(d)
    _write(os.path.join(d, 'A.mtx'), "%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1.0\n")
    _write(os.path.join(d, 'c.vec'), "1.0\n")
    _write(os.path.join(d, 'K.bounds'), "0.0\n")
    with pytest.raises(MatrixMarketError) as exc_info:
        read_matrix_bundle(d)
    assert "expected 2 columns" in str(exc_info.value)

    _write(os.path.join(d, 'K.bounds'), "0.0 1.0\n")
    _write(os.path.join(d, 'x.bounds'), "0.0 1.0\n")
    _write(os.path.join(d, 'l1.lambda'), "1.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_bundle(d)


def test_bundle_round_trip(tmp_path):
    prob = gen_random_qp(5, 7, seed=4).replace(obj_offset=1.25)
    d = str(tmp_path / 'rqp')
    write_matrix_bundle(prob, d)
    back = read_matrix_bundle(d)
    assert (back.Q.matrix != prob.Q.matrix).nnz == 0
    assert (back.A != prob.A).nnz == 0
    for a, b in ((back.c, prob.c), (back.K.l, prob.K.l), (back.K.u, prob.K.u), (back.phi.L, prob.phi.L),
                 (back.phi.U, prob.phi.U)):
        np.testing.assert_array_equal(a, b)
    assert back.obj_offset == 1.25

    # an l1 problem rewritten in the same place drops the stale x.bounds and obj.offset
    l1 = CcqpProblem(sp.identity(2), sp.identity(2), np.array([1., 2.]), Box([0., 0.], [1., 1.]),
                     phi=WeightedL1(0.3))
    write_matrix_bundle(l1, d)
    assert not os.path.exists(os.path.join(d, 'x.bounds'))
    back = read_matrix_bundle(d)
    assert isinstance(back.phi, WeightedL1) and back.phi.lam == 0.3
    assert back.obj_offset == 0.


def test_matrix_free_bundle_is_refused(tmp_path):
    _, prob = gen_qap(3)
    with pytest.raises(ValueError):
        write_matrix_bundle(prob, str(tmp_path / 'qap'))


def _report():
    return KktReport(eta_gap=float('inf'), eta_p=1e-9, eta_d=2e-9, primal_obj=1.5, dual_obj=-float('inf'),
                     residual_norms=(1e-9, 2e-9, 0., 3e-9), status=OPTIMAL, iterations=120, restarts=3, sigma=0.7,
                     solve_seconds=0.25, setup_seconds=0.01)


def test_results_round_trip(tmp_path):
    path = str(tmp_path / 'res.json')
    trace = [TraceRecord(k=10, r=0, t=10, sigma=1., R_tilde=0.5),
             TraceRecord(k=20, r=1, t=3, sigma=0.5, R_tilde=0.25, eta_gap=1e-3, eta_p=1e-4, eta_d=1e-5, seconds=0.1)]
    json_path, csv_path = write_results(_report(), trace, path, name='inst')
    assert csv_path == trace_path_for(path) == str(tmp_path / 'res_trace.csv')

    report, name = read_results(json_path)
    assert name == 'inst'
    assert dict(report) == dict(_report())

    back = read_trace(csv_path)
    assert [rec.k for rec in back] == [10, 20]
    assert np.isnan(back[0].eta_p) and back[1].eta_d == 1e-5


def test_empty_trace(tmp_path):
    path = str(tmp_path / 'res.json')
    _, csv_path = write_results(_report(), [], path)
    with open(csv_path) as f:
        assert f.read().splitlines() == ['k,r,t,sigma,R_tilde,eta_gap,eta_p,eta_d,seconds']
    assert read_trace(csv_path) == []


def test_results_schema_version(tmp_path):
    path = tmp_path / 'res.json'
    path.write_text('{"schema_version": 99, "instance": null}')
    with pytest.raises(ParseError):
        read_results(str(path))


def test_load_problem(tmp_path):
    qps = tmp_path / 'tiny.qps'
    qps.write_text(TINY_QPS)
    assert load_problem(str(qps)).name == 'TINY'

    write_matrix_bundle(gen_random_qp(4, 5), str(tmp_path / 'bundle'))
    assert load_problem(str(tmp_path / 'bundle')).n == 4

    inst, _ = gen_qap(3, seed=2)
    write_qap_bundle(inst, str(tmp_path / 'qap'))
    prob = load_problem(str(tmp_path / 'qap'))
    assert (prob.n, prob.m, prob.Q.tag) == (9, 6, 'qap')
    assert isinstance(prob.phi, BoxIndicator)
