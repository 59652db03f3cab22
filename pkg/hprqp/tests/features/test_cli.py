import csv
import json
import os

import pytest

from hprqp import gen_random_qp, read_results, write_matrix_bundle
from hprqp.cli_ import ENV_OUT_DIR, EXIT_ERROR, EXIT_LIMIT, EXIT_OK, main

from .test_io import TINY_QPS


def _csv_rows(path):
    with open(path, newline='') as f:
        return list(csv.DictReader(f))


@pytest.fixture
def out(tmp_path, monkeypatch):
    path = tmp_path / 'out'
    monkeypatch.setenv(ENV_OUT_DIR, str(path))
    return path


def test_solve(tmp_path, out, capsys):
    qps = tmp_path / 'tiny.qps'
    qps.write_text(TINY_QPS)
    assert main(['solve', str(qps)]) == EXIT_OK
    assert "TINY: Optimal" in capsys.readouterr().out

    report, name = read_results(str(out / 'TINY.json'))
    assert name == 'TINY'
    assert report.primal_obj == pytest.approx(-0.25, abs=1e-7)
    assert (out / 'TINY_trace.csv').exists()


def test_solve_options(tmp_path, out):
    qps = tmp_path / 'tiny.qps'
    qps.write_text(TINY_QPS)
    other = tmp_path / 'other'
    assert main(['solve', str(qps), '--variant', 'primal2', '--no-scaling', '--tol', '1e-6', '--out',
                 str(other)]) == EXIT_OK
    with open(str(other / 'TINY.json')) as f:
        d = json.load(f)
    assert d['variant'] == 'primal2' and d['status'] == 'Optimal'
    assert not out.exists()


def test_solve_hits_time_limit(tmp_path, out):
    write_matrix_bundle(gen_random_qp(300, 600, density=0.05, seed=0), str(tmp_path / 'big'))
    assert main(['solve', str(tmp_path / 'big'), '--tol', '1e-14', '--time-limit', '0.001']) == EXIT_LIMIT
    with open(str(out / 'big.json')) as f:
        assert json.load(f)['status'] == 'TimeLimit'


def test_solve_malformed_file(tmp_path, out, capsys):
    qps = tmp_path / 'bad.qps'
    qps.write_text("ROWS\n N obj\nCOLUMNS\n    x obj abc\nENDATA\n")
    assert main(['solve', str(qps)]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "line 4" in err and "invalid number" in err


def test_solve_invalid_option(tmp_path, out, capsys):
    qps = tmp_path / 'tiny.qps'
    qps.write_text(TINY_QPS)
    assert main(['solve', str(qps), '--tol', '0']) == EXIT_ERROR
    assert "hprqp solve: error" in capsys.readouterr().err


def test_gen(tmp_path, out, capsys):
    recipe = tmp_path / 'recipe.json'
    recipe.write_text(json.dumps({'instances': [{'family': 'random_qp', 'n': 4, 'm': 6},
                                                {'family': 'lasso', 'p': 3, 'q': 5, 'name': 'las'},
                                                {'family': 'qap', 'd': 3}]}))
    assert main(['gen', str(recipe)]) == EXIT_OK
    assert sorted(os.listdir(str(out))) == ['las', 'qap_d3_s0', 'random_qp_n4_m6_s0']
    assert (out / 'las' / 'l1.lambda').exists() and (out / 'las' / 'obj.offset').exists()
    assert (out / 'qap_d3_s0' / 'B_hat.mtx').exists()
    assert len(capsys.readouterr().out.splitlines()) == 3


@pytest.mark.parametrize('command', ['gen', 'bench'])
def test_recipe_with_unknown_key(tmp_path, out, capsys, command):
    recipe = tmp_path / 'recipe.json'
    recipe.write_text(json.dumps({'instances': [{'family': 'random_qp', 'n': 4, 'm': 6, 'sede': 3}]}))
    assert main([command, str(recipe)]) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "hprqp %s: error" % command in err and "sede" in err
    assert "Traceback" not in err


def test_bench_and_report(tmp_path, out, capsys):
    suite = tmp_path / 'suite'
    for s in range(3):
        write_matrix_bundle(gen_random_qp(5, 8, seed=s), str(suite / ('rqp%d' % s)))
    (suite / 'README.txt').write_text("not an instance")

    assert main(['bench', str(suite), '--variants', 'dual', 'primal1', '--tols', '1e-4', '1e-6',
                 '--time-limit', '60', '--jobs', '2']) == EXIT_OK
    records = _csv_rows(str(out / 'records.csv'))
    assert len(records) == 12
    assert set(r['instance'] for r in records) == {'rqp0', 'rqp1', 'rqp2'}

    summary = _csv_rows(str(out / 'summary.csv'))
    groups = [(r['solver'], r['instances'], r['solved']) for r in summary]
    assert groups == [('dual', '3', '3'), ('primal1', '3', '3')] * 2
    for tol in ('0.0001', '1e-06'):
        profile = _csv_rows(str(out / ('profile_tol%s.csv' % tol)))
        assert len(profile) == 200 and set(profile[0]) == {'tau', 'dual', 'primal1'}
    assert "SGM10 seconds" in capsys.readouterr().out

    report_out = tmp_path / 'report'
    assert main(['report', str(out / 'records.csv'), '--time-limit', '60', '--out', str(report_out)]) == EXIT_OK
    assert _csv_rows(str(report_out / 'summary.csv')) == summary


def test_bench_records_unloadable_instances(tmp_path, out):
    suite = tmp_path / 'suite'
    suite.mkdir()
    (suite / 'good.qps').write_text(TINY_QPS)
    (suite / 'broken.qps').write_text("ROWS\n N obj\nCOLUMNS\n    x obj abc\nENDATA\n")
    assert main(['bench', str(suite), '--time-limit', '30']) == EXIT_OK
    records = {r['instance']: r for r in _csv_rows(str(out / 'records.csv'))}
    assert records['TINY']['status'] == 'Optimal'
    assert records['broken']['status'] == 'Failed' and float(records['broken']['seconds']) == 30.


def test_report_mismatched_instance_sets(tmp_path, out, capsys):
    (tmp_path / 'r.csv').write_text("instance,solver,tol,status,iterations,seconds\n"
                                    "a,dual,1e-08,Optimal,10,1.0\n"
                                    "b,dual,1e-08,Optimal,10,1.0\n"
                                    "a,primal1,1e-08,Optimal,10,1.0\n")
    assert main(['report', str(tmp_path / 'r.csv')]) == EXIT_ERROR
    assert "different instance sets" in capsys.readouterr().err
