import json

import numpy as np
import pytest

from hprqp import InvalidBounds, Box, PsdOperator, CcqpProblem, QpsParseError, from_recipe, read_qps


def test_readme_usage_invalid_bounds():
    with pytest.raises(InvalidBounds) as exc_info:
        Box([0., 2., 0.], [1., 1., 1.])
    assert exc_info.value.index == 1
    assert isinstance(exc_info.value, ValueError)


def test_readme_usage_matrix_free():
    Q = PsdOperator.matrix_free(lambda v: 2. * v, 3, tag='twice')
    prob = CcqpProblem(Q, np.zeros((0, 3)), np.ones(3), Box(np.zeros(0), np.zeros(0)))
    assert not prob.Q.is_explicit
    np.testing.assert_array_equal(prob.Q(np.ones(3)), [2., 2., 2.])
    # phi=None means free variables
    assert np.all(np.isinf(prob.phi.L))


def test_readme_usage_qps_error():
    with pytest.raises(QpsParseError) as exc_info:
        read_qps("ROWS\n N obj\nCOLUMNS\n    x obj 1.0\n", source='p.qps')
    assert str(exc_info.value).startswith("p.qps: line 4: ")


def test_readme_usage_recipe():
    recipe = json.loads("""
{"instances": [{"family": "random_qp", "n": 200, "m": 400, "seed": 1},
               {"family": "lasso", "p": 100, "q": 1000, "name": "lasso_small"},
               {"family": "lasso_cqp", "p": 100, "q": 1000},
               {"family": "qap", "d": 10}]}
""")
    problems = from_recipe(recipe)
    assert [(p.n, p.m) for p in problems] == [(200, 400), (1000, 0), (2100, 2100), (100, 20)]
    assert problems[1].name == 'lasso_small'
