from hprqp.utils import DimensionMismatch, NumericalBreakdown, MetricNotPsd, StructureError, ParseError, \
    finite_output, log_duration
from hprqp.problem_ import InvalidBounds, Box, support_box, CompositeTerm, BoxIndicator, WeightedL1, prox_phi, \
    conj_phi, PsdOperator, apply_Q, CcqpProblem
from hprqp.scaling_ import ScalingInfo, ruiz_equilibrate, pock_chambolle, scale_problem, unscale_solution
from hprqp.spectral_ import SpectralEstimates, power_method, estimate
from hprqp.kkt_ import OPTIMAL, TIME_LIMIT, ITER_LIMIT, KktReport, TraceRecord, kkt_residuals
from hprqp.engine_ import IterateBundle, SolverConfig, RestartDecision, RestartState, check_restart, \
    minimize_sigma_merit, m_norm_sq, inner_step, sigma_update, SolveResult, solve
from hprqp.primal_ import DUAL, PRIMAL1, PRIMAL2, VARIANTS, solve_primal_variant, solve_variant
from hprqp.generators_ import gen_random_qp, LassoInstance, lasso_instance, gen_lasso, lasso_objective, \
    lasso_native, lasso_to_cqp, split_lasso_solution, assignment_duals, QapInstance, qap_from_matrices, gen_qap, \
    from_recipe
from hprqp.io_ import QpsParseError, MatrixMarketError, read_qps, read_qps_file, read_matrix_bundle, \
    write_matrix_bundle, read_qap_bundle, write_results, read_results, load_problem
from hprqp.bench_ import BenchRecord, InstanceSetMismatch, sgm, perf_profile, summarize, run_suite

try:
    # Distribution mode : import from _version.py generated by setuptools_scm during release
    from ._version import version as __version__
except ImportError:
    # Source mode : use setuptools_scm to get the current version from src using git
    from setuptools_scm import get_version as _gv
    from os import path as _path
    __version__ = _gv(_path.join(_path.dirname(__file__), _path.pardir))

__all__ = [
    '__version__',
    # submodules
    'utils', 'problem_', 'scaling_', 'spectral_', 'kkt_', 'engine_', 'primal_', 'generators_', 'io_', 'bench_', 'cli_',
    # symbols
    'DimensionMismatch', 'NumericalBreakdown', 'MetricNotPsd', 'StructureError', 'ParseError', 'finite_output',
    'log_duration',
    'InvalidBounds', 'Box', 'support_box', 'CompositeTerm', 'BoxIndicator', 'WeightedL1', 'prox_phi', 'conj_phi',
    'PsdOperator', 'apply_Q', 'CcqpProblem',
    'ScalingInfo', 'ruiz_equilibrate', 'pock_chambolle', 'scale_problem', 'unscale_solution',
    'SpectralEstimates', 'power_method', 'estimate',
    'OPTIMAL', 'TIME_LIMIT', 'ITER_LIMIT', 'KktReport', 'TraceRecord', 'kkt_residuals',
    'IterateBundle', 'SolverConfig', 'RestartDecision', 'RestartState', 'check_restart', 'minimize_sigma_merit',
    'm_norm_sq', 'inner_step', 'sigma_update', 'SolveResult', 'solve',
    'DUAL', 'PRIMAL1', 'PRIMAL2', 'VARIANTS', 'solve_primal_variant', 'solve_variant',
    'gen_random_qp', 'LassoInstance', 'lasso_instance', 'gen_lasso', 'lasso_objective', 'lasso_native',
    'lasso_to_cqp', 'split_lasso_solution', 'assignment_duals', 'QapInstance', 'qap_from_matrices', 'gen_qap',
    'from_recipe',
    'QpsParseError', 'MatrixMarketError', 'read_qps', 'read_qps_file', 'read_matrix_bundle', 'write_matrix_bundle',
    'read_qap_bundle', 'write_results', 'read_results', 'load_problem',
    'BenchRecord', 'InstanceSetMismatch', 'sgm', 'perf_profile', 'summarize', 'run_suite',
]
