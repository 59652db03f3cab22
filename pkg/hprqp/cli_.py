"""
Command-line front end:

    hprqp solve INPUT         solve one instance (QPS / MPS file, matrix bundle or QAP bundle directory)
    hprqp gen RECIPE          write the instances of a JSON recipe as bundles
    hprqp bench INPUT         solve a suite (directory of instances or JSON recipe) with several variants/tolerances
    hprqp report RECORDS...   aggregate record CSV files into summaries and performance profiles

Exit codes: 0 when solved (or when a suite completed), 2 when a limit was hit, 1 on error.
"""
import logging
import os
import sys
from argparse import ArgumentParser

try:
    from typing import List, Optional, Sequence, Tuple
except ImportError:
    pass

from hprqp.bench_ import FAILED, BenchRecord, group_records, perf_profile, read_records, \
    run_suite, summarize, write_profile_csv, write_records, write_summary_csv
from hprqp.engine_ import SolverConfig
from hprqp.generators_ import from_recipe, from_recipe_entry, gen_qap, recipe_arguments, recipe_entries
from hprqp.io_ import is_qap_bundle, load_problem, write_matrix_bundle, write_qap_bundle, write_results
from hprqp.kkt_ import OPTIMAL
from hprqp.primal_ import DUAL, VARIANTS, solve_variant
from hprqp.problem_ import CcqpProblem
from hprqp.utils import MetricNotPsd, NumericalBreakdown, ParseError


_logger = logging.getLogger(__name__)

ENV_OUT_DIR = 'HPRQP_OUT_DIR'
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_LIMIT = 2

PROBLEM_EXTENSIONS = ('.qps', '.mps')

# parse, structure and option validation errors are all ValueErrors
_USER_ERRORS = (ValueError, NumericalBreakdown, MetricNotPsd, OSError)


def _add_solver_options(p):
    p.add_argument('--tol', type=float, default=1e-8, help="Target of the relative KKT measures (default 1e-8)")
    p.add_argument('--time-limit', type=float, default=3600., help="Time limit per solve in seconds (default 3600)")
    p.add_argument('--max-iter', type=int, default=None, help="Iteration limit per solve")
    p.add_argument('--sigma0', type=float, default=None, help="Initial penalty (default ||b|| / ||c||)")
    p.add_argument('--no-scaling', action='store_true', help="Disable Ruiz and Pock-Chambolle preconditioning")
    p.add_argument('--seed', type=int, default=0, help="Seed of the power method")


def build_parser():
    # type: (...) -> ArgumentParser
    parser = ArgumentParser(prog='hprqp', description="Halpern Peaceman-Rachford solver for convex composite QPs")
    parser.add_argument('-v', '--verbose', action='store_true', help="Log at DEBUG level")
    sub = parser.add_subparsers(dest='command')
    sub.required = True

    p = sub.add_parser('solve', help="Solve one instance")
    p.add_argument('input', help="QPS / MPS file, matrix bundle or QAP bundle directory")
    _add_solver_options(p)
    p.add_argument('--variant', choices=VARIANTS, default=DUAL, help="Splitting to use (default dual)")
    p.add_argument('--out', default=None, help="Output directory (default $%s or the current directory)"
                                               % ENV_OUT_DIR)

    p = sub.add_parser('gen', help="Write the instances of a JSON recipe as bundles")
    p.add_argument('recipe', help="JSON recipe file with an 'instances' list")
    p.add_argument('--out', default=None, help="Output directory")

    p = sub.add_parser('bench', help="Solve a suite and aggregate the results")
    p.add_argument('input', help="Directory of instances or JSON recipe file")
    _add_solver_options(p)
    p.add_argument('--variants', nargs='+', choices=VARIANTS, default=[DUAL], help="Splittings to compare")
    p.add_argument('--tols', nargs='+', type=float, default=None, help="Tolerances to run (default: --tol)")
    p.add_argument('--jobs', type=int, default=1, help="Number of parallel solves")
    p.add_argument('--out', default=None, help="Output directory")

    p = sub.add_parser('report', help="Aggregate record CSV files")
    p.add_argument('records', nargs='+', help="Record CSV files written by 'bench'")
    p.add_argument('--time-limit', type=float, default=3600., help="Time limit of the runs (default 3600)")
    p.add_argument('--out', default=None, help="Output directory")
    return parser


def solver_config(args):
    # type: (...) -> SolverConfig
    options = dict(tol=args.tol, time_limit=args.time_limit, sigma0=args.sigma0, scaling=not args.no_scaling,
                   seed=args.seed)
    if args.max_iter is not None:
        options['max_iter'] = args.max_iter
    return SolverConfig(**options)


def out_dir(args):
    # type: (...) -> str
    path = args.out if args.out is not None else os.environ.get(ENV_OUT_DIR, os.curdir)
    if not os.path.isdir(path):
        os.makedirs(path)
    return path


def _is_problem_path(path):
    if os.path.isdir(path):
        return is_qap_bundle(path) or os.path.exists(os.path.join(path, 'A.mtx'))
    return os.path.splitext(path)[1].lower() in PROBLEM_EXTENSIONS


def load_suite(path  # type: str
               ):
    # type: (...) -> Tuple[List[CcqpProblem], List[str]]
    """
    Loads the problems of a recipe file, of a single instance, or of the instances of a directory. Instances of a
    directory that fail to load are logged and returned by name.

    :return: a tuple (problems, names of the instances that could not be loaded)
    """
    if not os.path.isdir(path) and path.lower().endswith('.json'):
        return from_recipe(path), []
    if _is_problem_path(path):
        return [load_problem(path)], []
    if not os.path.isdir(path):
        raise ParseError("unsupported instance format", source=path)

    problems, failed = [], []
    for entry in sorted(os.listdir(path)):
        full = os.path.join(path, entry)
        if not _is_problem_path(full):
            continue
        try:
            problems.append(load_problem(full))
        except (ParseError, ValueError, OSError) as e:
            _logger.warning("Skipping %s: %s", full, e)
            failed.append(os.path.splitext(entry)[0])
    return problems, failed


def print_summary(name, report, stream=None):
    """ One line: name, status, iterations, times, the three measures and the objective """
    print("%s: %s in %d iterations (%d restarts), %.3fs solve + %.3fs setup, eta_gap=%.2e eta_p=%.2e eta_d=%.2e "
          "obj=%.10g" % (name, report.status, report.iterations, report.restarts, report.solve_seconds,
                         report.setup_seconds, report.eta_gap, report.eta_p, report.eta_d, report.primal_obj),
          file=stream or sys.stdout)


def cmd_solve(args):
    # type: (...) -> int
    """ Solves one instance, writes <out>/<name>.json and <out>/<name>_trace.csv """
    cfg = solver_config(args)
    prob = load_problem(args.input)
    name = prob.name or os.path.splitext(os.path.basename(os.path.normpath(args.input)))[0]
    res = solve_variant(prob, cfg, variant=args.variant)
    json_path, _ = write_results(res.report, res.trace, os.path.join(out_dir(args), name + '.json'), name=name)
    print_summary(name, res.report)
    _logger.info("Results written to %s", json_path)
    return EXIT_OK if res.report.status == OPTIMAL else EXIT_LIMIT


def cmd_gen(args):
    # type: (...) -> int
    """ Writes each instance of the recipe in its own bundle directory under <out> """
    out = out_dir(args)
    for entry in recipe_entries(args.recipe):
        family, name, kwargs = recipe_arguments(entry)
        if family == 'qap':
            inst = gen_qap(**kwargs)[0]
            path = os.path.join(out, name or inst.name)
            write_qap_bundle(inst, path)
        else:
            prob = from_recipe_entry(entry, explicit=True)
            path = os.path.join(out, prob.name)
            write_matrix_bundle(prob, path)
        print(path)
    return EXIT_OK


def _write_aggregates(records, time_limit, out):
    """ Writes summary.csv and one profile CSV per tolerance, prints the summary """
    rows = summarize(records, time_limit)
    write_summary_csv(rows, os.path.join(out, 'summary.csv'))
    by_tol = {}
    for (solver, tol), recs in group_records(records).items():
        by_tol.setdefault(tol, {})[solver] = recs
    for tol, by_solver in sorted(by_tol.items()):
        tau, profiles = perf_profile(by_solver, time_limit=time_limit)
        write_profile_csv(tau, profiles, os.path.join(out, 'profile_tol%g.csv' % tol))

    print("%-10s %8s %10s %8s %14s %16s" % ('solver', 'tol', 'instances', 'solved', 'SGM10 seconds',
                                           'SGM10 iterations'))
    for row in rows:
        print("%-10s %8.0e %10d %8d %14.3f %16.1f" % (row.solver, row.tol, row.instances, row.solved,
                                                      row.sgm_seconds, row.sgm_iterations))


def cmd_bench(args):
    # type: (...) -> int
    """ Solves the suite with every variant at every tolerance and writes records, summary and profiles """
    cfg = solver_config(args)
    tols = args.tols if args.tols else [args.tol]
    problems, failed = load_suite(args.input)
    records = run_suite(problems, variants=args.variants, tols=tols, cfg=cfg, jobs=args.jobs)
    records += [BenchRecord(instance=name, solver=v, tol=tol, status=FAILED, iterations=0, seconds=args.time_limit)
                for tol in tols for v in args.variants for name in failed]
    out = out_dir(args)
    write_records(records, os.path.join(out, 'records.csv'))
    _write_aggregates(records, args.time_limit, out)
    return EXIT_OK


def cmd_report(args):
    # type: (...) -> int
    """ Aggregates previously written record files """
    records = []
    for path in args.records:
        records += read_records(path)
    _write_aggregates(records, args.time_limit, out_dir(args))
    return EXIT_OK


COMMANDS = {'solve': cmd_solve, 'gen': cmd_gen, 'bench': cmd_bench, 'report': cmd_report}


def main(argv=None  # type: Optional[Sequence[str]]
         ):
    # type: (...) -> int
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except _USER_ERRORS as e:
        print("hprqp %s: error: %s" % (args.command, e), file=sys.stderr)
        return EXIT_ERROR
