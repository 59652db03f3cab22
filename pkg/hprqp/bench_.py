"""
Benchmark aggregation: shifted geometric means, solved counts and absolute performance profiles over suites of runs,
and the suite runner feeding them.
"""
import csv
import logging
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from timeit import default_timer

try:
    from typing import Dict, Iterable, List, Optional, Sequence, Tuple
except ImportError:
    pass

import numpy as np
from autoclass import autoclass
from pyfields import field
from valid8 import validate
from valid8.validation_lib import gt

from hprqp.engine_ import SolverConfig
from hprqp.kkt_ import OPTIMAL, STATUSES
from hprqp.primal_ import DUAL, solve_variant
from hprqp.problem_ import CcqpProblem
from hprqp.utils import MetricNotPsd, NumericalBreakdown, ParseError, StructureError


_logger = logging.getLogger(__name__)

SGM_SHIFT = 10.
PROFILE_POINTS = 200
FAILED = 'Failed'
RECORD_COLUMNS = ('instance', 'solver', 'tol', 'status', 'iterations', 'seconds')
SUMMARY_COLUMNS = ('solver', 'tol', 'instances', 'solved', 'sgm_seconds', 'sgm_iterations')


class InstanceSetMismatch(ValueError):
    """ Raised when solvers compared in a profile were not run on the same instances """
    __slots__ = ('missing',)

    def __init__(self, missing):
        self.missing = missing
        super(InstanceSetMismatch, self).__init__(missing)

    def __str__(self):
        return "Solvers were run on different instance sets. Missing instances: %s" \
               % ", ".join("%s: %s" % (s, sorted(names)) for s, names in sorted(self.missing.items()))


def _is_record_status(s):
    return s in STATUSES or s == FAILED


@autoclass
class BenchRecord(object):
    """ The outcome of one solver run on one instance at one tolerance """
    instance = field(doc="Instance name")
    solver = field(default=DUAL, doc="Solver (variant) name")
    tol = field(default=1e-8, validators=gt(0., strict=True))
    status = field(default=OPTIMAL, validators={'status should be a solver status or Failed': _is_record_status})
    iterations = field(default=0, validators=gt(0))
    seconds = field(default=0., validators=gt(0.), doc="Solve time. Unsolved runs carry the time limit")

    @property
    def solved(self):
        # type: (...) -> bool
        return self.status == OPTIMAL

    def effective_seconds(self, time_limit):
        # type: (...) -> float
        """ The time used in aggregations: the time limit for unsolved runs """
        return self.seconds if self.solved else time_limit


def sgm(values,         # type: Iterable[float]
        shift=SGM_SHIFT  # type: float
        ):
    # type: (...) -> float
    """
    Shifted geometric mean (prod (t_i + shift))^(1/n) - shift, computed in log space.

    :param values: nonnegative values, at least one
    :param shift: the shift, 10 by default
    :return:
    """
    v = np.asarray(list(values), dtype=float)
    validate('values', v.size, min_value=1, help_msg="sgm needs at least one value")
    return float(np.exp(np.mean(np.log(v + shift))) - shift)


def group_records(records  # type: Iterable[BenchRecord]
                  ):
    # type: (...) -> Dict[Tuple[str, float], List[BenchRecord]]
    """ Groups records by (solver, tolerance), in order of first appearance """
    groups = OrderedDict()  # type: Dict[Tuple[str, float], List[BenchRecord]]
    for rec in records:
        groups.setdefault((rec.solver, rec.tol), []).append(rec)
    return groups


def perf_profile(records_by_solver,    # type: Dict[str, Sequence[BenchRecord]]
                 tau_grid=None,        # type: Optional[Sequence[float]]
                 time_limit=3600.      # type: float
                 ):
    # type: (...) -> Tuple[np.ndarray, Dict[str, np.ndarray]]
    """
    Absolute performance profiles: for each solver s, f_s(tau) is the fraction of instances solved within tau
    seconds. Unsolved runs never count.

    :param records_by_solver: the records of each solver, on the same instance set
    :param tau_grid: the times at which to evaluate the profiles. Defaults to 200 log-spaced points from 1 to
        time_limit.
    :param time_limit: the time limit of the runs
    :return: a tuple (tau_grid, {solver: fractions})
    :raises InstanceSetMismatch: if the solvers were not run on the same instances
    """
    names = {s: set(r.instance for r in recs) for s, recs in records_by_solver.items()}
    everything = set().union(*names.values()) if names else set()
    missing = {s: everything - ns for s, ns in names.items() if ns != everything}
    if missing:
        raise InstanceSetMismatch(missing)

    if tau_grid is None:
        tau_grid = np.logspace(0., np.log10(max(time_limit, 1.)), PROFILE_POINTS)
    tau = np.asarray(tau_grid, dtype=float)

    profiles = OrderedDict()
    for s, recs in records_by_solver.items():
        times = np.array([r.seconds for r in recs if r.solved])
        solved_within = (times[:, None] <= tau[None, :]).sum(axis=0) if times.size else np.zeros(tau.shape)
        profiles[s] = solved_within / float(len(recs)) if recs else np.zeros(tau.shape)
    return tau, profiles


@autoclass
class SummaryRow(object):
    """ The aggregates of one (solver, tolerance) group """
    solver = field()
    tol = field()
    instances = field(doc="Number of instances run")
    solved = field(doc="Number of instances solved to the tolerance")
    sgm_seconds = field(doc="SGM10 of the solve times, unsolved runs counted at the time limit")
    sgm_iterations = field(doc="SGM10 of the iteration counts")


def summarize(records,       # type: Iterable[BenchRecord]
              time_limit     # type: float
              ):
    # type: (...) -> List[SummaryRow]
    """ Returns the instance count, solved count, SGM10 of times and of iterations of each (solver, tolerance) """
    rows = []
    for (solver, tol), recs in group_records(records).items():
        rows.append(SummaryRow(solver=solver, tol=tol, instances=len(recs), solved=sum(r.solved for r in recs),
                               sgm_seconds=sgm(r.effective_seconds(time_limit) for r in recs),
                               sgm_iterations=sgm(r.iterations for r in recs)))
    return rows


def _csv_value(v):
    return repr(v) if isinstance(v, float) else v


def write_summary_csv(rows, path):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(SUMMARY_COLUMNS)
        for row in rows:
            writer.writerow([_csv_value(row[col]) for col in SUMMARY_COLUMNS])


def write_profile_csv(tau,          # type: np.ndarray
                      profiles,     # type: Dict[str, np.ndarray]
                      path          # type: str
                      ):
    """ Writes one 'tau' column and one column per solver, ready for plotting """
    solvers = list(profiles)
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(['tau'] + solvers)
        for i, t in enumerate(tau):
            writer.writerow([repr(float(t))] + [repr(float(profiles[s][i])) for s in solvers])


def write_records(records,  # type: Iterable[BenchRecord]
                  path      # type: str
                  ):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_COLUMNS)
        for rec in records:
            writer.writerow([_csv_value(rec[col]) for col in RECORD_COLUMNS])


def read_records(path  # type: str
                 ):
    # type: (...) -> List[BenchRecord]
    """
    Reads records written by `write_records`.

    :raises ParseError: on unexpected columns or values, with the line number
    """
    with open(path, newline='') as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != RECORD_COLUMNS:
            raise ParseError("unexpected record columns %r" % (reader.fieldnames, ), source=path)
        records = []
        for row in reader:
            try:
                records.append(BenchRecord(instance=row['instance'], solver=row['solver'], tol=float(row['tol']),
                                           status=row['status'], iterations=int(row['iterations']),
                                           seconds=float(row['seconds'])))
            except (ValueError, TypeError) as e:
                raise ParseError(str(e), lineno=reader.line_num, source=path)
        return records


def _configured(cfg, tol):
    # type: (SolverConfig, float) -> SolverConfig
    d = dict(cfg)
    d['tol'] = tol
    return SolverConfig.from_dict(d)


def _failed(name, variant, cfg):
    return BenchRecord(instance=name, solver=variant, tol=cfg.tol, status=FAILED, iterations=0,
                       seconds=cfg.time_limit)


def run_one(prob,       # type: CcqpProblem
            name,       # type: str
            variant,    # type: str
            cfg         # type: SolverConfig
            ):
    # type: (...) -> BenchRecord
    """
    Solves one instance and returns its record. Any exception raised by the run is recorded as a 'Failed' run, and
    unsolved runs carry the time limit: one instance never aborts a sweep.
    """
    start = default_timer()
    try:
        report = solve_variant(prob, cfg, variant=variant).report
    except (NumericalBreakdown, MetricNotPsd, StructureError) as e:
        _logger.warning("%s failed on %s at tol=%g: %s", variant, name, cfg.tol, e)
        return _failed(name, variant, cfg)
    except Exception as e:
        _logger.warning("%s failed on %s at tol=%g with an unexpected %s: %s", variant, name, cfg.tol,
                        type(e).__name__, e, exc_info=True)
        return _failed(name, variant, cfg)
    seconds = report.solve_seconds if report.status == OPTIMAL else cfg.time_limit
    _logger.info("%s on %s at tol=%g: %s, %d iterations, %.3fs", variant, name, cfg.tol, report.status,
                 report.iterations, default_timer() - start)
    return BenchRecord(instance=name, solver=variant, tol=cfg.tol, status=report.status,
                       iterations=report.iterations, seconds=seconds)


def instance_names(problems  # type: Sequence[CcqpProblem]
                   ):
    # type: (...) -> List[str]
    """ Problem names, made unique by suffixing the position of unnamed or repeated problems """
    names, seen = [], set()
    for i, p in enumerate(problems):
        name = p.name if p.name is not None and p.name not in seen else "%s#%d" % (p.name or 'instance', i)
        seen.add(name)
        names.append(name)
    return names


def run_suite(problems,         # type: Sequence[CcqpProblem]
              variants=(DUAL,), # type: Sequence[str]
              tols=(1e-8,),     # type: Sequence[float]
              cfg=None,         # type: SolverConfig
              jobs=1            # type: int
              ):
    # type: (...) -> List[BenchRecord]
    """
    Solves every problem with every variant at every tolerance. With jobs > 1 the runs are spread over a thread
    pool, each run owning its solver state. Records come back in (tolerance, variant, problem) order whatever the
    number of jobs.
    """
    validate('jobs', jobs, min_value=1)
    if cfg is None:
        cfg = SolverConfig()
    names = instance_names(problems)
    runs = [(prob, name, variant, _configured(cfg, tol))
            for tol in tols for variant in variants for prob, name in zip(problems, names)]
    if jobs == 1:
        return [run_one(*run) for run in runs]
    with ThreadPoolExecutor(max_workers=jobs) as executor:
        return list(executor.map(lambda run: run_one(*run), runs))
