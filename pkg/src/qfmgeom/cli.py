"""``qfmgeom run <config.json>``: configuration-driven experiment runner.

Jobs run sequentially in the configured order.  A failed job prints one line
to stderr,

    ERROR code=<CODE> job=<job> map=<name> msg=<text>

and the run continues with the next job.  The exit status is 0 when every job
succeeded, 1 when the worst failure was a validation error, 2 when it was a
numerical failure.
"""

from __future__ import annotations

import argparse
import functools
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .config import FRAMES, ConfigError, ExperimentConfig, NearestTarget, load_config
from .feature_map import (FeatureMapSpec, SpecError, is_commutative, range_warnings,
                          validity_problems)
from .geometry import (DegeneratePlaneError, EmptyFrameError, SpanError, curvature_report,
                       nearest_on_geodesic)
from .linalg import BranchCutError, EigenError, expm_skew, su_distances
from .manifold import Grid, ManifoldError, grid_points, pairwise_matrix, pulled_lengths_batch, upper_pairs
from .output import fmt, write_curvature_csv, write_matrix_csv, write_pgm
from .pauli import QubitMismatchError

log = logging.getLogger("qfmgeom")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
FLAT_TOL = 1e-10
ZERO_KAPPA_TOL = 1e-8

# Ordered: the first matching class decides.  A domain violation means the
# configured grid leaves the domain of some f_k, which is an input problem.
_ERRORS = (
    (ConfigError, EXIT_VALIDATION, "CONFIG_INVALID"),
    (SpecError, EXIT_VALIDATION, "SPEC_INVALID"),
    (QubitMismatchError, EXIT_VALIDATION, "QUBIT_MISMATCH"),
    (ManifoldError, EXIT_VALIDATION, "MANIFOLD_INVALID"),
    (ex.ExprSyntaxError, EXIT_VALIDATION, "EXPR_SYNTAX"),
    (ex.UndeclaredVariableError, EXIT_VALIDATION, "EXPR_UNDECLARED"),
    (ex.ExprDomainError, EXIT_VALIDATION, "DOMAIN_ERROR"),
    (OSError, EXIT_VALIDATION, "IO_ERROR"),
    (EigenError, EXIT_NUMERICAL, "EIGEN_NO_CONVERGENCE"),
    (BranchCutError, EXIT_NUMERICAL, "BRANCH_CUT"),
    (DegeneratePlaneError, EXIT_NUMERICAL, "DEGENERATE_PLANE"),
    (EmptyFrameError, EXIT_NUMERICAL, "EMPTY_FRAME"),
    (SpanError, EXIT_NUMERICAL, "SPAN_ERROR"),
    (ArithmeticError, EXIT_NUMERICAL, "NUMERICAL_ERROR"),
    (ValueError, EXIT_VALIDATION, "INVALID_INPUT"),
)


def classify(err: BaseException) -> tuple[int, str]:
    for cls, status, code in _ERRORS:
        if isinstance(err, cls):
            return status, code
    raise err


def error_line(code: str, job: str, name: str, msg: str) -> str:
    return f"ERROR code={code} job={job} map={name} msg={' '.join(str(msg).split())}"


# -- parallel helpers --------------------------------------------------------

def _chunks(n: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, n))
    edges = np.linspace(0, n, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _pulled_chunk(spec, manifold, segments, order, p1s, p2s, bounds):
    a, b = bounds
    return pulled_lengths_batch(spec, manifold, p1s[a:b], p2s[a:b], segments, order)


def _su_chunk(unitaries, i, j, bounds):
    a, b = bounds
    return su_distances(unitaries[i[a:b]], unitaries[j[a:b]], strict=False)


def _curvature_chunk(spec, kind, order, points, bounds):
    a, b = bounds
    return [curvature_report(spec, p, kind, order) for p in points[a:b]]


def curvature_sweep(spec: FeatureMapSpec, points: np.ndarray, kind: str, order: int,
                    workers: int = 1) -> list:
    fn = functools.partial(_curvature_chunk, spec, kind, order, points)
    parts = _pmap(fn, _chunks(len(points), workers), workers)
    return [r for part in parts for r in part]


def pulled_matrix(spec: FeatureMapSpec, cfg: ExperimentConfig, grid: Grid) -> np.ndarray:
    i, j = upper_pairs(len(grid))
    p1s, p2s = grid.points[i], grid.points[j]
    fn = functools.partial(_pulled_chunk, spec, cfg.manifold, cfg.segments, cfg.order, p1s, p2s)
    parts = _pmap(fn, _chunks(len(i), cfg.workers), cfg.workers)
    return pairwise_matrix(len(grid), np.concatenate(parts))


def su_matrix(spec: FeatureMapSpec, grid: Grid, workers: int = 1) -> np.ndarray:
    unitaries = spec.compiled.unitaries(grid.points)
    i, j = upper_pairs(len(grid))
    fn = functools.partial(_su_chunk, unitaries, i, j)
    parts = _pmap(fn, _chunks(len(i), workers), workers)
    return pairwise_matrix(len(grid), np.concatenate(parts))


def frame_labels(spec: FeatureMapSpec, kind: str) -> tuple[str, ...]:
    if kind == "coordinate":
        return tuple(spec.coords)
    return tuple(s.label for s in spec.closure)


# -- jobs ----------------------------------------------------------------------

class Runner:
    def __init__(self, cfg: ExperimentConfig, stdout=None, stderr=None):
        self.cfg = cfg
        self.stdout = stdout or sys.stdout
        self.stderr = stderr or sys.stderr
        self.grid = grid_points(cfg.manifold)
        self.status = EXIT_OK

    def say(self, line: str) -> None:
        print(line, file=self.stdout)

    def write(self, name: str, text: str) -> Path:
        path = self.cfg.out / name
        path.write_text(text)
        return path

    def fail(self, job: str, name: str, err: BaseException) -> None:
        status, code = classify(err)
        print(error_line(code, job, name, str(err)), file=self.stderr)
        self.status = max(self.status, status)

    def run(self) -> int:
        self.cfg.out.mkdir(parents=True, exist_ok=True)
        for job in self.cfg.jobs:
            if job == "distances":
                self._guard(job, "-", self.base_distances)
            if job == "report":
                self._guard(job, "-", self.report)
                continue
            for name, spec in self.cfg.feature_maps.items():
                self._guard(job, name, getattr(self, f"job_{job}"), name, spec)
        return self.status

    def _guard(self, job: str, name: str, fn: Callable, *args) -> None:
        try:
            if args:
                spec = args[1]
                if job != "validate":
                    problems = validity_problems(spec)
                    if problems:
                        raise SpecError("; ".join(problems))
            fn(*args)
        except Exception as err:  # classify() re-raises anything unexpected
            self.fail(job, name, err)

    # validate ---------------------------------------------------------------

    def job_validate(self, name: str, spec: FeatureMapSpec) -> None:
        problems = validity_problems(spec)
        comm = is_commutative(spec)
        warnings = range_warnings(spec, self.grid.points) if not problems else []
        lines = [f"map: {name}", f"qubits: {spec.n_qubits}", f"coords: {' '.join(spec.coords)}",
                 f"terms: {len(spec.pairs)}"]
        lines += [f"problem: {p}" for p in problems]
        lines.append(f"assumption_checks: {'FAIL' if problems else 'PASS'}")
        lines += [f"range_warning: {w}" for w in warnings]
        lines += [f"commutative: {str(comm).lower()}", f"dequantizable: {str(comm).lower()}"]
        path = self.write(f"validate_{name}.txt", "\n".join(lines) + "\n")
        if problems:
            raise SpecError("; ".join(problems))
        self.say(f"validate {name}: PASS commutative={str(comm).lower()} "
                 f"dequantizable={str(comm).lower()} -> {path.name}")

    # closure ----------------------------------------------------------------

    def closure_lines(self, name: str, spec: FeatureMapSpec) -> list[str]:
        strings = spec.closure
        lines = [f"size: {len(strings)}", f"strings: {' '.join(s.label for s in strings)}"]
        expected = self.cfg.expected_closure.get(name)
        if expected is not None:
            got, want = set(strings), set(expected)
            lines.append(f"expected_size: {len(want)}")
            lines.append(f"size_check: {'PASS' if len(got) == len(want) else 'FAIL'}")
            if got == want:
                lines.append("set_check: PASS")
            else:
                lines.append("set_check: DIFF")
                missing = sorted(want - got)
                extra = sorted(got - want)
                lines.append(f"DIFF expected_not_derived: {' '.join(s.label for s in missing) or '-'}")
                lines.append(f"DIFF derived_not_expected: {' '.join(s.label for s in extra) or '-'}")
        return lines

    def job_closure(self, name: str, spec: FeatureMapSpec) -> None:
        lines = self.closure_lines(name, spec)
        path = self.write(f"closure_{name}.txt", "\n".join([f"map: {name}"] + lines) + "\n")
        summary = " ".join(l for l in lines if l.startswith(("size", "set_check")))
        self.say(f"closure {name}: {summary} -> {path.name}")

    # distances --------------------------------------------------------------

    def base_distances(self) -> None:
        d = self.cfg.manifold.distance_matrix(self.grid.points)
        write_matrix_csv(self.cfg.out / "distances_base.csv", self.grid.labels, d)
        write_pgm(self.cfg.out / "heatmap_base.pgm", d, comment="base distance")
        self.say(f"distances base: {len(self.grid)} points -> distances_base.csv heatmap_base.pgm")

    def job_distances(self, name: str, spec: FeatureMapSpec) -> None:
        pulled = pulled_matrix(spec, self.cfg, self.grid)
        if not np.all(np.isfinite(pulled)):
            raise ArithmeticError("non-finite pulled-back length")
        su = su_matrix(spec, self.grid, self.cfg.workers)
        out = self.cfg.out
        write_matrix_csv(out / f"distances_{name}_pulled.csv", self.grid.labels, pulled)
        write_matrix_csv(out / f"distances_{name}_su.csv", self.grid.labels, su)
        write_pgm(out / f"heatmap_{name}_pulled.pgm", pulled, comment=f"{name} pulled-back length")
        write_pgm(out / f"heatmap_{name}_su.pgm", su, comment=f"{name} SU distance")
        cut = int(np.isnan(su).sum() // 2)
        self.say(f"distances {name}: pulled max={fmt(pulled.max())} su_branch_cut_pairs={cut} "
                 f"-> distances_{name}_pulled.csv distances_{name}_su.csv")

    # curvature --------------------------------------------------------------

    def job_curvature(self, name: str, spec: FeatureMapSpec) -> None:
        kind = self.cfg.frame
        reports = curvature_sweep(spec, self.grid.points, kind, self.cfg.order, self.cfg.workers)
        fname = f"curvature_{name}_{kind}.csv"
        write_curvature_csv(self.cfg.out / fname, spec.coords, frame_labels(spec, kind), reports)
        kappas = [k for r in reports for k in r.sectional.values()]
        lo, hi = (min(kappas), max(kappas)) if kappas else (math.nan, math.nan)
        self.say(f"curvature {name}: frame={kind} order={self.cfg.order} "
                 f"kappa_min={fmt(lo)} kappa_max={fmt(hi)} -> {fname}")

    # nearest ----------------------------------------------------------------

    def job_nearest(self, name: str, spec: FeatureMapSpec) -> None:
        nc = self.cfg.nearest
        if nc.maps is not None and name not in nc.maps:
            return
        m = self.cfg.manifold
        p1, p2 = nc.path
        path = functools.partial(m.geodesic, p1, p2)
        rows = ["target,t0,t_star,d_star,skipped"]
        for k, target in enumerate(nc.targets):
            u, t0 = self._target_unitary(spec, target, path)
            res = nearest_on_geodesic(spec, path, u, samples=nc.samples)
            rows.append(f"{k},{fmt(t0)},{fmt(res.t)},{fmt(res.distance)},{len(res.skipped)}")
        fname = f"nearest_{name}.csv"
        self.write(fname, "\n".join(rows) + "\n")
        self.say(f"nearest {name}: {len(nc.targets)} targets -> {fname}")

    @staticmethod
    def _target_unitary(spec: FeatureMapSpec, target: NearestTarget, path):
        if target.t is not None:
            return spec.compiled.unitaries(np.asarray(path(target.t))[None])[0], target.t
        if target.op.n_qubits != spec.n_qubits:
            raise QubitMismatchError(f"target acts on {target.op.n_qubits} qubits, "
                                     f"map on {spec.n_qubits}")
        return expm_skew(target.op), math.nan

    # report -----------------------------------------------------------------

    def report(self) -> None:
        cfg = self.cfg
        lines = ["curvature summary",
                 f"manifold: {cfg.manifold.kind} bounds={list(cfg.manifold.bounds)} "
                 f"step={cfg.manifold.step} points={len(self.grid)}",
                 f"order: {cfg.order}", ""]
        for name, spec in cfg.feature_maps.items():
            problems = validity_problems(spec)
            if problems:
                raise SpecError(f"{name}: " + "; ".join(problems))
            lines += self._report_map(name, spec) + [""]
        self.write("report.txt", "\n".join(lines))
        self.say("report: -> report.txt")

    def _report_map(self, name: str, spec: FeatureMapSpec) -> list[str]:
        cfg = self.cfg
        comm = is_commutative(spec)
        lines = [f"[{name}]", f"commutative: {str(comm).lower()}",
                 f"dequantizable: {str(comm).lower()}"]
        lines += ["closure " + l for l in self.closure_lines(name, spec)]
        if comm:
            worst = {}
            for kind in FRAMES:
                reps = curvature_sweep(spec, self.grid.points, kind, cfg.order, cfg.workers)
                worst[kind] = max((abs(k) for r in reps for k in r.sectional.values()), default=0.0)
            flat = all(v <= FLAT_TOL for v in worst.values())
            lines.append("flatness: max |kappa| " +
                         " ".join(f"{k}={fmt(v)}" for k, v in worst.items()))
            lines.append(f"flatness_verdict: {'PASS' if flat else 'FAIL'} "
                         f"(flat, kappa = 0 within {FLAT_TOL:g})")
            return lines

        for q in sorted({0, cfg.order}):
            reps = curvature_sweep(spec, self.grid.points, "coordinate", q, cfg.workers)
            kappas = np.array([k for r in reps for k in r.sectional.values()])
            lo, hi = float(kappas.min()), float(kappas.max())
            ratio = hi / lo if lo > 0 else math.inf
            ok = lo > 0 and ratio > 1.5
            lines.append(f"positivity Q={q}: kappa_min={fmt(lo)} kappa_max={fmt(hi)} "
                         f"ratio={fmt(ratio)} verdict={'PASS' if ok else 'FAIL'}")

        if cfg.report.map in (None, name):
            lines += self._reference_table(spec)
        return lines

    def _reference_table(self, spec: FeatureMapSpec) -> list[str]:
        rc = self.cfg.report
        names = tuple(f"p{i + 1}" for i in range(spec.m))
        ref = ex.parse(rc.reference, names) if rc.reference else None
        header = "point," + ",".join(f"Q={q}" for q in rc.orders)
        if ref is not None:
            header += ",reference"
        lines = ["coordinate-frame sectional curvature at sample points (informational)",
                 f"reference: {rc.reference}" if ref is not None else "reference: none", header]
        for p in rc.points:
            row = [":".join(fmt(v) for v in p)]
            for q in rc.orders:
                rep = curvature_report(spec, p, "coordinate", q)
                row.append(fmt(next(iter(rep.sectional.values()), math.nan)))
            if ref is not None:
                row.append(fmt(ex.evaluate(ref, dict(zip(names, p)))))
            lines.append(",".join(row))
        lines.append(f"lie-basis zero planes (|kappa| < {ZERO_KAPPA_TOL:g}) at order {self.cfg.order}:")
        for p in rc.points:
            rep = curvature_report(spec, p, "lie-basis", self.cfg.order)
            zeros = sorted(f"{a}-{b}" for (a, b), k in rep.sectional.items()
                           if abs(k) < ZERO_KAPPA_TOL)
            lines.append(f"  {':'.join(fmt(v) for v in p)}: {len(zeros)}/{len(rep.sectional)} "
                         f"{' '.join(zeros)}")
        return lines


# -- entry point ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qfmgeom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the jobs of an experiment config")
    run.add_argument("config", type=Path)
    run.add_argument("--order", type=int, help="tangent-series truncation order Q (0..12)")
    run.add_argument("--frame", choices=FRAMES)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", type=Path, help="output directory")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def run_config(cfg: ExperimentConfig, stdout=None, stderr=None) -> int:
    return Runner(cfg, stdout, stderr).run()


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config).with_overrides(
            order=args.order, frame=args.frame, workers=args.workers, out=args.out)
    except Exception as err:
        status, code = classify(err)
        print(error_line(code, "config", "-", str(err)), file=sys.stderr)
        return status
    return run_config(cfg)


if __name__ == "__main__":
    sys.exit(main())
