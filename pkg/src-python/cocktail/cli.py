"""Command-line front-end: solve, certify, bench and gen.

Exit codes: 0 converged / certified, 1 input error, 2 iteration cap,
3 certificate failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

from .bench import BenchmarkSpec, run_benchmark
from .design_space import DesignSpace, build_space, load_csv, save_csv
from .errors import DegenerateStart, DesignError
from .result_io import declared_dimension, load_weights_file, write_result_json, write_trace_csv
from .solver import (
    ALGORITHMS,
    STATUS_CONVERGED,
    STATUS_ITERATION_CAP,
    SolverConfig,
    certify,
    cluster_support,
    solve,
)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ITERATION_CAP = 2
EXIT_NOT_OPTIMAL = 3


class _ArgumentParser(argparse.ArgumentParser):
    """Report usage errors as coded exceptions instead of exiting with status 2."""

    def error(self, message):
        raise DesignError('usage', message)


def _print_json(payload: dict):
    print(json.dumps(payload, ensure_ascii=False))


def _simplify_error(err: object) -> str:
    if isinstance(err, DesignError):
        return err.code
    return 'internal'


def _stage_callback(stage: str):
    print(f'[STAGE] {stage}', flush=True)


def _parse_csv_list(raw: Optional[str], cast=str) -> List:
    if raw is None:
        return []
    items = [item.strip() for item in str(raw).split(',') if item.strip()]
    try:
        return [cast(item) for item in items]
    except ValueError:
        raise DesignError('usage', f'cannot parse list {raw!r}')


def _resolve_space(args) -> DesignSpace:
    """``--space x1 --n 100`` for builtins, ``--space csv:path`` or a .csv path for files."""
    spec = str(args.space or '').strip()
    if spec.lower().startswith('csv:'):
        return load_csv(spec[4:], has_header=bool(args.header))
    if spec.lower().endswith('.csv') or os.path.sep in spec:
        return load_csv(spec, has_header=bool(args.header))
    if args.n is None:
        raise DesignError('usage', f'--n is required for builtin space {spec!r}')
    return build_space(spec, args.n)


def _add_space_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--space', required=True, help='Builtin family (x1, x2, x3, x4) or csv:<path>')
    parser.add_argument('--n', '--k', dest='n', type=int, help='Size of a builtin space (k for x4)')
    parser.add_argument('--header', action='store_true', help='CSV space file has a header row')


def _parse_args(argv: Optional[Sequence[str]]):
    parser = _ArgumentParser(
        prog='cocktail',
        description='D-optimal approximate designs on finite design spaces.',
    )
    sub = parser.add_subparsers(dest='command', required=True)

    solve_parser = sub.add_parser('solve', help='Compute a D-optimal design')
    _add_space_arguments(solve_parser)
    solve_parser.add_argument('--algorithm', default='cocktail', choices=list(ALGORITHMS))
    solve_parser.add_argument('--epsilon', type=float, default=1e-6)
    solve_parser.add_argument('--max-iter', type=int, default=10000)
    solve_parser.add_argument('--seed', type=int, default=0)
    solve_parser.add_argument('--init', choices=['uniform', 'random-support'])
    solve_parser.add_argument('--support-target', type=int, help='Random-support size (default 2m)')
    solve_parser.add_argument('--start', help='Starting weights JSON (overrides --init)')
    solve_parser.add_argument('--out', help='Result JSON path')
    solve_parser.add_argument('--trace', help='Trace CSV path (default: <out>.trace.csv)')
    solve_parser.add_argument('--cluster-radius', type=float, help='Print support clusters within this L1 radius')
    solve_parser.add_argument(
        '--cluster-local-factor',
        type=float,
        help='Print support clusters using a radius scaled by the local candidate spacing',
    )

    certify_parser = sub.add_parser('certify', help='Check a design against the equivalence theorem')
    _add_space_arguments(certify_parser)
    certify_parser.add_argument('--weights', required=True, help='Result or weights JSON')
    certify_parser.add_argument('--epsilon', type=float, default=1e-6)

    bench_parser = sub.add_parser('bench', help='Reproduce a benchmark table')
    bench_parser.add_argument('--family', required=True, help='x1, x2, x3 or x4')
    bench_parser.add_argument('--sizes', required=True, help='Comma-separated sizes (k for x4)')
    bench_parser.add_argument('--algorithms', default='ma,vem,cocktail')
    bench_parser.add_argument('--replications', type=int, default=3)
    bench_parser.add_argument('--epsilon', type=float, default=1e-6)
    bench_parser.add_argument('--seed-base', type=int, default=0)
    bench_parser.add_argument('--max-iter', type=int, default=10000)
    bench_parser.add_argument('--budget', type=float, help='Per-cell time budget in seconds')
    bench_parser.add_argument('--workers', type=int, help='Parallel cells (default COCKTAIL_BENCH_WORKERS)')
    bench_parser.add_argument('--out-csv', help='Table CSV path')
    bench_parser.add_argument('--out-text', help='Aligned text table path')

    gen_parser = sub.add_parser('gen', help='Write a builtin space to CSV')
    gen_parser.add_argument('--space', required=True, help='x1, x2, x3 or x4')
    gen_parser.add_argument('--n', '--k', dest='n', type=int, required=True)
    gen_parser.add_argument('--out', required=True)
    gen_parser.add_argument('--header', action='store_true', help='Write a c1..cm header row')

    return parser.parse_args(list(argv) if argv is not None else None)


def _print_support(space: DesignSpace, result) -> None:
    print(f'{"index":>7}  {"weight":>12}  {"label":<24}  point')
    for item in result.support:
        point = ', '.join(f'{v:.6g}' for v in item.point)
        print(f'{item.index + 1:>7}  {item.weight:>12.8f}  {space.label(item.index):<24}  ({point})')


def _trace_path(args) -> Optional[str]:
    """--trace, or <out>.trace.csv next to --out."""
    if args.trace:
        return args.trace
    if args.out:
        return f'{os.path.splitext(args.out)[0]}.trace.csv'
    return None


def cmd_solve(args) -> int:
    space = _resolve_space(args)
    config = SolverConfig(
        algorithm=args.algorithm,
        epsilon=args.epsilon,
        max_iterations=args.max_iter,
        init=args.init,
        rng_seed=args.seed,
        support_target=args.support_target,
    )
    initial_weights = load_weights_file(args.start, space.n) if args.start else None
    trace_path = _trace_path(args)
    try:
        result = solve(space, config, initial_weights=initial_weights)
    except DegenerateStart as e:
        if trace_path and e.trace is not None:
            write_trace_csv(e.trace, trace_path)
            print(f'[WARN] degenerate start; wrote {e.trace.status} trace to {trace_path}')
        raise

    print(
        f'[INFO] {space.source}: {config.algorithm} {result.status} after '
        f'{result.iterations} iterations ({result.trace.seconds:.3f}s)'
    )
    _print_support(space, result)
    print(f'[INFO] phi={result.log_det:.12g} certificate={result.certificate:.12g}')

    if args.cluster_radius is not None or args.cluster_local_factor is not None:
        clusters = cluster_support(
            result, radius=args.cluster_radius, local_factor=args.cluster_local_factor
        )
        for cluster in clusters:
            members = ','.join(str(i + 1) for i in cluster.indices)
            centroid = ', '.join(f'{v:.6g}' for v in cluster.centroid)
            print(f'[INFO] cluster {{{members}}} weight={cluster.weight:.8f} centroid=({centroid})')

    if args.out:
        write_result_json(result, args.out)
        print(f'[INFO] wrote {args.out} and {trace_path}')
    if trace_path:
        write_trace_csv(result.trace, trace_path)

    if result.status == STATUS_CONVERGED:
        return EXIT_OK
    if result.status == STATUS_ITERATION_CAP:
        return EXIT_ITERATION_CAP
    return EXIT_INPUT_ERROR


def cmd_certify(args) -> int:
    space = _resolve_space(args)
    declared_m = declared_dimension(args.weights)
    if declared_m is not None and declared_m != space.dim_m:
        raise DesignError('dimension-mismatch', f'weights file has m={declared_m}, space has m={space.dim_m}')
    weights = load_weights_file(args.weights, space.n)
    report = certify(space, weights, epsilon=args.epsilon)
    print(
        f'[INFO] {space.source}: max d/m = {report.max_ratio:.12g} at index {report.argmax + 1}, '
        f'phi={report.log_det:.12g}, D-efficiency >= {report.efficiency_lower_bound:.9f}'
    )
    _print_json({'status': 'optimal' if report.optimal else 'not-optimal', **report.to_dict()})
    return EXIT_OK if report.optimal else EXIT_NOT_OPTIMAL


def cmd_bench(args) -> int:
    spec = BenchmarkSpec(
        family=args.family,
        sizes=tuple(_parse_csv_list(args.sizes, int)),
        algorithms=tuple(_parse_csv_list(args.algorithms)),
        replications=args.replications,
        epsilon=args.epsilon,
        seed_base=args.seed_base,
        max_iterations=args.max_iter,
        cell_budget_seconds=args.budget,
    )
    table = run_benchmark(spec, workers=args.workers, stage_callback=_stage_callback)
    print(table.to_text(), end='')
    if args.out_csv:
        table.write_csv(args.out_csv)
    if args.out_text:
        table.write_text(args.out_text)
    return EXIT_OK


def cmd_gen(args) -> int:
    space = build_space(args.space, args.n)
    save_csv(space, args.out, header=bool(args.header))
    print(f'[INFO] wrote {space.n} x {space.dim_m} space {space.source} to {args.out}')
    return EXIT_OK


COMMANDS = {
    'solve': cmd_solve,
    'certify': cmd_certify,
    'bench': cmd_bench,
    'gen': cmd_gen,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = _parse_args(argv)
        return COMMANDS[args.command](args)
    except DesignError as e:
        _print_json({'status': 'failed', 'error': _simplify_error(e), 'detail': e.detail})
        return EXIT_INPUT_ERROR
    except Exception as e:
        _print_json({'status': 'failed', 'error': 'internal', 'detail': repr(e)})
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
