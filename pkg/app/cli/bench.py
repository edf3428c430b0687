"""
bench: matched-seed comparison of several solvers over repetitions
"""

import logging
from pathlib import Path
from typing import Optional

from app.cli.common import output_dir, translate
from app.cli.solve import METHODS, add_solver_flags, solver_config
from app.core.config import settings
from app.core.errors import CLIError, UsageError
from app.models.experiment import ExperimentSpec
from app.models.system import GenSpec
from app.services.bench_service import BenchService
from app.services.datagen import generate_instance
from app.services.matrix_io import load_instance

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("bench", parents=parents, help="Compare solvers over matched repetitions")
    parser.add_argument("--spec", type=Path, default=None, help="ExperimentSpec JSON file")
    parser.add_argument("--instance", type=Path, default=None, help="Instance directory (default: generate)")
    parser.add_argument("--methods", default=None, help=f"Comma-separated subset of {','.join(METHODS)}")
    parser.add_argument("--reps", type=int, default=1, help="Repetitions per method")
    parser.add_argument("--resume", action="store_true", help="Skip runs already completed in --out")
    parser.add_argument("--workers", type=int, default=None,
                        help=f"Concurrent runs (default: {settings.BENCH_WORKERS})")

    generation = parser.add_argument_group("instance generation (when neither --instance nor --spec is given)")
    generation.add_argument("--n", type=int, default=None)
    generation.add_argument("--p", type=int, default=None)
    generation.add_argument("--k", type=int, default=settings.DEFAULT_CLUSTER_COUNT)
    generation.add_argument("--spread", type=float, default=0.1)
    generation.add_argument("--noise", type=float, default=0.0)

    add_solver_flags(parser)
    parser.set_defaults(handler=cmd_bench)


def experiment_from_args(args, instance_gen: Optional[GenSpec] = None) -> ExperimentSpec:
    """ExperimentSpec from --spec, or from flags; instance_gen describes a loaded --instance"""
    if args.spec is not None:
        spec = ExperimentSpec.model_validate_json(args.spec.read_text())
        if args.out is not None:
            spec = spec.model_copy(update={"output_dir": args.out})
        return spec

    if args.methods is None:
        raise UsageError("either --spec or --methods is required")
    methods = [name.strip() for name in args.methods.split(",") if name.strip()]
    unknown = sorted(set(methods) - set(METHODS))
    if unknown:
        raise UsageError(f"unknown method(s) {unknown}; expected a subset of {METHODS}")

    gen = instance_gen
    if gen is None:
        if args.n is None or args.p is None:
            raise UsageError("--n and --p are required when no --instance is given")
        gen = GenSpec(n=args.n, p=args.p, k=args.k, spread=args.spread, noise_sigma=args.noise, seed=args.seed)
    return ExperimentSpec(
        gen=gen,
        methods=[solver_config(args, method, args.seed) for method in methods],
        repetitions=args.reps,
        output_dir=output_dir(args),
    )


def cmd_bench(args) -> int:
    try:
        if args.instance is not None:
            system, _, instance_gen = load_instance(args.instance)
            instance_gen = instance_gen or GenSpec(n=system.n, p=system.p, k=1)
            spec = experiment_from_args(args, instance_gen)
        else:
            spec = experiment_from_args(args)
            system, _ = generate_instance(spec.gen)
        records = BenchService(spec, system, seed=args.seed, resume=args.resume, workers=args.workers).run()
    except CLIError:
        raise
    except Exception as e:
        logger.error(f"bench failed: {e}")
        raise translate(e) from e

    failed = [record for record in records if record.status != "completed"]
    print(Path(spec.output_dir) / "summary.csv")
    for record in failed:
        logger.error(f"{record.method} repetition {record.repetition}: {record.error_message}")
    return 1 if failed else 0
