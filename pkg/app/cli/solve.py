"""
solve: run one solver on an instance directory, write its trace and print
the summary line
"""

import logging
from pathlib import Path

from app.cli.common import output_dir, translate
from app.core.errors import CLIError
from app.models.solver import GuardRule, SolverConfig, SolverMethod
from app.services.matrix_io import load_instance
from app.services.paving import write_paving_csv
from app.services.row_clustering import write_assignments_csv
from app.services.solvers import BlockSolver, make_solver
from app.services.trace_io import summarize_trace, summary_line, write_trace_csv

logger = logging.getLogger(__name__)

METHODS = [method.value for method in SolverMethod]
GUARDS = [guard.value for guard in GuardRule]


def add_solver_flags(parser) -> None:
    """Solver tuning flags shared with bench; unset flags fall back to settings"""
    parser.add_argument("--tol", type=float, default=None, help="Relative residual tolerance")
    parser.add_argument("--max-iters", type=int, default=None, help="Iteration cap")
    parser.add_argument("--sample-count", type=int, default=None, help="Rows compared per JL selection")
    parser.add_argument("--jl-dim", type=int, default=None, help="Sketch dimension")
    parser.add_argument("--clusters", type=int, default=None, help="Cluster count k")
    parser.add_argument("--block-size", type=int, default=None, help="Random paving block size")
    parser.add_argument("--trace-every", type=int, default=None, help="Trace every N iterations")
    parser.add_argument("--guard", choices=GUARDS, default=None, help="Test-step guard row rule")


def solver_config(args, method: str, seed: int) -> SolverConfig:
    flags = {
        "residual_tol": args.tol,
        "max_iters": args.max_iters,
        "sample_count": args.sample_count,
        "jl_dim": args.jl_dim,
        "cluster_count": args.clusters,
        "block_size": args.block_size,
        "trace_every": args.trace_every,
        "guard": args.guard,
    }
    return SolverConfig(method=method, seed=seed, **{key: value for key, value in flags.items() if value is not None})


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("solve", parents=parents, help="Run one solver on an instance")
    parser.add_argument("--method", choices=METHODS, required=True, help="Solver")
    parser.add_argument("--instance", type=Path, required=True, help="Instance directory")
    add_solver_flags(parser)
    parser.set_defaults(handler=cmd_solve)


def cmd_solve(args) -> int:
    try:
        system, _, _ = load_instance(args.instance)
        cfg = solver_config(args, args.method, args.seed)
        solver = make_solver(system, cfg)
        state = solver.solve()

        out = output_dir(args)
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / f"{args.method}_trace.csv"
        write_trace_csv(trace_path, state.trace)
        if isinstance(solver, BlockSolver):
            write_paving_csv(out / f"{args.method}_paving.csv", solver.paving)
        if getattr(solver, "clustering", None) is not None:
            write_assignments_csv(out / f"{args.method}_clusters.csv", solver.clustering)
    except CLIError:
        raise
    except Exception as e:
        logger.error(f"solve failed: {e}")
        raise translate(e) from e

    logger.info(f"Trace written to {trace_path}")
    print(summary_line(args.method, summarize_trace(state.trace, cfg.residual_tol)))
    return 0
