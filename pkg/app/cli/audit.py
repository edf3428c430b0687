"""
audit: batch runs of the bound checkers. Exit 0 iff every gated bound holds.
"""

import logging
from pathlib import Path

from app.cli.common import output_dir, translate
from app.core.config import settings
from app.core.errors import CLIError
from app.models.analysis import AuditReport
from app.models.system import GenSpec
from app.services.audit_service import (
    audit_lemma1,
    audit_matrices,
    audit_orthogonality,
    audit_paving_quality,
)
from app.services.datagen import generate_instance
from app.services.matrix_io import load_instance

logger = logging.getLogger(__name__)


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("audit", help="Check the bounds numerically")
    audits = parser.add_subparsers(dest="audit", required=True)

    thm1 = audits.add_parser("thm1", parents=parents, help="Near-orthogonality of Gaussian pairs")
    thm1.add_argument("--d", type=int, default=2000, help="Dimension")
    thm1.add_argument("--eps", type=float, default=0.2, help="Cosine threshold")
    thm1.add_argument("--delta", type=float, default=0.5, help="Annulus slack")
    thm1.add_argument("--trials", type=int, default=20000, help="Gaussian pairs")
    thm1.set_defaults(handler=cmd_thm1)

    for name, description in (("thm2", "Spectral norm upper bound"),
                              ("thm3", "Spectral norm lower bound"),
                              ("thm45", "sigma_min and condition number bounds")):
        matrix = audits.add_parser(name, parents=parents, help=description)
        matrix.add_argument("--trials", type=int, default=1000, help="Random matrices")
        matrix.add_argument("--k", type=int, default=None, help="Rows per matrix (default: random in 2..10)")
        matrix.add_argument("--p", type=int, default=None, help="Columns per matrix (default: random in 10..100)")
        matrix.set_defaults(handler=cmd_matrix_audit)

    lemma1 = audits.add_parser("lemma1", parents=parents, help="Block Kaczmarz error recursion")
    lemma1.add_argument("--instance", type=Path, default=None, help="Instance directory (default: generate)")
    lemma1.add_argument("--n", type=int, default=100)
    lemma1.add_argument("--p", type=int, default=20)
    lemma1.add_argument("--noise", type=float, default=0.1)
    lemma1.add_argument("--block-size", type=int, default=settings.DEFAULT_BLOCK_SIZE)
    lemma1.add_argument("--runs", type=int, default=500, help="Seeded solver runs")
    lemma1.add_argument("--iters", type=int, default=200, help="Iterations per run")
    lemma1.set_defaults(handler=cmd_lemma1)

    quality = audits.add_parser("paving-quality", parents=parents, help="Clustered vs random paving blocks")
    quality.add_argument("--instance", type=Path, required=True, help="Instance directory")
    quality.add_argument("--clusters", type=int, default=settings.DEFAULT_CLUSTER_COUNT)
    quality.add_argument("--paving-seeds", type=int, default=50)
    quality.set_defaults(handler=cmd_paving_quality)


def _finish(report: AuditReport) -> int:
    print(f"{report.name},{report.trials},{report.failures},{report.csv_path}")
    if not report.passed:
        logger.error(f"{report.name}: {report.failures} failure(s); first at {report.first_failure}, "
                     f"see {report.counterexample_path}")
        return 1
    return 0


def _run(audit, *args, **kwargs) -> AuditReport:
    try:
        return audit(*args, **kwargs)
    except CLIError:
        raise
    except Exception as e:
        logger.error(f"audit failed: {e}")
        raise translate(e) from e


def cmd_thm1(args) -> int:
    return _finish(_run(audit_orthogonality, args.d, args.eps, args.delta, args.trials, args.seed, output_dir(args)))


def cmd_matrix_audit(args) -> int:
    return _finish(_run(audit_matrices, args.audit, args.trials, args.seed, output_dir(args), k=args.k, p=args.p))


def _lemma1(args) -> AuditReport:
    if args.instance is not None:
        system, _, _ = load_instance(args.instance)
    else:
        spec = GenSpec(n=args.n, p=args.p, k=min(settings.DEFAULT_CLUSTER_COUNT, args.n, args.p),
                       noise_sigma=args.noise, seed=args.seed)
        system, _ = generate_instance(spec)
    return audit_lemma1(system, args.block_size, args.runs, args.iters, args.seed, output_dir(args))


def cmd_lemma1(args) -> int:
    return _finish(_run(_lemma1, args))


def _paving_quality(args) -> AuditReport:
    system, _, _ = load_instance(args.instance)
    return audit_paving_quality(system, args.clusters, args.paving_seeds, args.seed, output_dir(args))


def cmd_paving_quality(args) -> int:
    return _finish(_run(_paving_quality, args))
