"""
datagen: write a seeded clustered instance directory
"""

from app.cli.common import output_dir, translate
from app.core.config import settings
from app.core.errors import CLIError
from app.models.system import GenSpec
from app.services.datagen import generate_instance
from app.services.matrix_io import save_instance


def register(subparsers, parents) -> None:
    parser = subparsers.add_parser("datagen", parents=parents, help="Generate a clustered instance")
    parser.add_argument("--n", type=int, required=True, help="Rows")
    parser.add_argument("--p", type=int, required=True, help="Columns")
    parser.add_argument("--k", type=int, default=settings.DEFAULT_CLUSTER_COUNT, help="Row clusters")
    parser.add_argument("--spread", type=float, default=0.1, help="Within-cluster perturbation scale")
    parser.add_argument("--noise", type=float, default=0.0, help="Standard deviation of the noise on b")
    parser.set_defaults(handler=cmd_datagen)


def cmd_datagen(args) -> int:
    try:
        spec = GenSpec(n=args.n, p=args.p, k=args.k, spread=args.spread,
                       noise_sigma=args.noise, seed=args.seed)
        system, labels = generate_instance(spec)
        directory = save_instance(output_dir(args), system, spec=spec, labels=labels, fmt=args.format)
    except CLIError:
        raise
    except Exception as e:
        raise translate(e) from e

    print(directory)
    return 0
