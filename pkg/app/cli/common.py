"""
Pieces shared by the subcommands: the global flags and the translation of
library errors into CLIError exit codes.
"""

import argparse
from pathlib import Path

from pydantic import ValidationError

from app.core.config import settings
from app.core.errors import ConfigurationError, KaczmarzError, RuntimeFailure, UsageError
from app.services.matrix_io import MATRIX_FORMATS


def global_flags() -> argparse.ArgumentParser:
    """Parent parser carried by every subcommand"""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--seed", type=int, default=0, help="Base seed (unsigned)")
    parser.add_argument("--out", type=Path, default=None,
                        help=f"Output directory (default: {settings.DEFAULT_OUTPUT_DIR})")
    parser.add_argument("--format", choices=MATRIX_FORMATS, default=settings.MATRIX_FORMAT,
                        help="Matrix file format")
    parser.add_argument("--log-level", default=None, help="Logging level (default: settings.LOG_LEVEL)")
    parser.add_argument("--wall-time", action="store_true", help="Record wall-clock time in traces")
    return parser


def output_dir(args) -> Path:
    return Path(args.out) if args.out is not None else Path(settings.DEFAULT_OUTPUT_DIR)


def validation_detail(e: ValidationError) -> str:
    """One line per violated constraint"""
    parts = []
    for error in e.errors():
        location = ".".join(str(part) for part in error["loc"])
        parts.append(f"{location}: {error['msg']}" if location else error["msg"])
    return "; ".join(parts)


def translate(e: Exception) -> Exception:
    """Map a library exception onto the CLI exit-code contract"""
    if isinstance(e, ValidationError):
        return UsageError(f"invalid arguments: {validation_detail(e)}")
    if isinstance(e, ConfigurationError):
        return UsageError(str(e))
    if isinstance(e, KaczmarzError):
        return RuntimeFailure(f"{type(e).__name__}: {e}")
    if isinstance(e, OSError):
        return RuntimeFailure(f"I/O error: {e}")
    return RuntimeFailure(f"unexpected error: {e}")
