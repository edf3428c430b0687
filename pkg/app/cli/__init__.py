# CLI subcommands
from . import audit, bench, datagen, solve

SUBCOMMANDS = [datagen, solve, bench, audit]

__all__ = ["SUBCOMMANDS", "audit", "bench", "datagen", "solve"]
