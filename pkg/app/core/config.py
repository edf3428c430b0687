from pydantic_settings import BaseSettings, SettingsConfigDict
from pathlib import Path


class Settings(BaseSettings):
    # Solver defaults
    DEFAULT_MAX_ITERS: int = 20000
    DEFAULT_RESIDUAL_TOL: float = 1e-6
    DEFAULT_CLUSTER_COUNT: int = 4
    DEFAULT_BLOCK_SIZE: int = 4
    DEFAULT_TRACE_EVERY: int = 1
    MAX_BLOCK_RETRIES: int = 10

    # Row clustering
    KMEANS_MAX_ITERS: int = 100

    # Bound audits
    BOUND_TOLERANCE: float = 1e-9

    # Benchmark runner
    BENCH_WORKERS: int = 1
    BENCH_DB_NAME: str = "bench.db"
    RECORD_WALL_TIME: bool = False  # wall_nanos written as 0 unless enabled

    # Output
    DEFAULT_OUTPUT_DIR: Path = Path("runs")
    MATRIX_FORMAT: str = "csv"  # "csv" or "binary"
    LOG_LEVEL: str = "INFO"

    model_config = SettingsConfigDict(env_file=".env", env_prefix="KACZMARZ_", extra="ignore")


settings = Settings()
