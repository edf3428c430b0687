"""
Run registry database: one SQLite file per bench output directory
"""

from contextlib import contextmanager
from pathlib import Path
from typing import Iterator

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker

from app.core.config import settings
from app.db.models import Base
import logging

logger = logging.getLogger(__name__)


def database_url(out_dir: Path) -> str:
    return f"sqlite:///{Path(out_dir) / settings.BENCH_DB_NAME}"


def create_registry_engine(out_dir: Path) -> Engine:
    """Engine for <out_dir>/bench.db; tables are created if missing"""
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    engine = create_engine(
        database_url(out_dir),
        echo=False,  # Set to True for SQL debugging
        # Worker threads share the engine; SQLite locks are waited on, not failed
        connect_args={"check_same_thread": False, "timeout": 30},
    )
    Base.metadata.create_all(bind=engine)
    logger.debug(f"Run registry ready at {database_url(out_dir)}")
    return engine


def session_factory(engine: Engine) -> sessionmaker:
    return sessionmaker(bind=engine, expire_on_commit=False)


@contextmanager
def session_scope(factory: sessionmaker) -> Iterator[Session]:
    """Commit on success, roll back and re-raise on error"""
    session = factory()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()
