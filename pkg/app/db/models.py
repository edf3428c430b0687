"""
SQLAlchemy models for bench run tracking
"""

from sqlalchemy import Column, String, Text, DateTime, Integer, JSON, BigInteger, UniqueConstraint
from sqlalchemy.orm import declarative_base
from sqlalchemy.sql import func

from app.models.experiment import RunRecord, RunSummary

Base = declarative_base()


def run_id(method: str, repetition: int) -> str:
    return f"{method}:{repetition}"


class BenchRun(Base):
    """One (method, repetition) run of a bench"""
    __tablename__ = "bench_runs"
    __table_args__ = (UniqueConstraint("method", "repetition"),)

    id = Column(String, primary_key=True)  # method:repetition
    method = Column(String, nullable=False, index=True)
    repetition = Column(Integer, nullable=False)
    seed = Column(BigInteger, nullable=False)

    # pending, processing, completed, failed
    status = Column(String, nullable=False, default="pending", index=True)

    # Timestamps
    created_at = Column(DateTime(timezone=True), server_default=func.now())
    started_at = Column(DateTime(timezone=True), nullable=True)
    completed_at = Column(DateTime(timezone=True), nullable=True)

    # Results and errors
    trace_path = Column(String, nullable=True)
    summary = Column(JSON, nullable=True)  # RunSummary.model_dump()
    error_message = Column(Text, nullable=True)

    def to_record(self) -> RunRecord:
        return RunRecord(
            method=self.method,
            repetition=self.repetition,
            seed=self.seed,
            status=self.status,
            trace_path=self.trace_path,
            summary=RunSummary(**self.summary) if self.summary else None,
            error_message=self.error_message,
        )
