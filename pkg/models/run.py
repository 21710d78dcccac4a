from datetime import datetime, timezone
from typing import List, Optional

from sqlalchemy import Boolean, DateTime, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import Mapped, mapped_column, relationship

from . import db


def _utcnow():
    return datetime.now(timezone.utc)


class RunRecord(db.Model):
    """One completed optimization run.

    Attributes:
        id: Primary key, auto-incremented integer.
        created_at: UTC time the run was stored.
        scheme: Benchmark scheme ("proposed", "s1", "s2", "s3").
        seed: Root seed of the run.
        config_json: Full validated configuration, JSON-encoded.
        sum_rate: Design sum-rate after the last outer iteration.
        worst_case_sum_rate: Sum-rate against the re-optimized jammer.
        iterations: Outer iterations performed.
        converged: Whether the improvement fell below eps_conv.
        content_hash: Content hash of the run's data files, when written.
    """
    __tablename__ = 'runs'

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    created_at: Mapped[datetime] = mapped_column(DateTime(timezone=True), nullable=False, default=_utcnow)
    scheme: Mapped[str] = mapped_column(String(20), nullable=False, index=True)
    seed: Mapped[int] = mapped_column(Integer, nullable=False)
    config_json: Mapped[str] = mapped_column(Text, nullable=False)
    sum_rate: Mapped[float] = mapped_column(Float, nullable=False)
    worst_case_sum_rate: Mapped[float] = mapped_column(Float, nullable=False)
    iterations: Mapped[int] = mapped_column(Integer, nullable=False)
    converged: Mapped[bool] = mapped_column(Boolean, nullable=False)
    content_hash: Mapped[Optional[str]] = mapped_column(String(40), nullable=True)

    trace: Mapped[List["IterationRecord"]] = relationship(
        back_populates='run', cascade='all, delete-orphan', order_by='IterationRecord.iteration'
    )

    def to_dict(self):
        return {
            'id': self.id,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'scheme': self.scheme,
            'seed': self.seed,
            'sum_rate': self.sum_rate,
            'worst_case_sum_rate': self.worst_case_sum_rate,
            'iterations': self.iterations,
            'converged': self.converged,
            'content_hash': self.content_hash,
        }

    def __repr__(self):
        return f'<run {self.id}: {self.scheme} seed={self.seed} sum_rate={self.sum_rate:.4f}>'


class IterationRecord(db.Model):
    """Sum-rate after one outer iteration of a stored run (iteration 0 is the initial state)."""
    __tablename__ = 'run_iterations'

    id: Mapped[int] = mapped_column(Integer, primary_key=True, autoincrement=True)
    run_id: Mapped[int] = mapped_column(ForeignKey('runs.id', ondelete='CASCADE'), nullable=False, index=True)
    iteration: Mapped[int] = mapped_column(Integer, nullable=False)
    sum_rate: Mapped[float] = mapped_column(Float, nullable=False)

    run: Mapped[RunRecord] = relationship(back_populates='trace')
