"""
Experiment store for training runs and their metric results.
Uses SQLAlchemy for ORM; any SQLAlchemy URL works (SQLite by default).
"""

import json
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd
from sqlalchemy import Column, DateTime, Float, ForeignKey, Integer, String, Text, create_engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from .config import Config
from .models import MetricReport

Base = declarative_base()

DEFAULT_DATABASE_URL = "sqlite:///experiments.db"


class RunDB(Base):
    """Runs table"""
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True)
    name = Column(String, index=True)
    kind = Column(String)  # train / eval / ablate
    config = Column(Text)  # JSON string
    checkpoint = Column(String, nullable=True)
    created_at = Column(DateTime, default=datetime.now, index=True)


class MetricResultDB(Base):
    """One metric value of a run on a dataset"""
    __tablename__ = "metric_results"

    id = Column(Integer, primary_key=True)
    run_id = Column(Integer, ForeignKey("runs.id"), index=True)
    dataset = Column(String, index=True)
    metric = Column(String)
    value = Column(Float)


class ExperimentStore:
    """Manages experiment records"""

    def __init__(self, db_url: Optional[str] = None):
        """Initialize database connection"""
        self.db_url = db_url or Config.DATABASE_URL or DEFAULT_DATABASE_URL
        self.engine = create_engine(self.db_url)
        Base.metadata.create_all(self.engine)
        self.SessionLocal = sessionmaker(bind=self.engine)

    def get_session(self) -> Session:
        """Get a new database session"""
        return self.SessionLocal()

    def record_run(
        self,
        name: str,
        kind: str,
        config: Optional[Dict[str, str]] = None,
        checkpoint: Optional[str] = None,
    ) -> int:
        """Insert a run and return its id"""
        session = self.get_session()
        try:
            run = RunDB(name=name, kind=kind, config=json.dumps(config or {}), checkpoint=checkpoint)
            session.add(run)
            session.commit()
            return run.id
        finally:
            session.close()

    def record_report(self, run_id: int, report: MetricReport) -> None:
        """Save every summary metric of a report"""
        session = self.get_session()
        try:
            for metric, value in report.summary().items():
                session.add(MetricResultDB(
                    run_id=run_id,
                    dataset=report.dataset,
                    metric=metric,
                    value=float(value),
                ))
            session.commit()
        finally:
            session.close()

    def list_runs(self, kind: Optional[str] = None) -> List[Dict[str, object]]:
        session = self.get_session()
        try:
            query = session.query(RunDB)
            if kind:
                query = query.filter(RunDB.kind == kind)
            return [
                {
                    "id": run.id,
                    "name": run.name,
                    "kind": run.kind,
                    "config": json.loads(run.config or "{}"),
                    "checkpoint": run.checkpoint,
                    "created_at": run.created_at,
                }
                for run in query.order_by(RunDB.created_at.asc(), RunDB.id.asc()).all()
            ]
        finally:
            session.close()

    def results_frame(self, run_ids: Optional[List[int]] = None) -> pd.DataFrame:
        """
        Stored metric results as a wide table: one row per (run, dataset),
        one column per metric.
        """
        session = self.get_session()
        try:
            query = session.query(
                RunDB.id, RunDB.name, MetricResultDB.dataset, MetricResultDB.metric, MetricResultDB.value,
            ).join(MetricResultDB, MetricResultDB.run_id == RunDB.id)
            if run_ids:
                query = query.filter(RunDB.id.in_(run_ids))
            rows = query.all()
        finally:
            session.close()

        if not rows:
            return pd.DataFrame(columns=["run_id", "run", "dataset"])
        frame = pd.DataFrame([tuple(row) for row in rows], columns=["run_id", "run", "dataset", "metric", "value"])
        wide = frame.pivot_table(index=["run_id", "run", "dataset"], columns="metric", values="value", aggfunc="last")
        wide.columns.name = None
        return wide.reset_index()
