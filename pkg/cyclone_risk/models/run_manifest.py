from datetime import datetime

from sqlalchemy import JSON, Column, DateTime, Integer, String

from ..database import Base


class RunRecord(Base):
    """运行记录: 每次命令执行一行, 内容与 manifest JSON 一致"""

    __tablename__ = "runs"

    pk = Column(Integer, primary_key=True, autoincrement=True)
    manifest_id = Column(String(64), nullable=False, index=True)
    command = Column(String(32), nullable=False)
    seed = Column(Integer, nullable=True)
    inputs = Column(JSON, default=dict)
    config = Column(JSON, default=dict)
    artifacts = Column(JSON, default=dict)
    started_at = Column(DateTime, default=datetime.utcnow, nullable=False)
    finished_at = Column(DateTime, nullable=True)
