from contextlib import contextmanager
from functools import lru_cache
from typing import Iterator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from .config import settings

Base = declarative_base()


@lru_cache(maxsize=None)
def get_engine(database_url: Optional[str] = None) -> Engine:
    """按 URL 缓存引擎; 命令行可通过配置切换运行记录库"""
    url = database_url or settings.DATABASE_URL
    return create_engine(
        url,
        connect_args={"check_same_thread": False} if "sqlite" in url else {},
    )


def get_session_factory(database_url: Optional[str] = None) -> sessionmaker:
    return sessionmaker(autocommit=False, autoflush=False, bind=get_engine(database_url))


@contextmanager
def get_db(database_url: Optional[str] = None) -> Iterator[Session]:
    """获取数据库会话, 退出时关闭"""
    db = get_session_factory(database_url)()
    try:
        yield db
    finally:
        db.close()


def init_db(database_url: Optional[str] = None) -> None:
    """初始化数据库表"""
    from .models import RunRecord  # noqa: F401

    Base.metadata.create_all(bind=get_engine(database_url))
