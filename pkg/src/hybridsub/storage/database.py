"""Database configuration and management for hybridsub."""

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Generator, Optional

from sqlalchemy import create_engine, event
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker
from sqlalchemy.pool import StaticPool

from .db_models import Base
from ..utils.logger import logger


@event.listens_for(Engine, "connect")
def _set_sqlite_pragma(dbapi_connection, connection_record):
    """Enable foreign keys for SQLite."""
    cursor = dbapi_connection.cursor()
    cursor.execute("PRAGMA foreign_keys=ON")
    cursor.close()


class DatabaseManager:
    """Manages the result database connection."""

    def __init__(self, db_path: str = "results.db"):
        self.db_path = db_path
        self.engine: Optional[Engine] = None
        self.SessionLocal: Optional[sessionmaker] = None

        self._init_database()

    def _init_database(self) -> None:
        """Initialize database connection and tables."""
        if self.db_path != ":memory:":
            Path(self.db_path).parent.mkdir(parents=True, exist_ok=True)
        self.engine = create_engine(
            f"sqlite:///{self.db_path}",
            connect_args={
                "check_same_thread": False,  # Allow multi-threading
            },
            poolclass=StaticPool,  # Use static pool for SQLite
            echo=False  # Set to True for SQL debugging
        )

        # Create session factory
        self.SessionLocal = sessionmaker(
            autocommit=False,
            autoflush=False,
            bind=self.engine
        )

        # Create all tables
        Base.metadata.create_all(bind=self.engine)
        logger.info(f"Result database initialized at {self.db_path}")

    @contextmanager
    def get_session(self) -> Generator[Session, None, None]:
        """Get a database session."""
        session = self.SessionLocal()
        try:
            yield session
            session.commit()
        except Exception as e:
            session.rollback()
            logger.error(f"Database error: {e}")
            raise
        finally:
            session.close()

    def close(self) -> None:
        """Close database connection."""
        if self.engine:
            self.engine.dispose()
            logger.info("Database connection closed")


# One manager per database file (initialized on first use)
_db_managers: Dict[str, DatabaseManager] = {}


def get_db_manager(db_path: str = "results.db") -> DatabaseManager:
    """Get or create the database manager for ``db_path``."""
    key = db_path if db_path == ":memory:" else str(Path(db_path).resolve())
    if key not in _db_managers:
        _db_managers[key] = DatabaseManager(db_path)
    return _db_managers[key]


def close_all() -> None:
    """Dispose every open database manager."""
    for manager in list(_db_managers.values()):
        manager.close()
    _db_managers.clear()
