"""
Database connection and session management for the SOGA run ledger.

Provides:
- Engine creation from SOGA_DATABASE_URL (SQLite by default)
- Session factory with context manager support
- Database initialization and verification
"""

import logging
import os
from contextlib import contextmanager
from typing import Generator

from dotenv import load_dotenv
from sqlalchemy import create_engine, text
from sqlalchemy.engine import Engine, make_url
from sqlalchemy.orm import Session, sessionmaker

from db.models import Base

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_DATABASE_URL = "sqlite:///soga_runs.db"

# ────────────────────────────────────────────────────────────────────────────────
# Configuration
# ────────────────────────────────────────────────────────────────────────────────

def get_database_url() -> str:
    """
    SQLAlchemy URL of the run ledger.

    Returns:
        SOGA_DATABASE_URL, or a local SQLite file when unset.
    """
    return os.getenv("SOGA_DATABASE_URL", DEFAULT_DATABASE_URL)


def get_pool_settings(database_url: str) -> dict:
    """
    Get connection pool settings from environment variables.

    SQLite uses SQLAlchemy's default pool; the size settings only apply to
    server databases.

    Returns:
        Keyword arguments for create_engine.
    """
    if make_url(database_url).get_backend_name() == "sqlite":
        return {}
    return {
        "pool_size": int(os.getenv("SOGA_DB_POOL_SIZE", "5")),
        "max_overflow": int(os.getenv("SOGA_DB_MAX_OVERFLOW", "10")),
        "pool_pre_ping": True,  # Verify connections before use
        "pool_recycle": 3600,   # Recycle connections after 1 hour
    }


# ────────────────────────────────────────────────────────────────────────────────
# Engine and Session Management
# ────────────────────────────────────────────────────────────────────────────────

# Global engine instance (lazy initialization)
_engine: Engine | None = None
_session_factory: sessionmaker | None = None


def get_engine() -> Engine:
    """
    Get or create the SQLAlchemy engine.

    Returns:
        Configured SQLAlchemy Engine instance.
    """
    global _engine

    if _engine is None:
        database_url = get_database_url()
        pool_settings = get_pool_settings(database_url)
        _engine = create_engine(database_url, echo=False, **pool_settings)
        logger.debug(f"Engine created for {make_url(database_url).render_as_string(hide_password=True)}")

    return _engine


def get_session_factory() -> sessionmaker:
    """
    Get or create the session factory.

    Returns:
        Configured sessionmaker instance.
    """
    global _session_factory

    if _session_factory is None:
        _session_factory = sessionmaker(bind=get_engine(), expire_on_commit=False)

    return _session_factory


def get_session() -> Session:
    """
    Create a new database session.

    Note:
        Caller is responsible for closing the session.
        Prefer using session_scope() context manager instead.
    """
    return get_session_factory()()


@contextmanager
def session_scope() -> Generator[Session, None, None]:
    """
    Context manager for database sessions with automatic commit/rollback.

    Example:
        with session_scope() as session:
            cell = session.get(BenchmarkCell, cell_id)
            cell.status = CellStatus.COMPLETED
        # Automatically commits on success, rolls back on exception
    """
    session = get_session()
    try:
        yield session
        session.commit()
    except Exception as e:
        session.rollback()
        logger.error(f"Session rollback due to: {e}")
        raise
    finally:
        session.close()


# ────────────────────────────────────────────────────────────────────────────────
# Database Initialization
# ────────────────────────────────────────────────────────────────────────────────

def init_db() -> bool:
    """
    Create all ledger tables (existing tables are left alone).

    Returns:
        True if successful, False otherwise.
    """
    try:
        engine = get_engine()
        logger.info("Creating run ledger tables...")
        Base.metadata.create_all(engine)
        logger.info("Run ledger tables ready")
        return True
    except Exception as e:
        logger.error(f"Failed to initialize database: {e}")
        return False


def verify_connection() -> bool:
    """
    Verify database connection is working.

    Returns:
        True if connection successful, False otherwise.
    """
    try:
        with get_engine().connect() as conn:
            conn.execute(text("SELECT 1")).fetchone()
        logger.info("Database connection verified successfully!")
        return True
    except Exception as e:
        logger.error(f"Database connection failed: {e}")
        return False


def get_db_info() -> dict:
    """
    Get database connection information (for debugging).

    Returns:
        Dictionary with connection details (password masked).
    """
    url = make_url(get_database_url())
    info = {
        "url": url.render_as_string(hide_password=True),
        "backend": url.get_backend_name(),
        "database": url.database,
    }
    if info["backend"] != "sqlite":
        info["pool_size"] = os.getenv("SOGA_DB_POOL_SIZE", "5")
        info["max_overflow"] = os.getenv("SOGA_DB_MAX_OVERFLOW", "10")
    return info


# ────────────────────────────────────────────────────────────────────────────────
# Cleanup
# ────────────────────────────────────────────────────────────────────────────────

def dispose_engine() -> None:
    """
    Dispose of the engine and close all connections.

    Also forgets the engine so the next call re-reads SOGA_DATABASE_URL.
    """
    global _engine, _session_factory

    if _engine is not None:
        _engine.dispose()
        _engine = None
        _session_factory = None
        logger.debug("Database engine disposed")
