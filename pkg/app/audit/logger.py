import logging
from contextlib import contextmanager
from time import perf_counter

from app.config.settings import settings


def setup_logging(verbosity: int = 0):
    level = settings.log_level.upper()
    if verbosity >= 2:
        level = "DEBUG"
    elif verbosity == 1 and level != "DEBUG":
        level = "INFO"
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s [%(name)s] %(message)s",
        force=True,
    )


@contextmanager
def audit_span(logger: logging.Logger, event: str, correlation_id: str | None = None, extra: dict | None = None):
    start = perf_counter()
    meta = {"event": event}
    if correlation_id:
        meta["correlation_id"] = correlation_id
    if extra:
        meta.update(extra)
    logger.debug("%s start", event, extra={"audit": meta})
    try:
        yield meta
        duration_ms = int((perf_counter() - start) * 1000)
        meta["duration_ms"] = duration_ms
        logger.info("%s end (%d ms)", event, duration_ms, extra={"audit": meta})
    except Exception as e:
        duration_ms = int((perf_counter() - start) * 1000)
        meta["duration_ms"] = duration_ms
        meta["error"] = str(e)
        logger.exception("%s error after %d ms", event, duration_ms, extra={"audit": meta})
        raise
