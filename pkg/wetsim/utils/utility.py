import hashlib
import json
import logging
import warnings
from typing import Any, List, Type


def emit_warning(logger: logging.Logger, message: str, category: Type[Warning]) -> None:
    """
    Logs a warning on the named logger and raises it as a python warning for the caller.

    :param logger: named logger
    :param message: warning text
    :param category: warning class
    :return: None
    """
    logger.warning(message)
    warnings.warn(message, category, stacklevel=3)


def config_digest(config: Any) -> str:
    """
    Short, stable digest of a JSON-serializable config.

    :param config: dict-like config
    :return: 12 hex characters
    """
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def split_evenly(total: int, parts: int) -> List[int]:
    """
    Splits ``total`` items into ``parts`` nonempty-first sizes that differ by at most one.

    :param total: number of items
    :param parts: number of parts
    :return: list of sizes, zero-sized parts dropped
    """
    base, extra = divmod(total, parts)
    sizes = [base + (1 if i < extra else 0) for i in range(parts)]
    return [size for size in sizes if size > 0]
