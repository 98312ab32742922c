"""Flat key-value run configuration files: one ``key = value`` per line, '#' starts a comment"""
import pathlib
from typing import Dict, Iterable, Optional

from pydantic import ValidationError

from wetsim.cli.models import RunConfig
from wetsim.exceptions import ConfigurationException

TOP_LEVEL_KEYS = ("command", "seed", "out_dir", "threads", "chunks")


def parse_key_values(text: str) -> Dict[str, str]:
    """
    Parses ``key = value`` lines. Blank lines and comments are skipped; a later key overrides an earlier one.

    :param text: file content
    :return: raw key-value map
    """
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, separator, value = line.partition("=")
        key = key.strip()
        if not separator or not key:
            raise ConfigurationException(f"line {number}: expected 'key = value', got '{raw.strip()}'")
        values[key] = value.strip()
    return values


def parse_overrides(overrides: Iterable[str]) -> Dict[str, str]:
    """
    Parses ``--set KEY=VALUE`` overrides.

    :param overrides: override strings
    :return: raw key-value map
    """
    values: Dict[str, str] = {}
    for override in overrides:
        key, separator, value = override.partition("=")
        if not separator or not key.strip():
            raise ConfigurationException(f"malformed override '{override}', expected KEY=VALUE")
        values[key.strip()] = value.strip()
    return values


def build_run_config(file_values: Dict[str, str], overrides: Dict[str, str],
                     flags: Optional[Dict[str, object]] = None) -> RunConfig:
    """
    Merges file values, overrides and explicit flags (in increasing priority) into a run config.

    :param file_values: values from the config file
    :param overrides: ``--set`` values
    :param flags: command-line flags that were given (None values are skipped)
    :return: run config; command keys are validated lazily by RunConfig.keys()
    """
    merged: Dict[str, object] = dict(file_values)
    merged.update(overrides)
    merged.update({key: value for key, value in (flags or {}).items() if value is not None})
    top_level = {key: merged.pop(key) for key in TOP_LEVEL_KEYS if key in merged}
    if "command" not in top_level:
        raise ConfigurationException("no command given (config key 'command' or --command)")
    try:
        return RunConfig(parameters=merged, **top_level)
    except ValidationError as error:
        first = error.errors()[0]
        raise ConfigurationException(f"{'.'.join(map(str, first['loc']))}: {first['msg']}")


def load_run_config(path: Optional[str], overrides: Iterable[str] = (),
                    flags: Optional[Dict[str, object]] = None) -> RunConfig:
    """
    Reads a config file (optional) and builds the run config.

    :param path: config file path
    :param overrides: ``--set`` strings
    :param flags: explicit command-line flags
    :return: run config
    """
    file_values: Dict[str, str] = {}
    if path:
        config_path = pathlib.Path(path)
        if not config_path.is_file():
            raise ConfigurationException(f"config file '{path}' not found")
        file_values = parse_key_values(config_path.read_text(encoding="utf-8"))
    return build_run_config(file_values, parse_overrides(overrides), flags)
