"""
Artifact files of a run. Names are derived from (command, config digest) and every file carries the digest,
so identical configs produce identical files.
"""
import json
import pathlib
from typing import Any, Dict, Iterable, List, Sequence

import numpy as np

from wetsim.core.serialization import write_rows
from wetsim.log import Loggers

logger = Loggers.get_named_logger("WETSIM_ARTIFACTS")


def to_jsonable(value: Any) -> Any:
    """Converts numpy scalars and arrays (also nested in dicts and lists) to plain python"""
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class ArtifactWriter:
    """Writes CSV and JSON artifacts of one run into the output directory"""

    def __init__(self, out_dir: str, command: str, digest: str):
        """Writer initializer"""
        self.out_dir = pathlib.Path(out_dir)
        self.command = command
        self.digest = digest
        self.written: List[str] = []

    def path(self, name: str, suffix: str) -> pathlib.Path:
        return self.out_dir / f"{self.command}-{self.digest}-{name}.{suffix}"

    def _write(self, path: pathlib.Path, text: str) -> pathlib.Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.written.append(path.name)
        logger.info(f"wrote {path}")
        return path

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> pathlib.Path:
        """
        CSV artifact with a '# digest=...' first line.

        :param name: artifact name
        :param header: column names
        :param rows: rows
        :return: written path
        """
        return self._write(self.path(name, "csv"), write_rows(header, rows, comment=f"digest={self.digest}"))

    def write_json(self, name: str, payload: Any) -> pathlib.Path:
        """
        JSON artifact; dict payloads get a 'digest' field, other payloads are wrapped.

        :param name: artifact name
        :param payload: JSON-serializable payload (numpy values allowed)
        :return: written path
        """
        payload = to_jsonable(payload)
        record = dict(payload, digest=self.digest) if isinstance(payload, dict) else {"digest": self.digest,
                                                                                      "records": payload}
        return self._write(self.path(name, "json"), json.dumps(record, sort_keys=True, indent=2) + "\n")

    def write_manifest(self, resolved: Dict[str, Any], summary: Dict[str, Any]) -> pathlib.Path:
        """
        Manifest with the resolved config, a run summary and the artifact list.

        :param resolved: resolved config
        :param summary: command summary
        :return: written path
        """
        artifacts = sorted(self.written)
        return self.write_json("manifest", {"config": resolved, "summary": summary, "artifacts": artifacts})
