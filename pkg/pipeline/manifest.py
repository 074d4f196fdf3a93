"""
Run manifests.

Every subcommand that writes outputs also writes run_manifest.json: the argv
it was called with, the effective config, seeds, SHA256 hashes of its
inputs, the tool version, stage timings and the files it produced.
`run_soga.py replay` re-executes a run from the argv echo.
"""

import hashlib
import json
import logging
import platform
import time
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Generator

from graph.loader import read_manifest
from settings import TOOL_VERSION, get_settings_info

logger = logging.getLogger(__name__)

MANIFEST_FILENAME = "run_manifest.json"


def calculate_hash(filepath: str | Path) -> str:
    """
    Calculate SHA256 hash of a file.

    Args:
        filepath: Path to the file.

    Returns:
        Hexadecimal hash string.
    """
    sha256_hash = hashlib.sha256()
    with open(filepath, "rb") as f:
        for chunk in iter(lambda: f.read(8192), b""):
            sha256_hash.update(chunk)
    return sha256_hash.hexdigest()


def dataset_files(manifest_path: str | Path) -> list[Path]:
    """A dataset manifest and every data file it references."""
    manifest_path = Path(manifest_path)
    manifest = read_manifest(manifest_path)
    files = [manifest_path]
    for key in ("edges", "features", "labels", "node_ids"):
        if manifest.get(key):
            files.append(manifest_path.parent / manifest[key])
    return files


@dataclass
class RunManifest:
    subcommand: str
    argv: list[str]
    config: dict = field(default_factory=dict)
    seeds: list[int] = field(default_factory=list)
    input_hashes: dict[str, str] = field(default_factory=dict)
    tool_version: str = TOOL_VERSION
    python_version: str = field(default_factory=platform.python_version)
    settings: dict = field(default_factory=get_settings_info)
    started_at: str = field(default_factory=lambda: datetime.now().isoformat(timespec="seconds"))
    finished_at: str | None = None
    timings: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def add_input(self, path: str | Path) -> None:
        """Hash an input file; dataset manifests pull in their data files."""
        path = Path(path)
        files = dataset_files(path) if path.suffix == ".json" and _is_dataset_manifest(path) else [path]
        for f in files:
            self.input_hashes[str(f)] = calculate_hash(f)

    def add_output(self, path: str | Path) -> None:
        path = str(path)
        if path not in self.outputs:
            self.outputs.append(path)

    @contextmanager
    def timed(self, stage: str) -> Generator[None, None, None]:
        """Accumulate the wall-clock seconds of a stage."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[stage] = round(self.timings.get(stage, 0.0) + time.perf_counter() - start, 3)

    def finish(self) -> None:
        self.finished_at = datetime.now().isoformat(timespec="seconds")

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / MANIFEST_FILENAME
        self.add_output(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2)
        logger.debug(f"Wrote run manifest {path}")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        """
        Read a run manifest (a directory means its run_manifest.json).

        Raises:
            FileNotFoundError: If the manifest does not exist.
            ValueError: If required fields are missing.
        """
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_FILENAME
        if not path.is_file():
            raise FileNotFoundError(f"run manifest not found: {path}")
        data = json.loads(path.read_text(encoding="utf-8"))
        if "subcommand" not in data or "argv" not in data:
            raise ValueError(f"{path}: not a run manifest")
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in data.items() if k in known})

    def changed_inputs(self) -> list[str]:
        """Inputs whose current hash differs from the recorded one (or that vanished)."""
        changed = []
        for path, digest in self.input_hashes.items():
            if not Path(path).is_file() or calculate_hash(path) != digest:
                changed.append(path)
        return changed


def _is_dataset_manifest(path: Path) -> bool:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError):
        return False
    return isinstance(data, dict) and "edges" in data and "features" in data
