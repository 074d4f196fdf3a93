"""
Experiment configuration files.

One JSON file per experiment. Sections map onto the library dataclasses:

    {
      "name": "synthetic",
      "tasks": [
        {"name": "dense", "datagen": {"density_ratio": 4.0, "feature_shift": 1.0}},
        {"name": "acm", "source": "data/acm/manifest.json", "target": "data/dblp/manifest.json"}
      ],
      "archs": ["GCN", "GraphSAGE", "GAT"],
      "variants": ["full"],
      "seeds": [1, 3, 5, 7, 9],
      "source": {...SourceTrainConfig...},
      "soga": {...SogaConfig...},
      "pairs": {...StructPairConfig...}
    }

Manifest paths are resolved relative to the config file.
"""

import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from datagen.sbm import DomainPairConfig, gen_pair
from gnn.checkpoint import Architecture
from gnn.trainer import SourceTrainConfig
from graph.loader import load_graph
from graph.models import Graph
from settings import DEFAULT_SEEDS, ConfigError
from soga.config import SogaConfig, SogaVariant
from structure.pairs import StructPairConfig, config_dict

logger = logging.getLogger(__name__)

SWEEP_GRID = (0.1, 0.5, 1.0, 1.5, 2.0)


def build_section(cls, data: dict | None, section: str):
    """
    Instantiate a config dataclass from a JSON object.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    data = dict(data or {})
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(unknown)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"{section}: {e}")


@dataclass
class TaskSpec:
    """A source -> target task, from manifests or from a datagen spec."""
    name: str
    source: str | None = None
    target: str | None = None
    datagen: DomainPairConfig | None = None

    def __post_init__(self):
        if isinstance(self.datagen, dict):
            self.datagen = build_section(DomainPairConfig, self.datagen, f"task {self.name}: datagen")
        has_manifests = self.source is not None and self.target is not None
        if has_manifests == (self.datagen is not None):
            raise ConfigError(f"task {self.name}: give either source+target manifests or a datagen spec")

    def input_paths(self) -> list[Path]:
        return [] if self.datagen is not None else [Path(self.source), Path(self.target)]

    def load(self) -> tuple[Graph, Graph]:
        """
        Load or generate (source, target).

        The target may come back without labels; callers hand adaptation
        only its unlabeled() view.
        """
        if self.datagen is not None:
            return gen_pair(self.datagen)
        return load_graph(self.source), load_graph(self.target)

    def to_dict(self) -> dict:
        data = {"name": self.name}
        if self.datagen is not None:
            data["datagen"] = self.datagen.to_dict()
        else:
            data["source"] = str(self.source)
            data["target"] = str(self.target)
        return data


def _parse_tasks(raw, base_dir: Path) -> list[TaskSpec]:
    if not raw:
        raise ConfigError("config needs at least one task")
    tasks = []
    for i, item in enumerate(raw):
        if not isinstance(item, dict):
            raise ConfigError(f"task #{i}: expected an object")
        item = dict(item)
        item.setdefault("name", f"task{i}")
        for key in ("source", "target"):
            if item.get(key) is not None:
                item[key] = str((base_dir / item[key]).resolve())
        tasks.append(build_section(TaskSpec, item, f"task {item['name']}"))
    names = [t.name for t in tasks]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate task names in {names}")
    return tasks


def _check_seeds(seeds) -> tuple[int, ...]:
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ConfigError("seed list is empty")
    if len(set(seeds)) != len(seeds):
        raise ConfigError(f"duplicate seeds in {list(seeds)}")
    return seeds


@dataclass
class BenchmarkConfig:
    """
    run-benchmark settings.

    Attributes:
        name: Run name (default output directory name).
        tasks: Source -> target tasks.
        archs: Architectures to benchmark.
        variants: Ablation variants (full, im, sc).
        seeds: One cell per seed.
        source: Source training hyperparameters; seed is set per cell.
        soga: Adaptation hyperparameters; seed is set per cell.
        pairs: Structural pair mining settings.
        split_ratio: Source train fraction.
        skip_n: Epochs skipped by the stability statistics.
    """
    name: str = "benchmark"
    tasks: list[TaskSpec] = field(default_factory=list)
    archs: list[Architecture] = field(
        default_factory=lambda: [Architecture.GCN, Architecture.GRAPHSAGE, Architecture.GAT]
    )
    variants: list[SogaVariant] = field(default_factory=lambda: [SogaVariant.FULL])
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    source: SourceTrainConfig = field(default_factory=SourceTrainConfig)
    soga: SogaConfig = field(default_factory=SogaConfig)
    pairs: StructPairConfig = field(default_factory=StructPairConfig)
    split_ratio: float = 0.8
    skip_n: int = 20

    def __post_init__(self):
        try:
            self.archs = [a if isinstance(a, Architecture) else Architecture.parse(a) for a in self.archs]
            self.variants = [SogaVariant(v) for v in self.variants]
        except ValueError as e:
            raise ConfigError(str(e))
        if not self.archs or not self.variants:
            raise ConfigError("archs and variants must be non-empty")
        if len(set(self.variants)) != len(self.variants):
            raise ConfigError("duplicate variants")
        self.seeds = _check_seeds(self.seeds)
        if not 0.0 < self.split_ratio <= 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1], got {self.split_ratio}")
        if self.skip_n < 0:
            raise ConfigError(f"skip_n must be >= 0, got {self.skip_n}")

    def source_config(self, arch: Architecture, seed: int) -> SourceTrainConfig:
        return replace(self.source, arch=arch, seed=seed)

    def soga_config(self, variant: SogaVariant, seed: int) -> SogaConfig:
        return replace(self.soga, seed=seed).with_variant(variant)

    def to_dict(self) -> dict:
        source = asdict(self.source)
        source["arch"] = self.source.arch.value
        return {
            "name": self.name,
            "tasks": [t.to_dict() for t in self.tasks],
            "archs": [a.value for a in self.archs],
            "variants": [v.value for v in self.variants],
            "seeds": list(self.seeds),
            "source": source,
            "soga": self.soga.to_dict(),
            "pairs": config_dict(self.pairs),
            "split_ratio": self.split_ratio,
            "skip_n": self.skip_n,
        }


@dataclass
class SweepConfig:
    """
    sweep-lambdas settings.

    By default the two arms are built from grid: every (lambda1, lambda2)
    with lambda1 > lambda2, and the mirrored pairs. arms overrides that
    with explicit {arm name: [[lambda1, lambda2], ...]}.
    """
    name: str = "sweep"
    task: TaskSpec | None = None
    arch: Architecture = Architecture.GCN
    seed: int = 1
    grid: tuple[float, ...] = SWEEP_GRID
    arms: dict[str, list[tuple[float, float]]] | None = None
    source: SourceTrainConfig = field(default_factory=SourceTrainConfig)
    soga: SogaConfig = field(default_factory=SogaConfig)
    pairs: StructPairConfig = field(default_factory=StructPairConfig)
    split_ratio: float = 0.8
    skip_n: int = 10

    def __post_init__(self):
        if self.task is None:
            raise ConfigError("sweep config needs a task")
        if isinstance(self.arch, str):
            try:
                self.arch = Architecture.parse(self.arch)
            except ValueError as e:
                raise ConfigError(str(e))
        self.grid = tuple(float(x) for x in self.grid)
        if any(x < 0 for x in self.grid):
            raise ConfigError("lambda grid values must be >= 0")
        if self.arms is not None:
            self.arms = {
                str(name): [(float(a), float(b)) for a, b in pairs]
                for name, pairs in self.arms.items()
            }
            if not self.arms or any(not pairs for pairs in self.arms.values()):
                raise ConfigError("every sweep arm needs at least one lambda pair")
        if self.skip_n < 0:
            raise ConfigError(f"skip_n must be >= 0, got {self.skip_n}")
        if self.soga.epochs <= self.skip_n:
            raise ConfigError(f"soga.epochs ({self.soga.epochs}) must exceed skip_n ({self.skip_n})")
        if not 0.0 < self.split_ratio <= 1.0:
            raise ConfigError(f"split_ratio must be in (0, 1], got {self.split_ratio}")

    def lambda_arms(self) -> dict[str, list[tuple[float, float]]]:
        """Arm name -> lambda pairs, in a fixed order."""
        if self.arms is not None:
            return self.arms
        above = [(a, b) for a in self.grid for b in self.grid if a > b]
        return {
            "lambda1_gt_lambda2": above,
            "lambda2_gt_lambda1": [(b, a) for a, b in above],
        }

    def to_dict(self) -> dict:
        source = asdict(self.source)
        source["arch"] = self.source.arch.value
        return {
            "name": self.name,
            "task": self.task.to_dict(),
            "arch": self.arch.value,
            "seed": self.seed,
            "arms": {k: [list(p) for p in v] for k, v in self.lambda_arms().items()},
            "source": source,
            "soga": self.soga.to_dict(),
            "pairs": config_dict(self.pairs),
            "split_ratio": self.split_ratio,
            "skip_n": self.skip_n,
        }


# ────────────────────────────────────────────────────────────────────────────────
# Loading
# ────────────────────────────────────────────────────────────────────────────────

def read_config(path: str | Path) -> dict:
    """
    Read a JSON config file.

    Raises:
        FileNotFoundError: If the file does not exist.
        ConfigError: If it is not a JSON object.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})")
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return data


def _common_sections(data: dict) -> dict:
    return {
        "source": build_section(SourceTrainConfig, data.pop("source", None), "source"),
        "soga": build_section(SogaConfig, data.pop("soga", None), "soga"),
        "pairs": build_section(StructPairConfig, data.pop("pairs", None), "pairs"),
    }


def parse_benchmark_config(data: dict, base_dir: str | Path = ".") -> BenchmarkConfig:
    data = dict(data)
    tasks = _parse_tasks(data.pop("tasks", None), Path(base_dir))
    sections = _common_sections(data)
    return build_section(BenchmarkConfig, {**data, **sections, "tasks": tasks}, "benchmark")


def parse_sweep_config(data: dict, base_dir: str | Path = ".") -> SweepConfig:
    data = dict(data)
    if "task" not in data:
        raise ConfigError("sweep config needs a task")
    task = _parse_tasks([data.pop("task")], Path(base_dir))[0]
    sections = _common_sections(data)
    return build_section(SweepConfig, {**data, **sections, "task": task}, "sweep")


def load_benchmark_config(path: str | Path) -> BenchmarkConfig:
    path = Path(path)
    return parse_benchmark_config(read_config(path), base_dir=path.parent)


def load_sweep_config(path: str | Path) -> SweepConfig:
    path = Path(path)
    return parse_sweep_config(read_config(path), base_dir=path.parent)
