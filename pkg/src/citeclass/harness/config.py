"""Declarative experiment configuration.

A config is one JSON document with no hidden defaults outside this
schema; its canonical serialization is hashed to name the run directory,
which is what makes reruns byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..balance import LossConfig
from ..errors import ConfigError
from ..models import ModelConfig
from ..models.train import STRATEGIES
from ..splits import SplitPlan

DATASETS = ("scicite", "csc", "export")
TASKS = ("intent", "sentiment")

_TOP_LEVEL_KEYS = {
    "task", "data", "model", "split", "cleanse", "strategy", "loss",
    "epochs", "patience", "val_fraction", "use_provided_val",
    "learning_rate", "batch_size", "smote_k", "seed", "out_dir",
}


def _strict(data: dict, allowed: set[str], where: str) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {sorted(unknown)}")


def _split_from_dict(data: dict) -> SplitPlan:
    _strict(data, {"kind", "ratio", "k", "seed", "stratified"}, "split")
    try:
        return SplitPlan(
            kind=data.get("kind", "provided"),
            ratio=data.get("ratio"),
            k=data.get("k"),
            seed=int(data.get("seed", 0)),
            stratified=bool(data.get("stratified", True)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _loss_from_dict(data: dict) -> LossConfig:
    _strict(data, {"kind", "gamma", "class_weights"}, "loss")
    try:
        weights = data.get("class_weights")
        return LossConfig(
            kind=data.get("kind", "cross_entropy"),
            gamma=float(data.get("gamma", 2.0)),
            class_weights=tuple(weights) if weights else None,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment run depends on."""

    task: str
    data: dict
    model: ModelConfig
    split: SplitPlan
    cleanse: bool = False
    strategy: str = "none"
    loss: LossConfig = field(default_factory=LossConfig)
    epochs: int = 50
    patience: int = 5
    val_fraction: float = 0.0
    use_provided_val: bool = True
    learning_rate: float = 0.01
    batch_size: int = 32
    smote_k: int = 5
    seed: int = 0
    out_dir: str = "runs"

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}; expected one of {STRATEGIES}")
        if self.strategy == "downsample_balanced" and self.split.kind != "kfold":
            raise ConfigError("strategy 'downsample_balanced' is only valid with a kfold split")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ConfigError(f"val_fraction must be in [0,1), got {self.val_fraction}")
        if self.epochs < 0 or self.patience < 0:
            raise ConfigError("epochs and patience must be >= 0")
        dataset = self.data.get("dataset")
        if dataset not in DATASETS:
            raise ConfigError(f"data.dataset must be one of {DATASETS}, got {dataset!r}")
        if dataset == "scicite":
            _strict(self.data, {"dataset", "train", "val", "test"}, "data")
            missing = {"train", "val", "test"} - set(self.data)
            if missing:
                raise ConfigError(f"scicite data needs paths for {sorted(missing)}")
            if self.task != "intent":
                raise ConfigError("the scicite dataset carries intent labels")
            if self.split.kind != "provided":
                raise ConfigError("scicite ships its own splits; use split kind 'provided'")
            if self.cleanse:
                raise ConfigError("cleansing applies to single-corpus datasets, not provided splits")
        else:
            _strict(self.data, {"dataset", "path"}, "data")
            if "path" not in self.data:
                raise ConfigError(f"{dataset} data needs a 'path'")
            if dataset == "csc" and self.task != "sentiment":
                raise ConfigError("the csc dataset carries sentiment labels")
            if self.split.kind == "provided":
                raise ConfigError(f"dataset {dataset!r} has no provided split; use fixed_ratio or kfold")

    def to_dict(self) -> dict:
        return {
            "task": self.task,
            "data": dict(self.data),
            "model": self.model.to_dict(),
            "split": {
                "kind": self.split.kind,
                "ratio": self.split.ratio,
                "k": self.split.k,
                "seed": self.split.seed,
                "stratified": self.split.stratified,
            },
            "cleanse": self.cleanse,
            "strategy": self.strategy,
            "loss": {
                "kind": self.loss.kind,
                "gamma": self.loss.gamma,
                "class_weights": list(self.loss.class_weights) if self.loss.class_weights else None,
            },
            "epochs": self.epochs,
            "patience": self.patience,
            "val_fraction": self.val_fraction,
            "use_provided_val": self.use_provided_val,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "smote_k": self.smote_k,
            "seed": self.seed,
            "out_dir": self.out_dir,
        }

    def canonical_json(self) -> str:
        """Canonical text form whose hash names the run.

        The output directory is storage, not experiment identity, so it is
        excluded: the same experiment hashes the same wherever it runs.
        """
        data = self.to_dict()
        data.pop("out_dir")
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def run_id(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:12]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        _strict(data, _TOP_LEVEL_KEYS, "experiment")
        for required in ("task", "data", "model", "split"):
            if required not in data:
                raise ConfigError(f"experiment config needs a {required!r} section")
        return cls(
            task=data["task"],
            data=dict(data["data"]),
            model=ModelConfig.from_dict(data["model"]),
            split=_split_from_dict(data["split"]),
            cleanse=bool(data.get("cleanse", False)),
            strategy=data.get("strategy", "none"),
            loss=_loss_from_dict(data.get("loss", {})),
            epochs=int(data.get("epochs", 50)),
            patience=int(data.get("patience", 5)),
            val_fraction=float(data.get("val_fraction", 0.0)),
            use_provided_val=bool(data.get("use_provided_val", True)),
            learning_rate=float(data.get("learning_rate", 0.01)),
            batch_size=int(data.get("batch_size", 32)),
            smote_k=int(data.get("smote_k", 5)),
            seed=int(data.get("seed", 0)),
            out_dir=str(data.get("out_dir", "runs")),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(data)

    def replace(self, **changes) -> "ExperimentConfig":
        merged = self.to_dict()
        for key, value in changes.items():
            if key not in _TOP_LEVEL_KEYS:
                raise ConfigError(f"unknown experiment config key {key!r}")
            merged[key] = value
        return ExperimentConfig.from_dict(merged)
