"""Pipeline configuration: a single TOML or JSON file plus overrides.

Every command's behavior is a function of (config file, input files,
env-named secrets); the only secret is the API key, referenced by
environment-variable name and never stored.  ``timestamp`` is the pipeline's
clock: output files embed it instead of wall time so runs are reproducible.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # 3.10
    import tomli as tomllib

from .errors import ConfigError
from .ingest import EPOCH

PROVIDERS = ("mock", "real", "replay")
STRATEGIES = ("auto", "one_shot", "cyclical")
CORRUPTION_MODES = ("wrong_category", "spurious_parent", "drop_node")


@dataclass
class PipelineConfig:
    # paths
    snapshot_path: str = "snapshot.json"
    before_snapshot_path: str | None = None
    categories_path: str = "categories.txt"
    examples_path: str | None = None
    templates_dir: str | None = None
    output_dir: str = "out"

    # provider selection
    provider: str = "mock"
    endpoint: str = ""
    model_name: str = ""
    api_key_env_var: str = "HIERGEN_API_KEY"
    context_budget_tokens: int = 32768
    max_retries: int = 3
    timeout_s: float = 60.0
    replay_path: str | None = None
    transcript_path: str | None = None

    # mock oracle
    mock_fixture_path: str | None = None
    noise_rate: float = 0.0
    mock_seed: int = 0
    corruption_mode: str = "wrong_category"
    zero_shot_noise_rate: float | None = None
    fail_categories: list[str] = field(default_factory=list)

    # pipeline behavior
    strategy: str = "auto"
    seed: int = 0
    passes: int = 1
    batch_size: int = 20
    generation_batch_size: int = 40
    max_depth: int = 6
    node_class: str = ""
    sample_rate: float = 0.1
    timestamp: str = EPOCH

    # serve
    host: str = "127.0.0.1"
    port: int = 8571
    live_apply: bool = False

    def validate(self) -> None:
        if self.provider not in PROVIDERS:
            raise ConfigError(f"provider must be one of {PROVIDERS}, got {self.provider!r}")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.corruption_mode not in CORRUPTION_MODES:
            raise ConfigError(
                f"corruption_mode must be one of {CORRUPTION_MODES}, got {self.corruption_mode!r}"
            )
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ConfigError("noise_rate must lie in [0, 1]")
        if self.passes < 1 or self.passes % 2 == 0:
            raise ConfigError("passes must be an odd positive integer")
        if self.batch_size < 1 or self.generation_batch_size < 1:
            raise ConfigError("batch sizes must be positive")
        if self.max_depth < 2:
            raise ConfigError("max_depth must be at least 2")
        if self.provider == "real":
            if not self.endpoint or not self.model_name:
                raise ConfigError("real provider requires endpoint and model_name")
            if not os.environ.get(self.api_key_env_var):
                raise ConfigError(
                    f"real provider requires the {self.api_key_env_var} environment "
                    "variable; use the mock provider for offline runs"
                )
        if self.provider == "replay" and not self.replay_path:
            raise ConfigError("replay provider requires replay_path")


def load_config(path: str | Path | None, overrides: dict | None = None) -> PipelineConfig:
    """Read a TOML (default) or JSON config file and apply overrides.

    Unknown keys are rejected so typos fail loudly.  ``path`` may be None to
    start from defaults.
    """
    raw: dict = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigError(f"config file not found: {p}")
        try:
            if p.suffix == ".json":
                raw = json.loads(p.read_text(encoding="utf-8"))
            else:
                with p.open("rb") as fh:
                    raw = tomllib.load(fh)
        except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"config file {p} is not valid: {exc}") from None
    if overrides:
        raw.update({k: v for k, v in overrides.items() if v is not None})

    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    config = PipelineConfig(**raw)
    config.validate()
    return config
