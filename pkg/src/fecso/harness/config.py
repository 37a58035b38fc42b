"""Experiment configuration: a flat YAML (or JSON) mapping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..codebook import ENUMERATION_LIMIT, load_code
from ..gcd import PATTERN_ORDERS, SEARCHES
from ..grand import STOP_POLICIES
from ..soft_output import (
    FORNEY,
    MAP,
    NAIVE,
    SO_GCD,
    SO_GCD_EVEN,
    SO_GRAND,
    SO_GRAND_EVEN,
    SO_METHODS,
)

GRAND = "grand"
GRAND_EVEN_FILTER = "grand_even_filter"
GCD = "gcd"
ML = "ml"
DECODERS = (GRAND, GRAND_EVEN_FILTER, GCD, ML)

# soft-output methods each decoder can feed
APPLICABLE = {
    GRAND: (NAIVE, FORNEY, SO_GRAND, SO_GRAND_EVEN, MAP),
    GRAND_EVEN_FILTER: (NAIVE, FORNEY, SO_GRAND, SO_GRAND_EVEN, MAP),
    GCD: (NAIVE, FORNEY, SO_GCD, SO_GCD_EVEN, MAP),
    ML: (NAIVE, MAP),
}
EVEN_METHODS = (SO_GRAND_EVEN, SO_GCD_EVEN)


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


@dataclass
class ExperimentConfig:
    code: str = "ebch16_11"
    decoders: list[str] = field(default_factory=lambda: [GRAND])
    so_methods: list[str] = field(default_factory=lambda: [NAIVE, SO_GRAND])
    L: list[int] = field(default_factory=lambda: [1])
    eb_n0_grid: list[float] = field(default_factory=lambda: [float(x) for x in range(8)])
    trials: int = 100_000
    master_seed: int = 0
    stop_policy: str = "list_full"
    q_max: int | None = None
    bins: int = 100
    delta_diagnostics: bool = False
    synthetic_linear_beta: float | None = None
    gcd_order: str = "exact"
    gcd_search: str = "ml"
    per_trial_log: bool = False
    workers: int = 1
    chunk_size: int = 1000

    def __post_init__(self):
        if isinstance(self.L, int):
            self.L = [self.L]
        if isinstance(self.decoders, str):
            self.decoders = [self.decoders]
        if isinstance(self.so_methods, str):
            self.so_methods = [self.so_methods]
        if isinstance(self.eb_n0_grid, (int, float)):
            self.eb_n0_grid = [self.eb_n0_grid]

    def to_dict(self) -> dict:
        return asdict(self)

    def methods_for(self, decoder: str, L: int) -> list[str]:
        """Requested methods that ``decoder`` can feed at list size ``L``.

        Forney at L = 1 is the always-confident forecaster and is skipped.
        """
        return [
            m for m in self.so_methods
            if m in APPLICABLE[decoder] and not (m == FORNEY and L < 2)
        ]


def validate(config: ExperimentConfig) -> list[str]:
    """Every problem with ``config``; empty when it can run."""
    problems = []
    code = None
    try:
        code = load_code(config.code)
    except (ValueError, OSError) as exc:
        problems.append(f"code: {exc}")
    for d in config.decoders:
        if d not in DECODERS:
            problems.append(f"decoders: unknown decoder {d!r} (choose from {', '.join(DECODERS)})")
    if not config.decoders:
        problems.append("decoders: at least one decoder is required")
    for m in config.so_methods:
        if m not in SO_METHODS:
            problems.append(f"so_methods: unknown method {m!r} (choose from {', '.join(SO_METHODS)})")
    if not config.L or any(not isinstance(x, int) or x < 1 for x in config.L):
        problems.append("L: list sizes must be integers >= 1")
    if not config.eb_n0_grid:
        problems.append("eb_n0_grid: at least one point is required")
    if not isinstance(config.trials, int) or config.trials < 0:
        problems.append("trials: must be a non-negative integer")
    if not isinstance(config.master_seed, int) or config.master_seed < 0:
        problems.append("master_seed: must be a non-negative integer")
    if config.stop_policy not in STOP_POLICIES:
        problems.append(f"stop_policy: must be one of {', '.join(STOP_POLICIES)}")
    if config.q_max is not None and (not isinstance(config.q_max, int) or config.q_max < 1):
        problems.append("q_max: must be a positive integer")
    if not isinstance(config.bins, int) or config.bins < 1:
        problems.append("bins: must be a positive integer")
    if config.synthetic_linear_beta is not None and not config.synthetic_linear_beta > 0:
        problems.append("synthetic_linear_beta: must be positive")
    if config.gcd_order not in PATTERN_ORDERS:
        problems.append(f"gcd_order: must be one of {', '.join(PATTERN_ORDERS)}")
    if config.gcd_search not in SEARCHES:
        problems.append(f"gcd_search: must be one of {', '.join(SEARCHES)}")
    if not isinstance(config.workers, int) or config.workers < 1:
        problems.append("workers: must be a positive integer")
    if not isinstance(config.chunk_size, int) or config.chunk_size < 1:
        problems.append("chunk_size: must be a positive integer")
    if code is not None:
        if not code.is_even:
            for m in EVEN_METHODS:
                if m in config.so_methods:
                    problems.append(f"so_methods: {m} requires an even code; {config.code} is not even")
            if GRAND_EVEN_FILTER in config.decoders:
                problems.append(f"decoders: grand_even_filter requires an even code; {config.code} is not even")
        if code.k > ENUMERATION_LIMIT:
            if MAP in config.so_methods:
                problems.append(f"so_methods: map requires k <= {ENUMERATION_LIMIT}")
            if ML in config.decoders:
                problems.append(f"decoders: ml requires k <= {ENUMERATION_LIMIT}")
        if config.L and all(isinstance(x, int) for x in config.L) and GCD in config.decoders:
            if max(config.L) > 2**code.k:
                problems.append(f"L: GCD lists cannot exceed 2^k = {2**code.k}")
    return problems


def config_from_mapping(data: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError([f"unknown key {key!r}" for key in unknown])
    try:
        config = ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError([str(exc)]) from exc
    problems = validate(config)
    if problems:
        raise ConfigError(problems)
    return config


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError([f"{path}: {exc}"]) from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: expected a key-value mapping"])
    return config_from_mapping(data)
