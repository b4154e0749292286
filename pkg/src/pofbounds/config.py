"""Run configuration: INI-style file with one section per pipeline stage.

The file is plain key-value text so runs diff cleanly.  Coordinate indices in
config files are 1-based to match the x1..xm column headers of the CSV
artifacts; the Python API is 0-based throughout.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, replace
from typing import Optional

from .constraints import CaseSpec
from .distributions import ProductDistribution, UnivariateLaw, make_law


class ConfigError(ValueError):
    """A run-config file is malformed or references missing inputs."""


def _floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(tok) for tok in text.replace(",", " ").split())


@dataclass(frozen=True)
class ResponseSpec:
    kind: str = "synthetic"
    table: Optional[str] = None
    gamma: float = 2.0
    anchor: float = 1.05
    strain: float = 0.2
    strain_rate: float = 1e4
    temperature: float = 350.0


@dataclass(frozen=True)
class TruthSpec:
    base_kind: str = "uniform"
    base_params: dict = field(default_factory=dict)
    overrides: dict = field(default_factory=dict)  # 0-based dim -> (kind, params)

    def build(self, dimension: int) -> ProductDistribution:
        laws: list[UnivariateLaw] = []
        for d in range(dimension):
            kind, params = self.overrides.get(d, (self.base_kind, self.base_params))
            laws.append(make_law(kind, **params))
        return ProductDistribution(tuple(laws))


@dataclass(frozen=True)
class DataSpec:
    samples: int = 2000
    per_stratum: int = 1


@dataclass(frozen=True)
class SurrogateSpec:
    hidden: tuple = (200, 200, 200, 200)
    train: int = 1500
    test: int = 500
    epochs: int = 150
    batch: int = 128
    lr: float = 1e-3


@dataclass(frozen=True)
class ConstraintSpec:
    case: CaseSpec = field(default_factory=lambda: CaseSpec("mean"))
    explicit: tuple = ()  # rows of dicts parsed from [constraint.N] sections


@dataclass(frozen=True)
class SolverSpec:
    restarts: int = 50
    iters: int = 600
    stages: int = 7
    temp_start: float = 8.0
    temp_end: float = 0.0625
    box_sharp_start: float = 25.0
    box_sharp_end: float = 3200.0
    lr: float = 2e-2
    penalty: float = 1e3
    feasibility_tol: float = 1e-2


@dataclass(frozen=True)
class BaselineSpec:
    enabled: bool = True
    mc_samples: int = 12000
    osc_levels: int = 32
    osc_bases: int = 256


@dataclass(frozen=True)
class SweepSpec:
    enabled: bool = False
    design_dim: int = 0  # 0-based
    grid: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    threshold: float = 1.0
    eps: tuple = (0.05, 0.1, 0.2)
    base_mean: float = 0.5


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    output: str = "out"
    dimension: int = 5
    thresholds: tuple = (1.03,)
    response: ResponseSpec = field(default_factory=ResponseSpec)
    truth: TruthSpec = field(default_factory=TruthSpec)
    data: DataSpec = field(default_factory=DataSpec)
    surrogate: SurrogateSpec = field(default_factory=SurrogateSpec)
    constraints: ConstraintSpec = field(default_factory=ConstraintSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    baseline: BaselineSpec = field(default_factory=BaselineSpec)
    sweep: SweepSpec = field(default_factory=SweepSpec)

    def validate(self) -> "RunConfig":
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")
        if not self.thresholds:
            raise ConfigError("threshold grid must be nonempty")
        if self.response.kind not in ("synthetic", "external"):
            raise ConfigError(f"unknown response kind {self.response.kind!r}")
        if self.response.kind == "external":
            if not self.response.table:
                raise ConfigError("external response mode needs a table path")
            if not os.path.exists(self.response.table):
                raise ConfigError(f"response table not found: {self.response.table}")
        if self.data.samples % self.data.per_stratum != 0:
            raise ConfigError("samples must be a multiple of per_stratum")
        if self.surrogate.train + self.surrogate.test > self.data.samples:
            raise ConfigError("train+test split exceeds the sample count")
        if self.sweep.enabled and not self.sweep.grid:
            raise ConfigError("sweep grid must be nonempty")
        if self.sweep.enabled and not 0 <= self.sweep.design_dim < self.dimension:
            raise ConfigError("sweep design_dim outside the input dimensions")
        return self


def _law_params(section) -> dict:
    params = {}
    for key in ("loc", "scale", "loc1", "scale1", "loc2", "scale2", "weight"):
        if key in section:
            params[key] = float(section[key])
    return params


def parse_config(parser: configparser.ConfigParser) -> RunConfig:
    cfg = RunConfig()
    if parser.has_section("run"):
        run = parser["run"]
        cfg = replace(
            cfg,
            seed=run.getint("seed", cfg.seed),
            output=run.get("output", cfg.output),
            dimension=run.getint("dimension", cfg.dimension),
        )
    if parser.has_section("thresholds"):
        cfg = replace(cfg, thresholds=_floats(parser["thresholds"].get("values", "1.03")))
    if parser.has_section("response"):
        sec = parser["response"]
        cfg = replace(
            cfg,
            response=ResponseSpec(
                kind=sec.get("kind", "synthetic"),
                table=sec.get("table", None),
                gamma=sec.getfloat("gamma", 2.0),
                anchor=sec.getfloat("anchor", 1.05),
                strain=sec.getfloat("strain", 0.2),
                strain_rate=sec.getfloat("strain_rate", 1e4),
                temperature=sec.getfloat("temperature", 350.0),
            ),
        )
    if parser.has_section("truth"):
        sec = parser["truth"]
        base_kind = sec.get("kind", "uniform")
        base_params = _law_params(sec)
        overrides = {}
        for name in parser.sections():
            if name.startswith("truth."):
                dim = int(name.split(".", 1)[1]) - 1
                overrides[dim] = (parser[name].get("kind", base_kind), _law_params(parser[name]))
        cfg = replace(cfg, truth=TruthSpec(base_kind, base_params, overrides))
    if parser.has_section("data"):
        sec = parser["data"]
        cfg = replace(
            cfg,
            data=DataSpec(
                samples=sec.getint("samples", 2000),
                per_stratum=sec.getint("per_stratum", 1),
            ),
        )
    if parser.has_section("surrogate"):
        sec = parser["surrogate"]
        cfg = replace(
            cfg,
            surrogate=SurrogateSpec(
                hidden=_ints(sec.get("hidden", "200 200 200 200")),
                train=sec.getint("train", 1500),
                test=sec.getint("test", 500),
                epochs=sec.getint("epochs", 150),
                batch=sec.getint("batch", 128),
                lr=sec.getfloat("lr", 1e-3),
            ),
        )
    if parser.has_section("constraints"):
        sec = parser["constraints"]
        kind = sec.get("case", "mean")
        case = CaseSpec(
            kind=kind,
            max_order=sec.getint("max_order", 1),
            dims=tuple(d - 1 for d in _ints(sec.get("partial_dims", ""))),
            sub=_floats(sec.get("sub", "0.5 1.0")),
        )
        explicit = []
        for name in sorted(parser.sections()):
            if name.startswith("constraint."):
                c = parser[name]
                explicit.append(
                    {
                        "dim": c.getint("dim") - 1,
                        "order": c.getint("order", 1),
                        "target": c.get("target", "from_truth"),
                        "kind": c.get("kind", "moment"),
                        "sub": _floats(c["sub"]) if "sub" in c else None,
                    }
                )
        cfg = replace(cfg, constraints=ConstraintSpec(case=case, explicit=tuple(explicit)))
    if parser.has_section("solver"):
        sec = parser["solver"]
        defaults = SolverSpec()
        cfg = replace(
            cfg,
            solver=SolverSpec(
                restarts=sec.getint("restarts", defaults.restarts),
                iters=sec.getint("iters", defaults.iters),
                stages=sec.getint("stages", defaults.stages),
                temp_start=sec.getfloat("temp_start", defaults.temp_start),
                temp_end=sec.getfloat("temp_end", defaults.temp_end),
                box_sharp_start=sec.getfloat("box_sharp_start", defaults.box_sharp_start),
                box_sharp_end=sec.getfloat("box_sharp_end", defaults.box_sharp_end),
                lr=sec.getfloat("lr", defaults.lr),
                penalty=sec.getfloat("penalty", defaults.penalty),
                feasibility_tol=sec.getfloat("feasibility_tol", defaults.feasibility_tol),
            ),
        )
    if parser.has_section("baseline"):
        sec = parser["baseline"]
        cfg = replace(
            cfg,
            baseline=BaselineSpec(
                enabled=sec.getboolean("enabled", True),
                mc_samples=sec.getint("mc_samples", 12000),
                osc_levels=sec.getint("osc_levels", 32),
                osc_bases=sec.getint("osc_bases", 256),
            ),
        )
    if parser.has_section("sweep"):
        sec = parser["sweep"]
        cfg = replace(
            cfg,
            sweep=SweepSpec(
                enabled=sec.getboolean("enabled", False),
                design_dim=sec.getint("design_dim", 1) - 1,
                grid=_floats(sec.get("grid", "0.1 0.3 0.5 0.7 0.9")),
                threshold=sec.getfloat("threshold", 1.0),
                eps=_floats(sec.get("eps", "0.05 0.1 0.2")),
                base_mean=sec.getfloat("base_mean", 0.5),
            ),
        )
    return cfg.validate()


def load_config(path) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse_config(parser)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path}: {exc}") from exc
