"""
套件配置: SuiteConfig, 度量描述符, 容差表与 TOML 配置文件
"""

from __future__ import annotations

import logging
import re

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Optional

from curvlab.errors import ConfigError, CurvlabError
from curvlab.geometry.bundle_zoo import BUNDLES, BundleInstance, load_bundle
from curvlab.geometry.riemann_engine import MetricField, NumericsConfig
from curvlab.submersion.cheeger import metric_gt, regularized_metric
from curvlab.submersion.warping import linear_height, warped_metric

logger = logging.getLogger(__name__)

# 默认容差
TOLERANCE_DEFAULTS = {
    "identity": 1e-3,
    "algebraic": 1e-8,
    "ode": 1e-3,
    "warping": 1e-2,
    "kidentity_regularized": 1e-2,
    "symmetry": 1e-6,
    "good_triple": 1e-4,
    "control": 1e-2,
    "wnn": 1e-6,
    "decay": 1e-3,
    "base_floor": 1e-2,
    "holonomy_bound": 2.0,
    "cdr_floor": 1e-12,
}

FORMATS = ("json", "csv")
FILE_KEYS = ("bundle", "metric", "t", "samples", "seed", "workers", "format",
             "out", "tol", "numerics")

_DESCRIPTOR = re.compile(
    r"^\s*(reference|cheeger|regularized|warped)\s*(?:\(\s*([^()]*?)\s*\))?\s*$")


@dataclass(frozen=True)
class MetricDescriptor:
    """
    reference | cheeger(t) | regularized(t) | warped | warped(c)
    """
    kind: str
    param: Optional[float] = None

    def __str__(self) -> str:
        if self.param is None:
            return self.kind
        return f"{self.kind}({self.param:g})"


def parse_metric(text: str) -> MetricDescriptor:
    """解析度量描述符"""
    match = _DESCRIPTOR.match(text or "")
    if match is None:
        raise ConfigError(
            f"bad metric descriptor {text!r}; expected reference, cheeger(t), "
            "regularized(t), warped or warped(c)")
    kind, raw = match.group(1), match.group(2)
    if kind == "reference":
        if raw:
            raise ConfigError("reference takes no parameter")
        return MetricDescriptor(kind)
    if not raw:
        if kind == "warped":
            return MetricDescriptor(kind)
        raise ConfigError(f"{kind} needs a deformation time, e.g. {kind}(1)")
    try:
        value = float(raw)
    except ValueError as err:
        raise ConfigError(f"bad parameter {raw!r} in {text!r}") from err
    if kind == "cheeger" and value < 0:
        raise ConfigError(f"cheeger time must be nonnegative, got {value}")
    if kind == "regularized" and value <= 0:
        raise ConfigError(f"regularized time must be positive, got {value}")
    if kind == "warped" and value <= 1:
        # h = c + x0 and |x0| <= 1/2 on the Hopf base, 1 on the trivial bases
        raise ConfigError(f"warped offset must exceed 1, got {value}")
    return MetricDescriptor(kind, value)


def build_metric(b: BundleInstance, descriptor: str | MetricDescriptor) -> MetricField:
    """
    由描述符构造度量
    """
    desc = parse_metric(descriptor) if isinstance(descriptor, str) else descriptor
    if desc.kind == "reference":
        return b.reference_metric
    if desc.kind == "cheeger":
        return metric_gt(b, None, desc.param)
    if desc.kind == "regularized":
        return regularized_metric(b, None, desc.param)
    offset = 2.0 if desc.param is None else desc.param
    return warped_metric(b, None, linear_height(b, offset))


@lru_cache(maxsize=32)
def cached_metric(bundle: str, descriptor: str) -> MetricField:
    """每个进程缓存一份 (bundle, metric)"""
    return build_metric(load_bundle(bundle), descriptor)


def _positive(name: str, value: Any) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"tolerance {name} is not a number: {value!r}") from err
    if not value > 0:
        raise ConfigError(f"tolerance {name} must be positive, got {value}")
    return value


def parse_tolerance(text: str) -> tuple[str, float]:
    """name=val"""
    name, sep, raw = text.partition("=")
    name = name.strip()
    if not sep or not name:
        raise ConfigError(f"bad tolerance {text!r}, expected name=value")
    if name not in TOLERANCE_DEFAULTS:
        raise ConfigError(f"unknown tolerance {name!r}; known: "
                          f"{', '.join(sorted(TOLERANCE_DEFAULTS))}")
    return name, _positive(name, raw)


def parse_t_list(text: str | list | tuple | float) -> tuple[float, ...]:
    """"0.1,1,10" 或列表"""
    if isinstance(text, str):
        items = [s for s in re.split(r"[,\s]+", text.strip()) if s]
    elif isinstance(text, (list, tuple)):
        items = list(text)
    else:
        items = [text]
    try:
        values = tuple(float(v) for v in items)
    except (TypeError, ValueError) as err:
        raise ConfigError(f"bad t list {text!r}") from err
    if any(v < 0 for v in values):
        raise ConfigError(f"deformation times must be nonnegative, got {values}")
    return values


@dataclass(frozen=True)
class SuiteConfig:
    """
    一次套件运行的全部配置
    """
    suite: str = ""
    bundle: str = "hopf"
    metric: str = "reference"
    t: tuple[float, ...] = ()
    samples: int = 8
    seed: int = 0
    tolerances: dict = field(default_factory=dict)
    numerics: dict = field(default_factory=dict)
    workers: int = 1
    format: str = "json"
    out: Optional[str] = None

    def __post_init__(self):
        if self.bundle not in BUNDLES:
            raise ConfigError(f"unknown bundle {self.bundle!r}; known: "
                              f"{', '.join(sorted(BUNDLES))}")
        parse_metric(self.metric)
        if int(self.samples) < 1:
            raise ConfigError(f"sample count must be >= 1, got {self.samples}")
        if int(self.workers) < 1:
            raise ConfigError(f"worker count must be >= 1, got {self.workers}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        for name, value in self.tolerances.items():
            if name not in TOLERANCE_DEFAULTS:
                raise ConfigError(f"unknown tolerance {name!r}")
            _positive(name, value)
        # 这里会校验 numerics 的键与取值
        NumericsConfig(**self.numerics)

    def tolerance(self, name: str) -> float:
        """容差, 未覆盖时取默认值"""
        return float(self.tolerances.get(name, TOLERANCE_DEFAULTS[name]))

    def tolerance_table(self) -> dict:
        """完整的容差表"""
        return {name: self.tolerance(name) for name in TOLERANCE_DEFAULTS}

    def numerics_config(self) -> NumericsConfig:
        """数值参数"""
        return NumericsConfig(**self.numerics)

    def bundle_instance(self) -> BundleInstance:
        """丛"""
        return load_bundle(self.bundle)

    def metric_field(self) -> MetricField:
        """度量"""
        return cached_metric(self.bundle, self.metric)

    def replace(self, **kwargs) -> SuiteConfig:
        """返回修改后的副本"""
        return replace(self, **kwargs)

    def as_dict(self) -> dict:
        """报告里回显的配置"""
        out = asdict(self)
        out["t"] = list(self.t)
        out["tolerances"] = self.tolerance_table()
        out["numerics"] = self.numerics_config().as_dict()
        return out


def load_config_file(path: str | Path) -> dict:
    """
    读取 TOML 配置文件, 只允许已知的键
    """
    try:
        with open(path, "rb") as fp:
            data = tomllib.load(fp)
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from err
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"bad config file {path}: {err}") from err
    unknown = sorted(set(data) - set(FILE_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {', '.join(unknown)}")
    for table in ("tol", "numerics"):
        if table in data and not isinstance(data[table], dict):
            raise ConfigError(f"[{table}] in {path} must be a table")
    logger.debug("loaded config file %s: %s", path, data)
    return data


def merge_config(suite: str,
                 file_values: Optional[dict] = None,
                 cli_values: Optional[dict] = None) -> SuiteConfig:
    """
    默认值 < 配置文件 < 命令行; 命令行里值为 None 的键视为未设置
    """
    file_values = dict(file_values or {})
    cli_values = {k: v for k, v in (cli_values or {}).items() if v is not None}

    tolerances = dict(file_values.pop("tol", {}))
    tolerances.update(cli_values.pop("tol", {}))
    numerics = dict(file_values.pop("numerics", {}))
    numerics.update(cli_values.pop("numerics", {}))

    merged = {**file_values, **cli_values}
    kwargs: dict[str, Any] = {"suite": suite, "tolerances": tolerances,
                              "numerics": numerics}
    for key in ("bundle", "metric", "format", "out"):
        if key in merged:
            kwargs[key] = str(merged[key])
    for key in ("samples", "seed", "workers"):
        if key in merged:
            try:
                kwargs[key] = int(merged[key])
            except (TypeError, ValueError) as err:
                raise ConfigError(f"{key} must be an integer, got {merged[key]!r}") from err
    if "t" in merged:
        kwargs["t"] = parse_t_list(merged["t"])
    try:
        return SuiteConfig(**kwargs)
    except CurvlabError:
        raise
    except (TypeError, ValueError) as err:
        raise ConfigError(str(err)) from err
