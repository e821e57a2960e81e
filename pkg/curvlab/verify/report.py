"""
检查报告: 每个样本的残差, 汇总与判定, JSON / CSV 输出
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from curvlab.errors import ConfigError, ReportWriteError

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_HEADER = ("suite", "sample_id", "residual", "tolerance", "verdict")

# abs: value <= tol, floor: value >= tol, positive: value >= -tol, record: 不判定
MODES = ("abs", "floor", "positive", "record")
PASS, FAIL, SKIPPED = "pass", "fail", "n/a"
DEGENERATE = "degenerate everywhere"
PASSING_VERDICTS = (PASS, DEGENERATE)


@dataclass
class Component:
    """
    一个样本上的一项残差
    """
    name: str
    value: float
    tolerance: float
    mode: str = "abs"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown component mode {self.mode!r}")
        self.value = float(self.value)
        self.tolerance = float(self.tolerance)

    @property
    def passed(self) -> bool:
        """是否满足容差"""
        if self.mode == "record":
            return True
        if math.isnan(self.value):
            return False
        if self.mode == "abs":
            return self.value <= self.tolerance
        if self.mode == "floor":
            return self.value >= self.tolerance
        return self.value >= -self.tolerance

    def as_dict(self) -> dict:
        """序列化"""
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "mode": self.mode,
        }


@dataclass
class SampleRecord:
    """
    单个样本的结果; 跳过时 components 为空, verdict 为 n/a
    """
    sample_id: int
    components: list[Component] = field(default_factory=list)
    frame: dict = field(default_factory=dict)
    note: str = ""
    skipped: bool = False

    @property
    def verdict(self) -> str:
        """pass / fail / n/a"""
        if self.skipped:
            return SKIPPED
        return PASS if all(c.passed for c in self.components) else FAIL

    @property
    def primary(self) -> Optional[Component]:
        """第一个失败的判定项, 否则第一个判定项"""
        asserted = [c for c in self.components if c.mode != "record"]
        for comp in asserted:
            if not comp.passed:
                return comp
        if asserted:
            return asserted[0]
        return self.components[0] if self.components else None

    def as_dict(self) -> dict:
        """序列化"""
        return {
            "sample_id": self.sample_id,
            "verdict": self.verdict,
            "components": [c.as_dict() for c in self.components],
            "frame": self.frame,
            "note": self.note,
        }


def _stats(values: list[float]) -> dict:
    if not values:
        return {"max": None, "mean": None, "min": None, "count": 0}
    return {
        "max": max(values),
        "mean": math.fsum(values) / len(values),
        "min": min(values),
        "count": len(values),
    }


@dataclass
class CheckReport:
    """
    一次套件运行的报告
    """
    suite: str
    records: list[SampleRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    wall_time: float = 0.0
    notes: dict = field(default_factory=dict)
    verdict_override: Optional[str] = None

    @property
    def evaluated(self) -> list[SampleRecord]:
        """没有跳过的样本"""
        return [r for r in self.records if not r.skipped]

    @property
    def skipped(self) -> int:
        """跳过的样本数"""
        return len(self.records) - len(self.evaluated)

    @property
    def verdict(self) -> str:
        """所有未跳过样本都通过时为 pass"""
        if self.verdict_override is not None:
            return self.verdict_override
        return PASS if all(r.verdict == PASS for r in self.evaluated) else FAIL

    @property
    def passed(self) -> bool:
        """CLI 退出码 0"""
        return self.verdict in PASSING_VERDICTS

    def aggregates(self) -> dict:
        """主残差的 max/mean, 以及每一项的统计"""
        primary = [r.primary.value for r in self.evaluated if r.primary is not None]
        per_component: dict[str, list[float]] = {}
        for record in self.evaluated:
            for comp in record.components:
                per_component.setdefault(comp.name, []).append(comp.value)
        out = _stats(primary)
        out["skipped"] = self.skipped
        out["components"] = {name: _stats(vals) for name, vals in per_component.items()}
        return out

    def residuals(self, name: Optional[str] = None) -> list[Optional[float]]:
        """每个样本的残差, 用于复现性比较"""
        out = []
        for record in self.records:
            if name is None:
                comp = record.primary
            else:
                comp = next((c for c in record.components if c.name == name), None)
            out.append(None if comp is None else comp.value)
        return out

    def as_dict(self) -> dict:
        """JSON 结构"""
        return {
            "schema_version": SCHEMA_VERSION,
            "suite": self.suite,
            "verdict": self.verdict,
            "wall_time": self.wall_time,
            "config": self.config,
            "aggregates": self.aggregates(),
            "notes": self.notes,
            "records": [r.as_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, data: dict) -> CheckReport:
        """从 JSON 结构恢复"""
        records = [
            SampleRecord(sample_id=r["sample_id"],
                         components=[Component(**c) for c in r["components"]],
                         frame=r.get("frame", {}),
                         note=r.get("note", ""),
                         skipped=r["verdict"] == SKIPPED) for r in data["records"]
        ]
        report = cls(suite=data["suite"],
                     records=records,
                     config=data.get("config", {}),
                     wall_time=data.get("wall_time", 0.0),
                     notes=data.get("notes", {}))
        if data["verdict"] != report.verdict:
            report.verdict_override = data["verdict"]
        return report


def render_report(report: CheckReport, fmt: str = "json") -> str:
    """
    报告文本: json 为完整结构, csv 每个样本一行
    """
    if fmt == "json":
        return json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for record in report.records:
            comp = record.primary
            writer.writerow([
                report.suite,
                record.sample_id,
                "" if comp is None else repr(comp.value),
                "" if comp is None else repr(comp.tolerance),
                record.verdict,
            ])
        return buf.getvalue()
    raise ConfigError(f"format must be json or csv, got {fmt!r}")


def emit_report(report: CheckReport, fmt: str, path: str | Path) -> None:
    """
    写报告文件, I/O 错误带上路径
    """
    text = render_report(report, fmt)
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as err:
        raise ReportWriteError(path, err.strerror or str(err)) from err
    logger.info("wrote %s report for %s to %s", fmt, report.suite, path)


def read_report(path: str | Path) -> CheckReport:
    """读回 JSON 报告"""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise ReportWriteError(path, err.strerror or str(err)) from err
    return CheckReport.from_dict(data)
