"""
验证套件

Every suite evaluates one family of formulas on seeded sample frames and
compares each residual with an entry of the tolerance table. Samples that need
totally geodesic fibers are skipped (verdict n/a) when |S| is too large.

    suite                        checks
    riemann-symmetries           "the curvature tensor has the usual symmetries"
    cheeger-formula-vs-oracle    "the sectional curvature of g_t is given by"
    fatness                      "ω_V is nondegenerate for every nonzero V"
    cdr                          "has positive sectional curvature if, and only if"
    wnn                          "weakly non-negatively curved"
    tapp-identities              "the following identities hold for good triples"
    corollary-flat               "R(X, Y, Y, V) = 0 whenever Y lies in the kernel of A_X"
    k-identity                   "a dual holonomy field ν satisfies"
    dual-inv                     "dual holonomy fields are invariant"
    good-triple                  "the two families of Jacobi fields sweep the same surface"
    basicness                    "is basic along the geodesic"
    warping                      "general vertical warping"
    regularization-decay         "totally geodesic fibers" in the limit
    holonomy-bounded             "holonomy fields have bounded norm"
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from curvlab.errors import (ConfigError, DegeneratePlaneError,
                            HypothesisViolatedError)
from curvlab.geometry.bundle_zoo import BundleInstance
from curvlab.geometry.riemann_engine import (LocalGeometry, MetricField,
                                             NumericsConfig, curvature_operator,
                                             geodesic)
from curvlab.submersion import cheeger, holonomy, identities, oneill, warping
from curvlab.submersion.oneill import SubmersionFrame
from curvlab.utils import format_time
from curvlab.verify.config import SuiteConfig, parse_metric
from curvlab.verify.report import (DEGENERATE, FAIL, PASS, CheckReport,
                                   Component, SampleRecord, emit_report)
from curvlab.verify.sampling import SampleDraw, realize_frame, sample_draws

logger = logging.getLogger(__name__)

# |det ω_V| 与最小奇异值在圆度量上的下界, 只记录
REFERENCE_FAT_FLOOR = 0.5
WNN_TAU = 1.0
GOOD_TRIPLE_SIDE = 0.5
GOOD_TRIPLE_GRID = 32
PROJECTABILITY_TOL = 1e-5
CDR_ORIGINAL_TOL = 1e-6


class SuiteContext:
    """
    一个进程里运行某个套件所需的对象
    """

    def __init__(self, suite: Suite, config: SuiteConfig):
        self.suite = suite
        self.config = config

    @cached_property
    def bundle(self) -> BundleInstance:
        """丛"""
        return self.config.bundle_instance()

    @cached_property
    def metric(self) -> MetricField:
        """配置的度量"""
        return self.config.metric_field()

    @cached_property
    def numerics(self) -> NumericsConfig:
        """数值参数"""
        return self.config.numerics_config()

    @property
    def t_values(self) -> tuple[float, ...]:
        """t 列表, 未配置时用套件的默认值"""
        return self.config.t or self.suite.default_t

    def tol(self, name: str) -> float:
        """容差"""
        return self.config.tolerance(name)

    def frame(self, draw: SampleDraw, metric: Optional[MetricField] = None):
        """在给定度量下实现样本标架"""
        return realize_frame(self.bundle, metric or self.metric, draw, self.numerics)


SampleRunner = Callable[[SuiteContext, SampleDraw], list[Component]]


@dataclass(frozen=True)
class Suite:
    """注册表里的一项"""
    name: str
    anchor: str
    runner: SampleRunner
    default_t: tuple[float, ...] = ()
    finalize: Optional[Callable[[CheckReport, SuiteContext], None]] = None


def _riemann_symmetries(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    m = ctx.metric
    frame = ctx.frame(draw)
    # 外推后的差分, 对称性误差为 O(h^4)
    local = LocalGeometry(m, draw.p, ctx.numerics.replace(richardson=True))
    x, y, z, w = frame.X, frame.V, frame.Y, frame.Y + frame.V
    value = local.riemann4(x, y, z, w)
    bianchi = value + local.riemann4(y, z, x, w) + local.riemann4(z, x, y, w)
    tol = ctx.tol("symmetry")
    comps = [
        Component("antisymmetry_first", abs(value + local.riemann4(y, x, z, w)), tol),
        Component("antisymmetry_last", abs(value + local.riemann4(x, y, w, z)), tol),
        Component("pair_symmetry", abs(value - local.riemann4(z, w, x, y)), tol),
        Component("bianchi", abs(bianchi), tol),
    ]
    reduced = local.sectional(frame.X, frame.Y, reduced=True)
    det = local.inner(frame.X, frame.X) * local.inner(frame.Y, frame.Y) - local.inner(
        frame.X, frame.Y)**2
    comps.append(
        Component("reduced_consistency",
                  abs(reduced * det - local.sectional(frame.X, frame.Y)),
                  ctx.tol("algebraic")))
    if m.flat_ambient:
        gauss = curvature_operator(m, draw.p, ctx.numerics)
        for name, (a, b) in (("gauss_xy", (frame.X, frame.Y)), ("gauss_xv", (frame.X, frame.V))):
            exact = m.inner(draw.p, gauss(a, b, b), a)
            comps.append(Component(name, abs(local.sectional(a, b) - exact), ctx.tol("identity")))
    return comps


def _cheeger_formula(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m, numerics = ctx.bundle, ctx.metric, ctx.numerics
    frame = ctx.frame(draw)
    sub = SubmersionFrame(b, m, draw.p, numerics)
    xbar = frame.X + frame.V
    ybar = frame.Y + sub.star(draw.extra)
    kappa0 = cheeger.kappa_t(b, m, draw.p, xbar, ybar, 0.0, numerics)
    comps = []
    for t in ctx.t_values:
        value = cheeger.kappa_t(b, m, draw.p, xbar, ybar, t, numerics)
        oracle = cheeger.kappa_t_oracle(b, m, draw.p, xbar, ybar, t, numerics)
        comps.append(
            Component(f"relative t={t:g}",
                      abs(value - oracle) / max(1.0, abs(oracle)), ctx.tol("identity")))
        comps.append(
            Component(f"nondecrease t={t:g}", value - kappa0, ctx.tol("algebraic"),
                      "positive"))
        if t > 0:
            closed = cheeger.z_t_term(b, m, draw.p, xbar, ybar, t, numerics)
            maxed = cheeger.z_t_max_form(b, m, draw.p, xbar, ybar, t, numerics)
            comps.append(
                Component(f"z_forms t={t:g}",
                          abs(closed - maxed) / max(1.0, abs(maxed)), ctx.tol("identity")))
    return comps


def _fatness(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m, numerics = ctx.bundle, ctx.metric, ctx.numerics
    frame = ctx.frame(draw)
    sub = SubmersionFrame(b, m, draw.p, numerics)
    cert = oneill.fatness_check(b, m, draw.p, frame.V, numerics)
    duality = abs(
        sub.inner(sub.a_star(frame.X, frame.V), frame.Y) -
        sub.inner(sub.a_tensor(frame.X, frame.Y), frame.V))
    smallest = oneill.fat_vector_check(b, m, draw.p, frame.V, numerics)
    return [
        Component("fat", 1.0 if cert.is_fat else 0.0, 1.0, "record"),
        Component("min_abs_det", cert.min_abs_det, REFERENCE_FAT_FLOOR, "record"),
        Component("omega_max", float(np.max(np.abs(cert.omega_matrix))),
                  ctx.tol("algebraic"), "record"),
        Component("fat_vector", smallest, REFERENCE_FAT_FLOOR, "record"),
        Component("duality", duality, ctx.tol("algebraic")),
    ]


def _fatness_verdict(report: CheckReport, ctx: SuiteContext) -> None:
    """
    每个样本的 FatnessCertificate 都是 fat: pass; ω 处处为零: degenerate everywhere;
    其余: fail
    """
    if any(r.verdict == FAIL for r in report.evaluated):
        return
    fat = [v for v in report.residuals("fat") if v is not None]
    omegas = [v for v in report.residuals("omega_max") if v is not None]
    if fat and all(v == 1.0 for v in fat):
        report.verdict_override = PASS
    elif all(w <= ctx.tol("algebraic") for w in omegas):
        report.verdict_override = DEGENERATE
    else:
        report.verdict_override = FAIL
    logger.info("fatness verdict on %s: %s", ctx.bundle.name, report.verdict)


def _cdr(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, numerics = ctx.bundle, ctx.numerics
    grid = identities.icosphere_grid()
    comps = []
    for t in ctx.t_values:
        m = cheeger.metric_gt(b, ctx.metric, t)
        frame = ctx.frame(draw, m)
        margin = identities.cdr_min_margin(b, m, draw.p, frame.X, frame.Y, grid,
                                           numerics=numerics)
        comps.append(Component(f"margin t={t:g}", margin, ctx.tol("cdr_floor"), "floor"))
        if t == 0 and m.flat_ambient:
            u = draw.extra
            closed = identities.cdr_margin(b, m, draw.p, frame.X, frame.Y, u,
                                           numerics=numerics)
            original = identities.cdr_original_margin(b, m, draw.p, frame.X, frame.Y, u,
                                                      numerics=numerics)
            comps.append(
                Component("original_vs_4x",
                          abs(original - 4 * closed) / max(1.0, abs(4 * closed)),
                          CDR_ORIGINAL_TOL))
    return comps


def _cdr_notes(report: CheckReport, ctx: SuiteContext) -> None:
    minima = {}
    for t in ctx.t_values:
        values = [v for v in report.residuals(f"margin t={t:g}") if v is not None]
        minima[f"{t:g}"] = min(values) if values else None
    report.notes["min_margin_per_t"] = minima


def _wnn(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m, numerics = ctx.bundle, ctx.metric, ctx.numerics
    frame = ctx.frame(draw)
    comps = [
        Component("wnn",
                  identities.wnn_residual(b, m, draw.p, frame.X, frame.V, WNN_TAU, numerics),
                  ctx.tol("wnn"), "positive"),
        Component("varfim",
                  identities.varfim_residual(b, m, draw.p, frame.X, frame.V,
                                             numerics=numerics), ctx.tol("identity")),
    ]
    if parse_metric(ctx.config.metric).kind == "reference":
        # 圆球面局部对称
        sub = SubmersionFrame(b, m, draw.p, numerics)
        comps.append(
            Component("nabla_a_star", sub.norm(sub.nabla_a_star(frame.X, frame.V)),
                      ctx.tol("identity")))
    return comps


def _tapp(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    frame = ctx.frame(draw)
    res = identities.check_theorem_tapp(ctx.bundle, ctx.metric, frame, numerics=ctx.numerics)
    tol = ctx.tol("identity")
    comps = [Component("first", res.first, tol), Component("second", res.second, tol)]
    if res.third is not None:
        comps.append(Component("third", res.third, tol))
    comps.append(Component("intro_variant", res.intro_variant, tol, "record"))
    return comps


def _corollary_flat(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    frame = ctx.frame(draw)
    kernel, fat = identities.check_corollary_flat(ctx.bundle, ctx.metric, frame,
                                                  ctx.numerics)
    comps = [Component("kernel", kernel, ctx.tol("identity"))]
    if fat is not None:
        comps.append(Component("fat", fat, ctx.tol("identity")))
    return comps


def _k_identity(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    frame = ctx.frame(draw)
    duration = ctx.t_values[0]
    residual = identities.check_k_identity(ctx.bundle, ctx.metric, draw.p, frame.X, frame.V,
                                           duration, numerics=ctx.numerics)
    name = "identity" if ctx.metric.flat_ambient else "kidentity_regularized"
    return [Component("k_identity", residual, ctx.tol(name))]


def _dual_inv(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m = ctx.bundle, ctx.metric
    frame = ctx.frame(draw)
    comps = []
    for t in ctx.t_values:
        other = cheeger.regularized_metric(b, m, t)
        nu0 = SubmersionFrame(b, other, draw.p, ctx.numerics).star(draw.v_coeffs)
        residual = identities.dual_inv_check(b, m, other, draw.p, frame.X, nu0, 1.0,
                                             numerics=ctx.numerics)
        comps.append(Component(f"dual_inv t={t:g}", residual, ctx.tol("ode")))
    return comps


def _good_triple(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    frame = ctx.frame(draw)
    args = (ctx.bundle, ctx.metric, draw.p, frame.X, frame.V, GOOD_TRIPLE_SIDE,
            GOOD_TRIPLE_SIDE, GOOD_TRIPLE_GRID)
    mismatch = identities.check_good_triple(*args, numerics=ctx.numerics)
    control = identities.check_good_triple(*args, control=True, numerics=ctx.numerics)
    sub = SubmersionFrame(ctx.bundle, ctx.metric, draw.p, ctx.numerics)
    # A*_X V = 0 时两族曲面本来就重合, 对照组不判定
    mode = "floor" if sub.norm(sub.a_star(frame.X, frame.V)) > ctx.tol("algebraic") else "record"
    return [
        Component("mismatch", mismatch, ctx.tol("good_triple")),
        Component("control", control, ctx.tol("control"), mode),
    ]


def _basicness(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m, numerics = ctx.bundle, ctx.metric, ctx.numerics
    frame = ctx.frame(draw)
    duration = ctx.t_values[0]
    residual = identities.check_basic_astar(b, m, draw.p, frame.X, frame.V, duration,
                                            numerics=numerics)
    curve = geodesic(m, draw.p, frame.V, duration, numerics=numerics)
    field = holonomy.basic_field(b, m, curve, frame.X, numerics)
    start = b.projection_differential(draw.p) @ frame.X
    drift = max(
        float(np.linalg.norm(b.projection_differential(q) @ x - start))
        for q, x in zip(curve.points, field.values))
    return [
        Component("basic_astar", residual, ctx.tol("identity")),
        Component("projectability", drift, PROJECTABILITY_TOL),
    ]


def _warping_height(ctx: SuiteContext) -> warping.BasicFunction:
    desc = parse_metric(ctx.config.metric)
    offset = desc.param if desc.kind == "warped" and desc.param is not None else 2.0
    return warping.linear_height(ctx.bundle, offset)


def _base_metric(ctx: SuiteContext) -> MetricField:
    """warped 描述符在这里表示 h, 底度量取参考度量"""
    if parse_metric(ctx.config.metric).kind == "warped":
        return ctx.bundle.reference_metric
    return ctx.metric


def _warping(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, numerics = ctx.bundle, ctx.numerics
    m = _base_metric(ctx)
    h = _warping_height(ctx)
    frame = ctx.frame(draw, m)
    sub = SubmersionFrame(b, m, draw.p, numerics)
    other = sub.star(draw.extra)
    other = other - sub.inner(other, frame.V) / sub.inner(frame.V, frame.V) * frame.V
    planes = {"hh": (frame.X, frame.Y), "vv": (frame.V, other), "vh": (frame.X, frame.V)}
    comps = []
    for kind, vectors in planes.items():
        formula = warping.warped_sectional(b, m, h, draw.p, kind, vectors, numerics)
        oracle = warping.warped_sectional_oracle(b, m, h, draw.p, vectors, numerics)
        comps.append(Component(kind, abs(formula - oracle), ctx.tol("warping")))
    return comps


def _regularization_decay(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, numerics = ctx.bundle, ctx.numerics
    if parse_metric(ctx.config.metric).kind == "reference":
        # 圆 Hopf 纤维本来就全测地
        m = warping.warped_metric(b, None, warping.linear_height(b))
    else:
        m = ctx.metric
    times = sorted(ctx.t_values)
    norms = [
        SubmersionFrame(b, cheeger.regularized_metric(b, m, t), draw.p, numerics).s_norm()
        for t in times
    ]
    comps = [Component(f"S t={t:g}", s, ctx.tol("decay"), "record") for t, s in zip(times, norms)]
    comps.append(Component("final", norms[-1], ctx.tol("decay")))
    if len(norms) > 1:
        comps.append(
            Component("monotone", max(np.diff(norms)), ctx.tol("algebraic")))
    frame = ctx.frame(draw, m)
    floor = b.base_curvature * (1 - ctx.tol("base_floor"))
    for t in times + [np.inf]:
        value = cheeger.base_curvature_family(b, m, draw.p, frame.X, frame.Y, t,
                                              numerics=numerics)
        comps.append(Component(f"base t={t:g}", value, floor, "floor"))
    return comps


def _holonomy_bounded(ctx: SuiteContext, draw: SampleDraw) -> list[Component]:
    b, m, numerics = ctx.bundle, ctx.metric, ctx.numerics
    frame = ctx.frame(draw)
    duration = ctx.t_values[0]
    curve = geodesic(m, draw.p, frame.X, duration, numerics=numerics)
    field = holonomy.holonomy_field(b, m, curve, frame.V, numerics)
    exact = holonomy.invariant_vertical_field(b, m, curve, frame.V)
    deviation = float(np.max(np.linalg.norm(field.values - exact.values, axis=1)))
    return [
        Component("growth", holonomy.growth_ratio(field), ctx.tol("holonomy_bound")),
        Component("action_field", deviation, ctx.tol("ode")),
    ]


REGISTRY: dict[str, Suite] = {
    suite.name: suite
    for suite in (
        Suite("riemann-symmetries", "the curvature tensor has the usual symmetries",
              _riemann_symmetries),
        Suite("cheeger-formula-vs-oracle", "the sectional curvature of g_t is given by",
              _cheeger_formula, (0.1, 1.0, 10.0)),
        Suite("fatness", "ω_V is nondegenerate for every nonzero V", _fatness,
              finalize=_fatness_verdict),
        Suite("cdr", "has positive sectional curvature if, and only if", _cdr, (0.0, ),
              finalize=_cdr_notes),
        Suite("wnn", "weakly non-negatively curved", _wnn),
        Suite("tapp-identities", "the following identities hold for good triples", _tapp),
        Suite("corollary-flat", "R(X, Y, Y, V) = 0 whenever Y lies in the kernel of A_X",
              _corollary_flat),
        Suite("k-identity", "a dual holonomy field ν satisfies", _k_identity, (1.0, )),
        Suite("dual-inv", "dual holonomy fields are invariant", _dual_inv, (2.0, )),
        Suite("good-triple", "the two families of Jacobi fields sweep the same surface",
              _good_triple),
        Suite("basicness", "is basic along the geodesic", _basicness, (1.0, )),
        Suite("warping", "general vertical warping", _warping),
        Suite("regularization-decay", "totally geodesic fibers", _regularization_decay,
              (10.0, 100.0, 1000.0)),
        Suite("holonomy-bounded", "holonomy fields have bounded norm", _holonomy_bounded,
              (10.0, )),
    )
}


def get_suite(name: str) -> Suite:
    """按名称取套件, 未知名称时列出注册表"""
    if name not in REGISTRY:
        raise ConfigError(f"unknown suite {name!r}; available: {', '.join(REGISTRY)}")
    return REGISTRY[name]


def list_suites() -> list[tuple[str, str]]:
    """(name, anchor)"""
    return [(s.name, s.anchor) for s in REGISTRY.values()]


def run_sample(task: tuple[str, SuiteConfig, SampleDraw]) -> SampleRecord:
    """
    单个样本; 可以在子进程里执行
    """
    name, config, draw = task
    ctx = SuiteContext(get_suite(name), config)
    try:
        components = ctx.suite.runner(ctx, draw)
    except HypothesisViolatedError as err:
        logger.debug("%s sample %d skipped: %s", name, draw.index, err)
        return SampleRecord(draw.index, frame=draw.as_dict(), note=str(err), skipped=True)
    except DegeneratePlaneError as err:
        logger.debug("%s sample %d skipped: %s", name, draw.index, err)
        return SampleRecord(draw.index, frame=draw.as_dict(), note=str(err), skipped=True)
    record = SampleRecord(draw.index, components, frame=draw.as_dict())
    logger.debug("%s sample %d: %s %s", name, draw.index, record.verdict,
                 ", ".join(f"{c.name}={c.value:.3e}" for c in components))
    return record


def run_suite(name: str, config: SuiteConfig) -> CheckReport:
    """
    运行套件, 按样本序号汇总; 配置了 out 时写报告
    """
    suite = get_suite(name)
    config = config.replace(suite=name)
    ctx = SuiteContext(suite, config)
    logger.info("running %s on %s (%s), %d samples, seed %d", name, config.bundle,
                config.metric, config.samples, config.seed)
    start = time.time()
    draws = sample_draws(ctx.bundle, config.samples, config.seed)
    tasks = [(name, config, draw) for draw in draws]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            records = list(pool.map(run_sample, tasks))
    else:
        records = [run_sample(task) for task in tasks]
    elapsed = time.time() - start

    echo = config.as_dict()
    echo["t"] = list(ctx.t_values)
    report = CheckReport(suite=name, records=records, config=echo, wall_time=elapsed)
    if suite.finalize is not None:
        suite.finalize(report, ctx)
    logger.info("%s: %s (%d evaluated, %d skipped) in %s", name, report.verdict,
                len(report.evaluated), report.skipped, format_time(elapsed))
    if config.out:
        emit_report(report, config.format, config.out)
    return report


def scan_cdr(bundle: str,
             metric: str = "reference",
             t_list: tuple[float, ...] = (0.0, ),
             samples: int = 8,
             seed: int = 0,
             **kwargs) -> CheckReport:
    """
    每个 t 下, 样本标架与李代数网格上 CDR margin 的最小值
    """
    config = SuiteConfig(suite="cdr",
                         bundle=bundle,
                         metric=metric,
                         t=tuple(t_list),
                         samples=samples,
                         seed=seed,
                         **kwargs)
    return run_suite("cdr", config)
