"""Parameter sweeps: JSON configs, figure presets and deterministic CSV output."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .averaging import CircleDist, GaussDist, LineDist, avg_fidelity, circle_opt_fidelity, gauss_opt_fidelity, gauss_opt_gain
from .core import G_MAX, ChannelParams, DomainError, TeleporterParams, amplitude_independent_gains
from .fidelity import CoherentAmplitude, grid_argmax, optimal_theta_eps_independent, point_fidelity
from .optimize import PARAM_NAMES, FreeParamSet, maximize, optimize_profile

AXIS_NAMES = ("r", "kappa_t", "T", "n_bar", "L", "A", "chi", "theta", "g_q", "g_p")
VALUE_NAMES = AXIS_NAMES + ("eps_re", "eps_im")
DEFAULTS = {
    "r": 0.0, "kappa_t": 0.0, "T": 1.0, "n_bar": 0.0,
    "theta": math.pi / 4, "g_q": 1.0, "g_p": 1.0,
    "eps_re": 0.0, "eps_im": 0.0,
}
DIST_KINDS = ("point", "line", "circle", "gauss")
DIST_PARAMETER = {"line": "L", "circle": "A", "gauss": "chi"}
MODES = ("none", "closed-form", "numerical")
# the numerical mode warm-starts each axis point from the previous optimum, so a coarser lattice suffices
SWEEP_STARTS_PER_AXIS = 3
CIRCLE_GAIN_GRID = 801
CLOSED_FORM_POINTS = 200
NUMERICAL_POINTS = 41
R_RANGE = (0.0, 3.0)
KT_RANGE = (0.0, 2.0)
HEADER_TAIL = ("curve_label", "fidelity", "g_q", "g_p", "theta", "converged")


class ConfigError(DomainError):
    """Malformed or invalid sweep configuration."""


@dataclass(frozen=True)
class AxisSpec:
    name: str
    min: float
    max: float
    count: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"axis name must be one of {AXIS_NAMES}, got {self.name!r}")
        if not (isinstance(self.count, int) and not isinstance(self.count, bool) and self.count >= 2):
            raise ConfigError(f"axis count must be an integer >= 2, got {self.count!r}")
        if not (math.isfinite(self.min) and math.isfinite(self.max) and self.min <= self.max):
            raise ConfigError(f"axis range must be finite with min <= max, got [{self.min}, {self.max}]")

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.count)


@dataclass(frozen=True)
class CurveSpec:
    """One curve: its label, parameter overrides and (optionally) its own distribution, mode and free set."""

    label: str
    set: Mapping[str, float] = field(default_factory=dict)
    dist: str | None = None
    mode: str | None = None
    free: tuple[str, ...] | None = None


@dataclass(frozen=True)
class SweepSpec:
    axis: AxisSpec
    curves: tuple[CurveSpec, ...]
    fixed: Mapping[str, float] = field(default_factory=dict)
    dist: str = "point"
    mode: str = "none"
    free: tuple[str, ...] = PARAM_NAMES
    output: str | None = None

    def __post_init__(self):
        if not self.curves:
            raise ConfigError("a sweep needs at least one curve")
        labels = [c.label for c in self.curves]
        if len(set(labels)) != len(labels):
            raise ConfigError("curve labels must be unique")
        for curve in self.curves:
            try:
                self.resolve(curve).validate(self.axis)
            except ConfigError:
                raise
            except DomainError as exc:
                raise ConfigError(f"curve {curve.label!r}: {exc}") from None

    @classmethod
    def from_dict(cls, doc) -> SweepSpec:
        if not isinstance(doc, Mapping):
            raise ConfigError("sweep config must be a JSON object")
        _check_keys(doc, {"axis", "curves", "fixed", "dist", "mode", "free", "output"}, "config")
        try:
            axis_doc = doc["axis"]
            _check_keys(axis_doc, {"name", "min", "max", "count"}, "axis")
            axis = AxisSpec(axis_doc["name"], _number(axis_doc["min"]), _number(axis_doc["max"]), axis_doc["count"])
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"axis needs name, min, max and count: {exc}") from None
        curves = []
        raw_curves = doc.get("curves", [{"label": "curve"}])
        if not isinstance(raw_curves, list):
            raise ConfigError("curves must be a list")
        for i, c in enumerate(raw_curves):
            if not isinstance(c, Mapping):
                raise ConfigError(f"curve {i} must be an object")
            _check_keys(c, {"label", "set", "dist", "mode", "free"}, f"curve {i}")
            curves.append(
                CurveSpec(
                    label=str(c.get("label", f"curve{i}")),
                    set=_values(c.get("set", {}), f"curve {i} set"),
                    dist=c.get("dist"),
                    mode=c.get("mode"),
                    free=_free(c["free"]) if "free" in c else None,
                )
            )
        output = doc.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output must be a path string")
        return cls(
            axis=axis,
            curves=tuple(curves),
            fixed=_values(doc.get("fixed", {}), "fixed"),
            dist=doc.get("dist", "point"),
            mode=doc.get("mode", "none"),
            free=_free(doc.get("free", list(PARAM_NAMES))),
            output=output,
        )

    def resolve(self, curve: CurveSpec) -> ResolvedCurve:
        return ResolvedCurve(
            label=curve.label,
            values={**DEFAULTS, **self.fixed, **curve.set},
            dist=curve.dist if curve.dist is not None else self.dist,
            mode=curve.mode if curve.mode is not None else self.mode,
            free=curve.free if curve.free is not None else self.free,
        )


def _check_keys(doc, allowed, where):
    if not isinstance(doc, Mapping):
        raise ConfigError(f"{where} must be an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _number(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"expected a number, got {v!r}")
    return float(v)


def _values(doc, where) -> dict:
    _check_keys(doc, set(VALUE_NAMES), where)
    return {k: _number(v) for k, v in doc.items()}


def _free(v) -> tuple[str, ...]:
    text = ",".join(v) if isinstance(v, list) and all(isinstance(x, str) for x in v) else v
    if not isinstance(text, str):
        raise ConfigError(f"free must be a comma list or list of names, got {v!r}")
    try:
        return FreeParamSet.parse(text).free
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


@dataclass(frozen=True)
class ResolvedCurve:
    label: str
    values: Mapping[str, float]
    dist: str
    mode: str
    free: tuple[str, ...]

    def validate(self, axis: AxisSpec):
        if self.dist not in DIST_KINDS:
            raise ConfigError(f"dist must be one of {DIST_KINDS}, got {self.dist!r}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "closed-form" and self.dist == "line":
            raise ConfigError("the line distribution has no closed-form optimum; use mode 'numerical'")
        if self.mode == "numerical" and axis.name in self.free:
            raise ConfigError(f"axis {axis.name!r} cannot also be a free parameter")
        needed = DIST_PARAMETER.get(self.dist)
        if needed and needed not in self.values and axis.name != needed:
            raise ConfigError(f"dist {self.dist!r} needs {needed!r}")
        for x in (axis.min, axis.max):
            values = {**self.values, axis.name: x}
            _teleporter(values), _channel(values), _distribution(self.dist, values)


def _teleporter(v) -> TeleporterParams:
    return TeleporterParams(v["theta"], v["g_q"], v["g_p"], v["T"])


def _channel(v) -> ChannelParams:
    return ChannelParams(v["kappa_t"], v["n_bar"], v["r"])


def _distribution(kind, v):
    if kind == "point":
        return CoherentAmplitude(v["eps_re"], v["eps_im"])
    if kind == "line":
        return LineDist(v["L"])
    if kind == "circle":
        return CircleDist(v["A"])
    return GaussDist(v["chi"])


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    label: str
    fidelity: float
    g_q: float
    g_p: float
    theta: float
    converged: bool


def _closed_form(dist_kind, v):
    """(fidelity, g_q, g_p, theta) at the analytic optimum for this distribution."""
    T, c = v["T"], _channel(v)
    if dist_kind == "point":
        theta, value, _ = optimal_theta_eps_independent(T, c)
        g_q, g_p = amplitude_independent_gains(theta, T)
        return value, g_q, g_p, theta
    if dist_kind == "gauss":
        d = GaussDist(v["chi"])
        g = gauss_opt_gain(T, c, d)
        return gauss_opt_fidelity(T, c, d), g, g, math.pi / 4
    d = CircleDist(v["A"])
    g, value = grid_argmax(lambda g: circle_opt_fidelity(g, T, c, d), 0.0, G_MAX, CIRCLE_GAIN_GRID)
    return value, g, g, math.pi / 4


def _numerical(curve: ResolvedCurve, v, previous):
    c = _channel(v)
    base = _teleporter(v)
    free = FreeParamSet(curve.free, base)
    extra = [] if previous is None else [{n: getattr(previous, n) for n in free.free}]
    options = {"starts_per_axis": SWEEP_STARTS_PER_AXIS, "extra_starts": extra}
    if curve.dist == "point":
        eps = complex(CoherentAmplitude(v["eps_re"], v["eps_im"]))
        return maximize(lambda p: point_fidelity(p, c, eps), free, **options)
    return optimize_profile(_distribution(curve.dist, v), base.T, c, free, warm_start=True, **options)


def run_curve(curve: ResolvedCurve, axis: AxisSpec) -> list[SweepRow]:
    """All rows of one curve, in axis order; numerical optima are continued along the axis."""
    rows, previous = [], None
    for x in axis.values():
        x = float(x)
        v = {**curve.values, axis.name: x}
        if curve.mode == "none":
            p, c, d = _teleporter(v), _channel(v), _distribution(curve.dist, v)
            value = point_fidelity(p, c, complex(d)) if curve.dist == "point" else avg_fidelity(p, c, d)
            rows.append(SweepRow(x, curve.label, value, p.g_q, p.g_p, p.theta, True))
        elif curve.mode == "closed-form":
            value, g_q, g_p, theta = _closed_form(curve.dist, v)
            rows.append(SweepRow(x, curve.label, value, g_q, g_p, theta, True))
        else:
            result = _numerical(curve, v, previous)
            previous = p = result.best_params
            rows.append(SweepRow(x, curve.label, result.best_value, p.g_q, p.g_p, p.theta, result.converged))
    return rows


def _run_curve_args(args):
    return run_curve(*args)


def run_sweep(spec: SweepSpec, threads: int = 1) -> list[SweepRow]:
    """Rows ordered by curve then axis; ``threads`` > 1 evaluates curves in parallel processes."""
    jobs = [(spec.resolve(c), spec.axis) for c in spec.curves]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
            per_curve = list(pool.map(_run_curve_args, jobs))
    else:
        per_curve = [run_curve(*job) for job in jobs]
    return [row for rows in per_curve for row in rows]


def _fmt(x: float) -> str:
    return "%.16e" % x


def format_csv(axis_name: str, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow((axis_name,) + HEADER_TAIL)
    for r in rows:
        writer.writerow(
            (_fmt(r.axis_value), r.label, _fmt(r.fidelity), _fmt(r.g_q), _fmt(r.g_p), _fmt(r.theta),
             "true" if r.converged else "false")
        )
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file in the same directory and an atomic rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".sweep-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_sweep(spec: SweepSpec, path: str, threads: int = 1) -> list[SweepRow]:
    """Evaluate the whole sweep, then write it; nothing is written if evaluation fails."""
    rows = run_sweep(spec, threads)
    write_atomic(path, format_csv(spec.axis.name, rows))
    return rows


# figure presets


def _label(family, **kw):
    return family + ":" + ";".join(f"{k}={v:g}" if not isinstance(v, str) else f"{k}={v}" for k, v in kw.items())


def _r_axis(count):
    return AxisSpec("r", R_RANGE[0], R_RANGE[1], count)


def _kt_axis(count):
    return AxisSpec("kappa_t", KT_RANGE[0], KT_RANGE[1], count)


_STS = {"theta": math.pi / 4, "g_q": 1.0, "g_p": 1.0}
_CURVE_VALUES = (0.1, 0.5, 1.0, 3.0, 300.0)
_T_LIST = (1.0, 0.95, 0.9, 0.85, 0.8)


def _fig2():
    curves = [CurveSpec(_label("opt", T=T, kappa_t=0), {"T": T, "kappa_t": 0.0}) for T in _T_LIST]
    curves += [CurveSpec(_label("opt", T=1, kappa_t=kt), {"T": 1.0, "kappa_t": kt}) for kt in (0.1, 0.2, 0.3, 0.4)]
    return SweepSpec(_r_axis(CLOSED_FORM_POINTS), tuple(curves), {"n_bar": 0.0}, "point", "closed-form")


def _fig3a():
    curves = []
    for kt in (0.0, 0.2):
        curves += [CurveSpec(_label("opt", L=L, kappa_t=kt), {"L": L, "kappa_t": kt}) for L in _CURVE_VALUES]
    for kt in (0.0, 0.2):
        curves += [
            CurveSpec(_label("sts", L=L, kappa_t=kt), {"L": L, "kappa_t": kt, **_STS}, mode="none")
            for L in _CURVE_VALUES
        ]
    return SweepSpec(_r_axis(NUMERICAL_POINTS), tuple(curves), {"T": 1.0, "n_bar": 0.0}, "line", "numerical")


def _fig3b():
    curves = [
        CurveSpec(_label("opt", T=T, kappa_t=kt), {"T": T, "kappa_t": kt}) for kt in (0.0, 0.2) for T in _T_LIST
    ]
    return SweepSpec(_r_axis(NUMERICAL_POINTS), tuple(curves), {"L": 1.0, "n_bar": 0.0}, "line", "numerical")


def _fig4():
    curves = [CurveSpec(_label("opt", L=L), {"L": L}) for L in _CURVE_VALUES]
    curves += [CurveSpec(_label("sts", L=L), {"L": L, **_STS}, mode="none") for L in _CURVE_VALUES]
    fixed = {"r": 0.8, "T": 0.9, "n_bar": 0.0}
    return SweepSpec(_kt_axis(NUMERICAL_POINTS), tuple(curves), fixed, "line", "numerical")


def _fig5():
    subsets = [
        ("g_q", "g_p", "theta"), ("g_q", "g_p"), ("g_q", "theta"), ("g_p", "theta"), ("g_q",), ("g_p",), ("theta",)
    ]
    curves = [CurveSpec(_label("opt", free="+".join(s)), free=s) for s in subsets]
    curves.append(CurveSpec("sts", dict(_STS), mode="none"))
    fixed = {"L": 1.0, "T": 1.0, "kappa_t": 0.2, "n_bar": 0.0, **_STS}
    return SweepSpec(_r_axis(NUMERICAL_POINTS), tuple(curves), fixed, "line", "numerical")


def _fig6a():
    curves = [
        CurveSpec(_label("opt", A=A, kappa_t=kt), {"A": A, "kappa_t": kt}) for kt in (0.0, 0.2) for A in _CURVE_VALUES
    ]
    return SweepSpec(_r_axis(CLOSED_FORM_POINTS), tuple(curves), {"T": 1.0, "n_bar": 0.0}, "circle", "closed-form")


def _fig6b():
    curves = [
        CurveSpec(_label("opt", T=T, kappa_t=kt), {"T": T, "kappa_t": kt}) for kt in (0.0, 0.2) for T in _T_LIST
    ]
    return SweepSpec(_r_axis(CLOSED_FORM_POINTS), tuple(curves), {"A": 1.0, "n_bar": 0.0}, "circle", "closed-form")


def _fig7():
    amplitudes = (0.1, 0.5, 1.0, 1.7, 3.0, 300.0)
    curves = [CurveSpec(_label("opt", A=A), {"A": A}) for A in amplitudes]
    curves += [CurveSpec(_label("sts", A=A), {"A": A, **_STS}, mode="none") for A in amplitudes]
    fixed = {"r": 0.8, "T": 0.9, "n_bar": 0.0}
    return SweepSpec(_kt_axis(CLOSED_FORM_POINTS), tuple(curves), fixed, "circle", "closed-form")


def _fig8():
    curves = [
        CurveSpec(_label("opt", chi=chi, kappa_t=kt), {"chi": chi, "kappa_t": kt})
        for kt in (0.0, 0.2)
        for chi in _CURVE_VALUES
    ]
    return SweepSpec(_r_axis(CLOSED_FORM_POINTS), tuple(curves), {"T": 1.0, "n_bar": 0.0}, "gauss", "closed-form")


def _fig9():
    curves = [CurveSpec(_label("opt", chi=chi), {"chi": chi}) for chi in _CURVE_VALUES]
    curves += [CurveSpec(_label("sts", chi=chi), {"chi": chi, **_STS}, mode="none") for chi in _CURVE_VALUES]
    fixed = {"r": 0.8, "T": 0.9, "n_bar": 0.0}
    return SweepSpec(_kt_axis(CLOSED_FORM_POINTS), tuple(curves), fixed, "gauss", "closed-form")


PRESETS = {
    "fig2": _fig2, "fig3a": _fig3a, "fig3b": _fig3b, "fig4": _fig4, "fig5": _fig5,
    "fig6a": _fig6a, "fig6b": _fig6b, "fig7": _fig7, "fig8": _fig8, "fig9": _fig9,
}


def preset(name: str) -> SweepSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
