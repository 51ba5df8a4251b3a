"""Bounded multi-start Nelder-Mead maximization over the teleporter's tunables."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .averaging import LineDist, avg_fidelity, gp_opt_line, raw_average
from .core import G_MAX, ChannelParams, DomainError, TeleporterParams
from .fidelity import channel_constants

PARAM_NAMES = ("g_q", "g_p", "theta")
DEFAULT_BOUNDS = {"g_q": (0.0, G_MAX), "g_p": (0.0, G_MAX), "theta": (0.01, math.pi / 2 - 0.01)}
# starts are laid out on a lattice over this box, inside the search bounds
DEFAULT_START_BOX = {"g_q": (0.0, 2.0), "g_p": (0.0, 2.0), "theta": (0.01, math.pi / 2 - 0.01)}
STARTS_PER_AXIS = 5
XTOL = 1e-10
FTOL = 1e-12
MAX_ITER = 3000
COARSE_XTOL = 1e-4
COARSE_FTOL = 1e-9
POLISH = 3


class NonFiniteObjective(ArithmeticError):
    def __init__(self, params, value):
        super().__init__(f"objective returned {value!r} at {params}")
        self.params = params
        self.value = value


@dataclass(frozen=True)
class FreeParamSet:
    """Which of g_q, g_p, theta are optimized; ``base`` supplies T and the fixed values."""

    free: tuple[str, ...]
    base: TeleporterParams = field(default_factory=lambda: TeleporterParams(math.pi / 4))

    def __post_init__(self):
        names = tuple(self.free)
        if not names:
            raise DomainError("at least one parameter must be free")
        unknown = set(names) - set(PARAM_NAMES)
        if unknown:
            raise DomainError(f"unknown free parameters {sorted(unknown)}; choose from {PARAM_NAMES}")
        if len(set(names)) != len(names):
            raise DomainError(f"duplicate free parameters in {names}")
        object.__setattr__(self, "free", tuple(n for n in PARAM_NAMES if n in names))

    @classmethod
    def parse(cls, text: str, base: TeleporterParams | None = None) -> FreeParamSet:
        """From a comma list such as ``"gq,gp,theta"`` (``gq``/``g_q`` both accepted)."""
        aliases = {"gq": "g_q", "gp": "g_p"}
        names = [aliases.get(t.strip(), t.strip()) for t in text.split(",") if t.strip()]
        if base is None:
            return cls(tuple(names))
        return cls(tuple(names), base)

    def params_at(self, x: Sequence[float]) -> TeleporterParams:
        return self.base.replace(**dict(zip(self.free, (float(v) for v in x))))


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_params: TeleporterParams
    starts_used: int
    converged: bool
    iterations: int

    def to_dict(self) -> dict:
        p = self.best_params
        return {
            "best_value": self.best_value,
            "best_params": {"theta": p.theta, "g_q": p.g_q, "g_p": p.g_p, "T": p.T},
            "starts_used": self.starts_used,
            "converged": self.converged,
            "iterations": self.iterations,
        }


class AverageObjective:
    """Closed-form average fidelity over ``dist``; ``raw`` skips per-call parameter validation."""

    def __init__(self, dist, c: ChannelParams):
        self._f, self._parameter = raw_average(dist)
        self._consts = channel_constants(c)

    def __call__(self, p: TeleporterParams) -> float:
        return self.raw(p.theta, p.g_q, p.g_p, p.T)

    def raw(self, theta: float, g_q: float, g_p: float, T: float) -> float:
        return self._f(theta, g_q, g_p, T, self._consts, self._parameter)


def _reflect(x, lo, hi):
    """Fold each coordinate of ``x`` back into [lo, hi] by mirror reflection at the faces."""
    out = []
    for v, a, b in zip(x, lo, hi):
        width = b - a
        if width <= 0.0:
            out.append(a)
            continue
        y = math.fmod(v - a, 2.0 * width)
        if y < 0.0:
            y += 2.0 * width
        out.append(a + (2.0 * width - y if y > width else y))
    return out


def _initial_simplex(f, x0, step, lo, hi):
    simplex = [list(x0)]
    for i in range(len(x0)):
        x = list(x0)
        x[i] += step[i]
        if x[i] > hi[i]:
            x[i] = x0[i] - step[i]
        simplex.append(_reflect(x, lo, hi))
    return simplex, [f(x) for x in simplex]


def _nelder_mead(f, simplex, values, lo, hi, xtol, ftol, max_iter):
    """Minimize ``f`` from the given simplex; points leaving the box are folded back by reflection.

    Returns the final (sorted) simplex and values so a descent can be resumed.
    """
    n = len(simplex) - 1
    converged = False
    it = 0
    while it < max_iter:
        order = sorted(range(n + 1), key=values.__getitem__)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        best = simplex[0]
        diameter = max(abs(v - b) for x in simplex[1:] for v, b in zip(x, best))
        if diameter < xtol and values[-1] - values[0] < ftol:
            converged = True
            break
        it += 1
        centroid = [sum(col) / n for col in zip(*simplex[:-1])]
        worst = simplex[-1]
        xr = _reflect([2.0 * c - w for c, w in zip(centroid, worst)], lo, hi)
        fr = f(xr)
        if fr < values[0]:
            xe = _reflect([3.0 * c - 2.0 * w for c, w in zip(centroid, worst)], lo, hi)
            fe = f(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        toward = xr if fr < values[-1] else worst
        xc = _reflect([0.5 * (c + t) for c, t in zip(centroid, toward)], lo, hi)
        fc = f(xc)
        if fc < min(fr, values[-1]):
            simplex[-1], values[-1] = xc, fc
            continue
        for i in range(1, n + 1):
            simplex[i] = [0.5 * (b + v) for b, v in zip(best, simplex[i])]
            values[i] = f(simplex[i])
    order = sorted(range(n + 1), key=values.__getitem__)
    return [simplex[i] for i in order], [values[i] for i in order], converged, it


def maximize(
    objective: Callable[[TeleporterParams], float],
    free: FreeParamSet,
    bounds: Mapping[str, tuple[float, float]] | None = None,
    *,
    starts_per_axis: int = STARTS_PER_AXIS,
    start_box: Mapping[str, tuple[float, float]] | None = None,
    extra_starts: Sequence[Mapping[str, float]] = (),
    xtol: float = XTOL,
    ftol: float = FTOL,
    max_iter: int = MAX_ITER,
    polish: int = POLISH,
) -> OptimizationResult:
    """Maximize ``objective`` over the free parameters inside ``bounds``.

    A Nelder-Mead descent on ``-objective`` runs from every point of a fixed
    lattice of starts (``starts_per_axis`` per free axis, cell centres of
    ``start_box``), then from each of ``extra_starts``. All descents stop at
    a coarse tolerance first; the ``polish`` best are resumed until the simplex
    diameter is below ``xtol`` and the value spread below ``ftol``. The best
    result wins; ties go to the earliest start.
    """
    bounds = {**DEFAULT_BOUNDS, **(bounds or {})}
    start_box = {**DEFAULT_START_BOX, **(start_box or {})}
    lo = [float(bounds[n][0]) for n in free.free]
    hi = [float(bounds[n][1]) for n in free.free]
    if any(a > b for a, b in zip(lo, hi)):
        raise DomainError(f"empty bounds {bounds}")
    # the search box is a product of intervals, so valid corners make every point valid
    free.params_at(lo)
    free.params_at(hi)

    raw = getattr(objective, "raw", None)
    base = free.base
    slots = [PARAM_NAMES.index(n) for n in free.free]

    def negated(x):
        if raw is None:
            value = objective(free.params_at(x))
        else:
            full = [base.g_q, base.g_p, base.theta]
            for i, v in zip(slots, x):
                full[i] = v
            value = raw(full[2], full[0], full[1], base.T)
        if not math.isfinite(value):
            raise NonFiniteObjective(free.params_at(x), value)
        return -value

    axes, step = [], []
    for name, a, b in zip(free.free, lo, hi):
        s_lo, s_hi = max(start_box[name][0], a), min(start_box[name][1], b)
        axes.append([s_lo + (k + 0.5) / starts_per_axis * (s_hi - s_lo) for k in range(starts_per_axis)])
        step.append(0.1 * (s_hi - s_lo) if s_hi > s_lo else 0.1)
    starts = [list(pt) for pt in itertools.product(*axes)]
    starts += [[float(s[n]) for n in free.free] for s in extra_starts]

    # every start descends to a coarse tolerance; the most promising are then resumed to full tolerance
    runs = []
    for index, x0 in enumerate(starts):
        simplex, values = _initial_simplex(negated, _reflect(x0, lo, hi), step, lo, hi)
        simplex, values, ok, iters = _nelder_mead(
            negated, simplex, values, lo, hi, max(xtol, COARSE_XTOL), max(ftol, COARSE_FTOL), max_iter
        )
        runs.append((values[0], index, simplex, values, ok, iters))
    runs.sort(key=lambda run: (run[0], run[1]))
    best = None
    for _, index, simplex, values, ok, iters in runs[:polish]:
        if not ok or xtol < COARSE_XTOL or ftol < COARSE_FTOL:
            simplex, values, ok, more = _nelder_mead(negated, simplex, values, lo, hi, xtol, ftol, max_iter - iters)
            iters += more
        key = (values[0], index)
        if best is None or key < best[0]:
            best = (key, simplex[0], ok, iters)
    (fx, _), x, ok, iters = best
    return OptimizationResult(
        best_value=-fx,
        best_params=free.params_at(x),
        starts_used=len(starts),
        converged=ok,
        iterations=iters,
    )


def optimize_profile(
    dist,
    T: float,
    c: ChannelParams,
    free: FreeParamSet | Sequence[str] = PARAM_NAMES,
    *,
    warm_start: bool = True,
    **options,
) -> OptimizationResult:
    """Maximize the closed-form average fidelity over ``dist`` for the given scenario.

    For the line distribution with g_p free, one extra start is seeded with
    the optimal g_p at theta = pi/4.
    """
    if not isinstance(free, FreeParamSet):
        free = FreeParamSet(tuple(free), TeleporterParams(math.pi / 4, 1.0, 1.0, T))
    elif free.base.T != T:
        free = FreeParamSet(free.free, free.base.replace(T=T))

    objective = AverageObjective(dist, c)
    extra = list(options.pop("extra_starts", ()))
    if warm_start and isinstance(dist, LineDist) and "g_p" in free.free:
        seed = {"g_q": 1.0 / math.sqrt(T), "theta": math.pi / 4}
        seed["g_p"] = min(gp_opt_line(math.pi / 4, T, c), G_MAX)
        extra.append({n: seed[n] for n in free.free})
    return maximize(objective, free, extra_starts=extra, **options)


def sts_value(dist, T: float, c: ChannelParams) -> float:
    """Standard-scheme average fidelity (g_q = g_p = 1, theta = pi/4)."""
    return avg_fidelity(TeleporterParams(math.pi / 4, 1.0, 1.0, T), c, dist)
