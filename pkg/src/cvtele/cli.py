"""Command-line interface: eval, avg, optimize, sweep and oracle subcommands.

Exit codes: 0 success, 2 flag/domain/config error, 3 non-positive G,
4 non-finite objective during optimization, 5 oracle deviation above tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .averaging import CircleDist, GaussDist, LineDist, avg_fidelity
from .core import ChannelParams, DomainError, NonPositiveG, TeleporterParams, derived_coeffs
from .fidelity import CoherentAmplitude, fidelity_from_kernel, kernel
from .optimize import FreeParamSet, NonFiniteObjective, maximize, optimize_profile
from .oracle import avg_by_quadrature, run_oracle
from .sweeps import PRESETS, ConfigError, SweepSpec, preset, write_sweep

EXIT_OK, EXIT_USAGE, EXIT_NONPOSITIVE_G, EXIT_NONFINITE, EXIT_ORACLE = 0, 2, 3, 4, 5
FIXED_ALIASES = {
    "theta": "theta", "gq": "g_q", "g_q": "g_q", "gp": "g_p", "g_p": "g_p", "T": "T",
    "kappa_t": "kappa_t", "kappa-t": "kappa_t", "nbar": "n_bar", "n_bar": "n_bar", "r": "r",
}


class UsageError(Exception):
    """Command-line usage error reported with exit code 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        return "%.17g" % obj
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    return dumps(float(obj))


def _add_scenario_flags(p):
    p.add_argument("--theta", type=float, default=math.pi / 4, help="beam-splitter angle (default pi/4)")
    p.add_argument("--gq", type=float, default=1.0, help="position gain g_q (default 1)")
    p.add_argument("--gp", type=float, default=1.0, help="momentum gain g_p (default 1)")
    p.add_argument("--T", type=float, default=1.0, help="Bell-measurement transmissivity (default 1)")
    p.add_argument("--kappa-t", type=float, default=0.0, help="channel decay kappa*t (default 0)")
    p.add_argument("--nbar", type=float, default=0.0, help="thermal photon number (default 0)")
    p.add_argument("--r", type=float, default=0.0, help="resource squeezing (default 0)")


def _add_dist_flags(p, kinds):
    p.add_argument("--dist", choices=kinds, required=True)
    p.add_argument("--L", type=float, help="line half-width")
    p.add_argument("--A", type=float, help="circle amplitude")
    p.add_argument("--chi", type=float, help="Gaussian variance parameter")


def _scenario(ns):
    return (
        TeleporterParams(ns.theta, ns.gq, ns.gp, ns.T),
        ChannelParams(ns.kappa_t, ns.nbar, ns.r),
    )


def _distribution(ns):
    needed = {"line": "L", "circle": "A", "gauss": "chi"}[ns.dist]
    value = getattr(ns, needed)
    if value is None:
        raise UsageError(f"--dist {ns.dist} needs --{needed}")
    return {"line": LineDist, "circle": CircleDist, "gauss": GaussDist}[ns.dist](value), {"kind": ns.dist, needed: value}


def cmd_eval(ns):
    p, c = _scenario(ns)
    eps = CoherentAmplitude(ns.eps_re, ns.eps_im)
    coeffs, kern = derived_coeffs(p, c), kernel(p, c)
    return {
        "fidelity": fidelity_from_kernel(coeffs, kern, complex(eps)),
        "K1": kern.K1,
        "K2": kern.K2,
        "G": kern.G,
        "f": [coeffs.f1, coeffs.f2, coeffs.f3, coeffs.f4],
        "Gamma": coeffs.Gamma,
    }


def cmd_avg(ns):
    p, c = _scenario(ns)
    dist, doc = _distribution(ns)
    value = avg_by_quadrature(p, c, dist) if ns.quadrature else avg_fidelity(p, c, dist)
    return {"avg_fidelity": value, "dist": doc, "method": "quadrature" if ns.quadrature else "closed-form"}


def _parse_fixed(items):
    fixed = {}
    for item in items:
        name, sep, value = item.partition("=")
        if not sep or name.strip() not in FIXED_ALIASES:
            raise UsageError(f"--fixed expects name=value with name in {sorted(set(FIXED_ALIASES.values()))}, got {item!r}")
        try:
            fixed[FIXED_ALIASES[name.strip()]] = float(value)
        except ValueError:
            raise UsageError(f"--fixed value for {name} is not a number: {value!r}") from None
    return fixed


def cmd_optimize(ns):
    for name, value in _parse_fixed(ns.fixed).items():
        setattr(ns, {"g_q": "gq", "g_p": "gp", "n_bar": "nbar"}.get(name, name), value)
    p, c = _scenario(ns)
    free = FreeParamSet.parse(ns.free, p)
    if ns.dist == "point":
        eps = complex(CoherentAmplitude(ns.eps_re, ns.eps_im))
        result = maximize(lambda q: fidelity_from_kernel(derived_coeffs(q, c), kernel(q, c), eps), free)
        doc = {"kind": "point", "eps": [eps.real, eps.imag]}
    else:
        dist, doc = _distribution(ns)
        result = optimize_profile(dist, p.T, c, free)
    return {**result.to_dict(), "free": list(free.free), "dist": doc}


def cmd_sweep(ns):
    if (ns.config is None) == (ns.preset is None):
        raise UsageError("sweep needs exactly one of --config or --preset")
    if ns.threads < 1:
        raise UsageError("--threads must be >= 1")
    if ns.preset is not None:
        spec = preset(ns.preset)
    else:
        try:
            with open(ns.config) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config!r}: {exc}") from None
        spec = SweepSpec.from_dict(doc)
    out = ns.out or spec.output
    if out is None:
        raise UsageError("sweep needs --out (or an 'output' entry in the config)")
    rows = write_sweep(spec, out, ns.threads)
    return {"output": out, "rows": len(rows), "curves": len(spec.curves)}


def cmd_oracle(ns):
    if ns.trials < 1:
        raise UsageError("--trials must be >= 1")
    if not (ns.tol >= 0.0):
        raise UsageError("--tol must be >= 0")
    report = run_oracle(ns.trials, ns.seed, ns.tol, ideal=ns.ideal)
    return report, (EXIT_OK if report["failures"] == 0 else EXIT_ORACLE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cvtele", description="Coherent-state teleportation fidelity with tunable parameters.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="point fidelity and kernel coefficients")
    _add_scenario_flags(p)
    p.add_argument("--eps-re", type=float, default=0.0)
    p.add_argument("--eps-im", type=float, default=0.0)
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("avg", help="fidelity averaged over an amplitude distribution")
    _add_scenario_flags(p)
    _add_dist_flags(p, ["line", "circle", "gauss"])
    p.add_argument("--quadrature", action="store_true", help="integrate the characteristic functions numerically")
    p.set_defaults(handler=cmd_avg)

    p = sub.add_parser("optimize", help="maximize the (average) fidelity over free parameters")
    _add_scenario_flags(p)
    _add_dist_flags(p, ["point", "line", "circle", "gauss"])
    p.add_argument("--eps-re", type=float, default=0.0)
    p.add_argument("--eps-im", type=float, default=0.0)
    p.add_argument("--free", default="gq,gp,theta", help="comma list drawn from gq, gp, theta")
    p.add_argument("--fixed", action="append", default=[], metavar="NAME=VALUE", help="override a scenario value")
    p.set_defaults(handler=cmd_optimize)

    p = sub.add_parser("sweep", help="write a CSV sweep from a JSON config or a figure preset")
    p.add_argument("--config", help="path to a JSON sweep config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--threads", type=int, default=1, help="parallel worker processes (results are identical)")
    p.set_defaults(handler=cmd_sweep)

    p = sub.add_parser("oracle", help="compare closed forms with the characteristic-function oracle")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--ideal", action="store_true", help="force every scenario to the lossless r = 0 standard scheme")
    p.set_defaults(handler=cmd_oracle)
    return parser


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        out = ns.handler(ns)
        code = EXIT_OK
        if isinstance(out, tuple):
            out, code = out
    except NonPositiveG as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONPOSITIVE_G
    except NonFiniteObjective as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except (UsageError, DomainError, ConfigError) as exc:
        print(f"error: {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}", file=sys.stderr)
        return EXIT_USAGE
    print(dumps(out))
    return code


if __name__ == "__main__":
    sys.exit(main())
