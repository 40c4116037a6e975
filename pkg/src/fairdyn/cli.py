"""Command-line entry point: ``fairdyn {simulate,equilibria,sweep,compare}``.

Exit codes: 0 on success, 2 for configuration errors, 3 for numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import re
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import equilibrium_report, gap_slope
from .config import load_config
from .errors import ConfigError, FairdynError
from .harness import compare, detect_convergence, run_trajectory, sweep_grid
from .state import mean_qualification

log = logging.getLogger("fairdyn")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


# serialization


def _fmt(x):
    """Text for one scalar; floats keep 17 significant digits."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, ".17g")
    return str(x)


def to_json(obj, indent=0):
    """JSON text with floats at 17 significant digits; infinities become strings."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v, indent + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (float, np.floating)) and not math.isfinite(float(obj)):
        return f'"{_fmt(obj)}"'
    if isinstance(obj, (int, float, np.integer, np.floating)):
        return _fmt(obj)
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
        return
    Path(out).write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


# commands


def simulate_header(n):
    cols = ["t"] + [f"s_{g}" for g in range(1, n + 1)] + ["s_bar", "disparity_l1"]
    for name in ("phi", "acc", "fpr", "fnr"):
        cols += [f"{name}_{g}" for g in range(1, n + 1)]
    return cols


def _require_s0(cfg, command):
    if cfg.s0 is None:
        raise ConfigError(f"{command} needs a starting state s0", key="s0", source=cfg.source)


def _warn_feedback_sign(cfg, specs):
    """Warn when a feedback gain has the wrong sign for the hyperplane it would act on."""
    sc = cfg.scenario
    eps = []
    for spec in specs:
        while spec is not None:
            if spec.tag == "feedback_control":
                eps.append(spec.epsilon)
            spec = spec.inner
    if not eps or sc.U is None or sc.dynamics.model != "replicator":
        return
    rep = equilibrium_report(sc.mu, sc.d, sc.U, sc.V)
    if not rep.hyperplanes:
        return
    ref = mean_qualification(sc.mu, cfg.s0) if cfg.s0 is not None else 0.5
    _, phi, s_bar, _, _ = min(rep.hyperplanes, key=lambda h: abs(h[2] - ref))
    slope = gap_slope(sc.d, sc.U, phi)
    for e in eps:
        if np.sign(e) * np.sign(slope) <= 0:
            log.warning(
                "feedback_control epsilon=%g has the wrong sign for the hyperplane at "
                "s_bar=%.6g (gap slope %.3g); disparity will grow rather than shrink",
                e, s_bar, slope,
            )


def cmd_simulate(cfg, fmt, out):
    _require_s0(cfg, "simulate")
    _warn_feedback_sign(cfg, [cfg.scenario.intervention])
    recs = run_trajectory(cfg.scenario, cfg.s0, cfg.steps, cfg.stride)
    n = cfg.scenario.n
    if fmt == "csv":
        rows = (
            [r.t, *r.s, r.s_bar, r.disparity_l1, *r.phi, *r.acc, *r.fpr, *r.fnr]
            for r in recs
        )
        _emit(_csv(simulate_header(n), rows), out)
        return EXIT_OK
    doc = {
        "intervention": cfg.scenario.intervention.label,
        "records": [
            {
                "t": r.t,
                "s": r.s,
                "s_bar": r.s_bar,
                "disparity_l1": r.disparity_l1,
                "phi": r.phi,
                "acc": r.acc,
                "fpr": r.fpr,
                "fnr": r.fnr,
                "gap": r.gap,
            }
            for r in recs
        ],
    }
    if cfg.stride == 1 and len(recs) > 1:
        conv = detect_convergence(recs, min(cfg.window, len(recs) - 1), cfg.tol, cfg.scenario)
        doc["convergence"] = {
            "converged": conv.converged,
            "steps_to_convergence": conv.steps_to_convergence,
            "limit_state": conv.limit_state,
            "s_bar": conv.s_bar,
            "disparity_l1": conv.disparity_l1,
            "nearest": conv.nearest,
            "hyperplane": conv.hyperplane,
        }
    _emit(to_json(doc), out)
    return EXIT_OK


EQUILIBRIA_FIELDS = (
    "phi_star", "phi_plus", "phi_minus", "s_bar_plus", "s_bar_minus",
    "lambda_plus", "lambda_minus", "stability_plus", "stability_minus",
)


def cmd_equilibria(cfg, fmt, out):
    sc = cfg.scenario
    if sc.dynamics.model != "replicator":
        raise ConfigError(
            f"equilibria are defined for replicator dynamics, not {sc.dynamics.model}",
            key="dynamics", source=cfg.source,
        )
    rep = equilibrium_report(sc.mu, sc.d, sc.U, sc.V)
    doc = rep.to_dict()
    if fmt == "csv":
        _emit(_csv(EQUILIBRIA_FIELDS, [[doc[k] for k in EQUILIBRIA_FIELDS]]), out)
    else:
        _emit(to_json(doc), out)
    return EXIT_OK


SWEEP_HEADER = ("s1", "s2", "ds1", "ds2", "acc1", "fpr1", "fnr1")


def _slug(label):
    return re.sub(r"[^A-Za-z0-9.]+", "_", label).strip("_")


def cmd_sweep(cfg, fmt, out):
    sc = cfg.scenario
    if sc.n != 2:
        raise ConfigError(f"sweep needs exactly two groups, mu has {sc.n}", key="mu", source=cfg.source)
    if cfg.resolution < 2:
        raise ConfigError("resolution must be at least 2", key="resolution", source=cfg.source)
    specs = cfg.interventions or (sc.intervention,)
    if len(specs) > 1 and out is None:
        raise ConfigError(
            "sweeping several interventions writes one file each; pass --out", source=cfg.source
        )
    _warn_feedback_sign(cfg, specs)
    for k, spec in enumerate(specs):
        res = sweep_grid(sc.with_intervention(spec), cfg.resolution)
        if fmt == "csv":
            text = _csv(SWEEP_HEADER, res.rows())
        else:
            text = to_json([dict(zip(SWEEP_HEADER, row)) for row in res.rows()])
        target = out
        if len(specs) > 1:
            p = Path(out)
            target = p.with_name(f"{p.stem}_{k + 1}_{_slug(spec.label)}{p.suffix}")
        _emit(text, target)
    return EXIT_OK


COMPARE_HEADER = (
    "intervention", "terminal_s_bar", "terminal_disparity_l1",
    "steps_to_convergence", "eo_satisfied", "dp_satisfied",
)


def cmd_compare(cfg, fmt, out):
    _require_s0(cfg, "compare")
    if len(cfg.interventions) < 2:
        raise ConfigError(
            f"compare needs at least two interventions, got {len(cfg.interventions)}",
            key="interventions", source=cfg.source,
        )
    _warn_feedback_sign(cfg, cfg.interventions)
    rows = compare(cfg.scenario, cfg.interventions, cfg.s0, cfg.steps, cfg.window, cfg.tol)
    if fmt == "csv":
        _emit(_csv(COMPARE_HEADER, rows), out)
    else:
        _emit(to_json([r._asdict() for r in rows]), out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "equilibria": cmd_equilibria,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
}


def _positive(v):
    n = int(v)
    if n < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return n


def build_parser():
    p = argparse.ArgumentParser(prog="fairdyn", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        c = sub.add_parser(name)
        c.add_argument("--config", required=True, help="scenario TOML file")
        c.add_argument("--out", default=None, help="output path (default: stdout)")
        c.add_argument("--format", choices=("csv", "json"), default="csv")
        c.add_argument("--steps", type=_positive, default=None)
        c.add_argument("--stride", type=_positive, default=None)
        c.add_argument("--resolution", type=_positive, default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="fairdyn: %(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        overrides = {k: getattr(args, k) for k in ("steps", "stride", "resolution")}
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if overrides:
            cfg = replace(cfg, **overrides)
        return COMMANDS[args.command](cfg, args.format, args.out)
    except ConfigError as exc:
        print(f"fairdyn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FairdynError as exc:
        print(f"fairdyn: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
