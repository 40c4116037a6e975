"""Scenario files.

A scenario file is TOML with these top-level keys::

    mu = [0.5, 0.5]
    s0 = [0.6, 0.4]
    U = [[0.1, 5.5], [0.5, 1.0]]
    V = [[0.5, -0.5], [-0.25, 1.0]]
    distribution = { family = "gaussian", mean0 = -1.0, mean1 = 1.0, sigma = 1.0 }
    dynamics = { model = "replicator" }
    intervention = { tag = "group_independent" }
    interventions = [{ tag = "group_independent" }, { tag = "laissez_faire" }]

    [run]
    steps = 10000
    stride = 1
    resolution = 40
    window = 100
    tol = 1e-10

Only ``mu`` and ``V`` are always required; ``U`` is required by replicator
dynamics. Every validation failure is raised as :class:`ConfigError` carrying
the offending key and, when it can be located, its line in the file.
"""

from __future__ import annotations

import math
import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .classifier import ClassifierPayoffs
from .dist import make_pair
from .dynamics import AgentSuccess, CostDistribution, DynamicsModel
from .errors import ConfigError, FairdynError
from .harness import DEFAULT_STEPS, DEFAULT_TOL, DEFAULT_WINDOW
from .interventions import InterventionSpec
from .scenario import Scenario
from .state import population_state

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TOP_KEYS = ("mu", "s0", "U", "V", "distribution", "dynamics", "intervention", "interventions", "run")
RUN_KEYS = {"steps": int, "stride": int, "resolution": int, "window": int, "tol": float}
DEFAULT_RESOLUTION = 40


@dataclass(frozen=True, eq=False)
class RunConfig:
    scenario: Scenario
    s0: np.ndarray | None
    interventions: tuple
    steps: int = DEFAULT_STEPS
    stride: int = 1
    resolution: int = DEFAULT_RESOLUTION
    window: int = DEFAULT_WINDOW
    tol: float = DEFAULT_TOL
    source: str = "<string>"


def line_of(text, key):
    """1-based line where ``key`` is first assigned or opened as a table, else None."""
    k = re.escape(key)
    patterns = (
        rf"^\s*{k}\s*=",
        rf"^\s*\[\s*{k}\s*\]",
        rf"[{{,]\s*{k}\s*=",
    )
    for pat in patterns:
        m = re.search(pat, text, flags=re.MULTILINE)
        if m:
            return text.count("\n", 0, m.start()) + 1
    return None


class _Parser:
    def __init__(self, text, source):
        self.text = text
        self.source = source

    def error(self, message, key):
        return ConfigError(message, key=key, line=line_of(self.text, key), source=self.source)

    @contextmanager
    def section(self, key):
        """Re-raise validation errors from model constructors against ``key``."""
        try:
            yield
        except ConfigError as exc:
            if exc.source is not None:
                raise
            inner = exc.key or key
            msg = str(exc)
            if exc.line is not None:
                msg = msg.split(": ", 1)[-1]
            raise self.error(f"{key}: {msg}", inner) from None
        except (FairdynError, ValueError, TypeError) as exc:
            raise self.error(f"{key}: {exc}", key) from None

    def real(self, key, v):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise self.error(f"{key} must be a number, got {v!r}", key)
        v = float(v)
        if not math.isfinite(v):
            raise self.error(f"{key} must be finite, got {v}", key)
        return v

    def vector(self, key, v):
        if not isinstance(v, list) or not v:
            raise self.error(f"{key} must be a non-empty list of numbers", key)
        return np.array([self.real(key, x) for x in v])

    def matrix(self, key, v):
        if not isinstance(v, list) or not all(isinstance(r, list) for r in v):
            raise self.error(f"{key} must be a 2x2 nested list", key)
        rows = [[self.real(key, x) for x in r] for r in v]
        shape = (len(rows), len(rows[0]) if rows else 0)
        if shape != (2, 2) or any(len(r) != 2 for r in rows):
            widths = ", ".join(str(len(r)) for r in rows)
            raise self.error(f"{key} must be 2x2, got {len(rows)} rows of length {widths or 0}", key)
        return np.array(rows)

    def table(self, key, v, allowed):
        if not isinstance(v, dict):
            raise self.error(f"{key} must be a table", key)
        extra = set(v) - set(allowed)
        if extra:
            bad = sorted(extra)[0]
            raise self.error(f"{key}: unknown key {bad!r}; allowed: {sorted(allowed)}", bad)
        return v

    # sections

    def distribution(self, raw):
        if raw is None:
            raw = {}
        raw = self.table("distribution", raw, ("family", "mean0", "mean1", "sigma"))
        family = raw.get("family", "gaussian")
        params = {k: self.real(k, v) for k, v in raw.items() if k != "family"}
        with self.section("distribution"):
            return make_pair(family, **params)

    def cost(self, raw):
        raw = self.table("cost", raw, ("family", "lo", "hi", "rate"))
        params = {k: self.real(k, v) for k, v in raw.items() if k != "family"}
        with self.section("cost"):
            return CostDistribution(family=raw.get("family", "uniform"), **params)

    def dynamics(self, raw):
        if raw is None:
            return DynamicsModel()
        raw = self.table("dynamics", raw, ("model", "T", "omega", "cost"))
        kwargs = {"model": raw.get("model", "replicator")}
        if "T" in raw:
            kwargs["T"] = self.matrix("T", raw["T"])
        if "omega" in raw:
            kwargs["omega"] = self.real("omega", raw["omega"])
        if "cost" in raw:
            kwargs["cost"] = self.cost(raw["cost"])
        with self.section("dynamics"):
            return DynamicsModel(**kwargs)

    def intervention(self, raw, key="intervention"):
        raw = self.table(key, raw, ("tag", "epsilon", "delta", "cap", "inner"))
        if "tag" not in raw:
            raise self.error(f"{key} needs a tag", key)
        kwargs = {"tag": raw["tag"]}
        for name in ("epsilon", "delta", "cap"):
            if name in raw:
                kwargs[name] = self.real(name, raw[name])
        if "inner" in raw:
            kwargs["inner"] = self.intervention(raw["inner"], "inner")
        with self.section(key):
            return InterventionSpec(**kwargs)

    def run(self, raw):
        raw = self.table("run", raw or {}, tuple(RUN_KEYS))
        out = {}
        for k, kind in RUN_KEYS.items():
            if k not in raw:
                continue
            v = raw[k]
            if kind is int:
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise self.error(f"run.{k} must be a positive integer, got {v!r}", k)
                out[k] = v
            else:
                v = self.real(k, v)
                if v < 0:
                    raise self.error(f"run.{k} must be nonnegative, got {v}", k)
                out[k] = v
        return out

    def parse(self, data):
        unknown = [k for k in data if k not in TOP_KEYS]
        if unknown:
            raise self.error(f"unknown key {unknown[0]!r}; allowed: {list(TOP_KEYS)}", unknown[0])
        for key in ("mu", "V"):
            if key not in data:
                raise self.error(f"missing required key {key!r}", key)

        mu = self.vector("mu", data["mu"])
        with self.section("V"):
            V = ClassifierPayoffs(self.matrix("V", data["V"]))
        U = None
        if "U" in data:
            with self.section("U"):
                U = AgentSuccess(self.matrix("U", data["U"]))
        d = self.distribution(data.get("distribution"))
        dyn = self.dynamics(data.get("dynamics"))
        if dyn.model == "replicator" and U is None:
            raise self.error("missing required key 'U' (replicator dynamics need agent successes)", "U")

        spec = InterventionSpec()
        if "intervention" in data:
            spec = self.intervention(data["intervention"])
        specs = ()
        if "interventions" in data:
            raw = data["interventions"]
            if not isinstance(raw, list):
                raise self.error("interventions must be a list of tables", "interventions")
            specs = tuple(self.intervention(r, "interventions") for r in raw)

        with self.section("mu"):
            sc = Scenario(mu, V, U, d, dyn, spec)

        s0 = None
        if "s0" in data:
            s0 = self.vector("s0", data["s0"])
            if s0.size != sc.n:
                raise self.error(f"s0 has {s0.size} entries but mu has {sc.n}", "s0")
            with self.section("s0"):
                s0 = population_state(s0)

        return RunConfig(sc, s0, specs, source=self.source, **self.run(data.get("run")))


def parse_config(text, source="<string>"):
    """Parse scenario text into a :class:`RunConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        m = re.search(r"line (\d+)", str(exc))
        raise ConfigError(
            f"malformed TOML: {exc}", line=int(m.group(1)) if m else None, source=source
        ) from None
    return _Parser(text, source).parse(data)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", source=str(path)) from None
    return parse_config(text, str(path))
