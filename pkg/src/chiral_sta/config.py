"""YAML scenario and sweep files.

A scenario file is one flat mapping of the keys in ``scenario.FLAT_KEYS``; an
optional ``figure`` key starts from a canonical scenario and the remaining keys
override it.  Errors carry the line number of the offending key.
"""

from __future__ import annotations

from pathlib import Path

import yaml

from .errors import ChiralStaError, ScenarioError
from .experiments import get_scenario
from .scenario import Scenario, from_flat, to_flat
from .sweeps import Axis, SweepSpec, get_sweep

SWEEP_KEYS = ("name", "scenario", "figure", "axes", "trials", "reducer", "seed")


def _parse(text: str):
    """Plain data plus a key -> line map for the top-level mapping."""
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text)
    except yaml.MarkedYAMLError as exc:
        line = exc.problem_mark.line + 1 if exc.problem_mark is not None else None
        raise ScenarioError(f"malformed YAML: {exc.problem}", line=line) from None
    if data is None:
        return {}, {}
    if not isinstance(data, dict):
        raise ScenarioError("expected a mapping of keys to values", line=1)
    lines = {}
    if isinstance(node, yaml.MappingNode):
        for k, _ in node.value:
            lines[k.value] = k.start_mark.line + 1
    return data, lines


def _locate(exc: ScenarioError, lines: dict, default: int) -> ScenarioError:
    if exc.line is not None:
        return exc
    line = lines.get(exc.key, default) if exc.key is not None else default
    return ScenarioError(exc.detail, line=line, key=exc.key)


def scenario_from_mapping(data: dict, lines: dict | None = None) -> Scenario:
    lines = lines or {}
    end = max(lines.values(), default=1)
    flat = dict(data)
    figure = flat.pop("figure", None)
    try:
        base = None
        if figure is not None:
            try:
                base = get_scenario(str(figure))
            except LookupError as exc:
                raise ScenarioError(str(exc.args[0]), key="figure") from None
        return from_flat(flat, base=base)
    except ScenarioError as exc:
        raise _locate(exc, lines, end) from None
    except (ChiralStaError, TypeError, ValueError) as exc:
        raise ScenarioError(str(exc), line=end) from None


def load_scenario(text: str) -> Scenario:
    """Parse then validate a scenario document."""
    data, lines = _parse(text)
    return scenario_from_mapping(data, lines)


def load_scenario_file(path) -> Scenario:
    return load_scenario(Path(path).read_text())


def dump_scenario(s: Scenario) -> str:
    """Complete flat document; ``load_scenario`` of the result reproduces ``s``."""
    return yaml.safe_dump(to_flat(s), sort_keys=False, default_flow_style=None)


def _axis_from(name, spec, line) -> Axis:
    try:
        if isinstance(spec, dict):
            unknown = set(spec) - {"start", "stop", "num", "values"}
            if unknown:
                raise ScenarioError(f"axis {name!r}: unknown entry {sorted(unknown)[0]!r}")
            if "values" in spec:
                return Axis(name, tuple(spec["values"]))
            return Axis.linspace(name, float(spec["start"]), float(spec["stop"]), int(spec["num"]))
        if isinstance(spec, (list, tuple)):
            return Axis(name, tuple(spec))
        return Axis(name, (spec,))
    except ScenarioError as exc:
        raise ScenarioError(exc.detail, line=line, key=name) from None
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"axis {name!r}: {exc}", line=line, key=name) from None


def load_sweep(text: str, base_dir: Path | None = None) -> tuple[Scenario, SweepSpec]:
    """Sweep document: ``figure`` (canonical sweep) and/or ``scenario`` plus ``axes``.

    ``scenario`` is either a path to a scenario file or an inline mapping.
    """
    data, lines = _parse(text)
    end = max(lines.values(), default=1)
    unknown = [k for k in data if k not in SWEEP_KEYS]
    if unknown:
        raise ScenarioError(f"unknown key {unknown[0]!r}", line=lines.get(unknown[0], end))
    base = spec = None
    if "figure" in data:
        try:
            base, spec = get_sweep(str(data["figure"]))
        except LookupError as exc:
            raise ScenarioError(str(exc.args[0]), line=lines.get("figure", end)) from None
    if "scenario" in data:
        sc = data["scenario"]
        line = lines.get("scenario", end)
        if isinstance(sc, str):
            path = Path(sc) if base_dir is None else base_dir / sc
            try:
                base = load_scenario_file(path)
            except OSError as exc:
                raise ScenarioError(f"cannot read scenario file: {exc}", line=line) from None
        elif isinstance(sc, dict):
            try:
                base = scenario_from_mapping(sc)
            except ScenarioError as exc:
                raise ScenarioError(exc.detail, line=line) from None
        else:
            raise ScenarioError("scenario must be a path or a mapping", line=line)
    if base is None:
        raise ScenarioError("missing required key 'scenario' (or 'figure')", line=end)
    if "axes" in data:
        axes_raw = data["axes"]
        if not isinstance(axes_raw, dict):
            raise ScenarioError("axes must map axis names to values", line=lines.get("axes", end))
        axes = tuple(_axis_from(k, v, lines.get("axes", end)) for k, v in axes_raw.items())
    elif spec is not None:
        axes = spec.axes
    else:
        raise ScenarioError("missing required key 'axes'", line=end)
    kw = {}
    if spec is not None:
        kw = dict(trials=spec.trials, reducer=spec.reducer, seed=spec.seed, name=spec.name)
    for key in ("trials", "reducer", "seed", "name"):
        if key in data:
            kw[key] = data[key]
    try:
        return base, SweepSpec(axes, **kw)
    except ScenarioError as exc:
        raise _locate(exc, lines, end) from None
    except TypeError as exc:
        raise ScenarioError(str(exc), line=end) from None


def load_sweep_file(path) -> tuple[Scenario, SweepSpec]:
    path = Path(path)
    return load_sweep(path.read_text(), base_dir=path.parent)


def dump_sweep(spec: SweepSpec, scenario: str | dict) -> str:
    doc = {
        "name": spec.name,
        "scenario": scenario,
        "axes": {a.name: list(a.values) for a in spec.axes},
        "trials": spec.trials,
        "reducer": spec.reducer,
    }
    if spec.seed is not None:
        doc["seed"] = spec.seed
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)

