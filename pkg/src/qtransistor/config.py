"""Declarative run configuration.

A run is configured by an INI document with up to four sections:

    [run]    scenario / output directory / workers / boundary / times
    [model]  physical parameters (couplings, temperatures, ancilla kind)
    [sweep]  an explicit one-axis sweep (alternative to a scenario)
    [blp]    search settings for the memory-measure scenarios

Exactly one of ``run.scenario`` and a ``[sweep]`` section must be given.
Unknown sections or keys, unparseable values, and out-of-domain values are
all reported with the line they occur on; nothing is computed until the
whole document validates.  Omitted keys fall back to the reference setup
(delta = 3, g = 4, collision window 0.5, T_L = 4, T_M = T_R = 10,
stencil step h = 0.05, sample spacing 0.01).
"""

from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from .metrics import SWEEP_AXES
from .model import COUPLING_PRESETS, ENV_KINDS, ModelConfig, TERMINALS
from .nonmarkov import SearchConfig
from .scenarios import scenario_names

__all__ = ["ConfigError", "SweepSpec", "RunConfig", "parse_config",
           "parse_set_overrides", "manifest_parameters"]


class ConfigError(ValueError):
    """Validation failure; ``problems`` lists one diagnostic per issue."""

    def __init__(self, problems: List[str]):
        self.problems = list(problems)
        super().__init__(
            "invalid configuration:\n"
            + "\n".join(f"  {p}" for p in self.problems))


_BOOLEANS = {"1": True, "yes": True, "true": True, "on": True,
             "0": False, "no": False, "false": False, "off": False}


def _to_bool(raw: str) -> bool:
    try:
        return _BOOLEANS[raw.strip().lower()]
    except KeyError:
        raise ValueError(raw) from None


def _to_terminals(raw: str) -> Tuple[str, ...]:
    items = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not items or any(x not in TERMINALS for x in items):
        raise ValueError(raw)
    return items


@dataclass(frozen=True)
class _Key:
    convert: Callable[[str], Any]
    type_name: str
    check: Optional[Callable[[Any], bool]] = None
    domain: str = ""
    dest: Optional[str] = None  # overrides-dict name when it differs


def _fkey(check=None, domain="", dest=None) -> _Key:
    return _Key(float, "number", check, domain, dest)


def _ikey(check=None, domain="", dest=None) -> _Key:
    return _Key(int, "integer", check, domain, dest)


def _bkey(dest=None) -> _Key:
    return _Key(_to_bool, "boolean", dest=dest)


def _ckey(choices, dest=None) -> _Key:
    choices = tuple(choices)
    return _Key(str.strip, "string", lambda v: v in choices,
                "one of " + ", ".join(choices), dest)


_POS = (lambda v: v > 0, "must be positive")

_MODEL_KEYS: Dict[str, _Key] = {
    "preset": _ckey(COUPLING_PRESETS),
    "delta": _fkey(),
    "env_delta": _fkey(),
    "appendix_delta": _fkey(),
    "g": _fkey(),
    "dt_collision": _fkey(*_POS),
    "sample_dt": _fkey(*_POS),
    "h": _fkey(*_POS, dest="stencil_h"),
    "n_qubits": _ikey(lambda v: v in (2, 3), "must be 2 or 3"),
    "kind": _ckey(ENV_KINDS),
    "epsilon": _fkey(),
    "T_L": _fkey(*_POS),
    "T_M": _fkey(*_POS),
    "T_R": _fkey(*_POS),
    "attach_L": _bkey(),
    "attach_M": _bkey(),
    "attach_R": _bkey(),
}

_RUN_KEYS: Dict[str, _Key] = {
    "scenario": _ckey(scenario_names()),
    "out": _Key(str.strip, "string"),
    "workers": _ikey(lambda v: v >= 1, "must be >= 1"),
    "boundary": _ckey(("left", "right")),
    "t": _fkey(*_POS),
    "t_max": _fkey(*_POS),
}

_SWEEP_KEYS: Dict[str, _Key] = {
    "axis": _ckey(SWEEP_AXES),
    "start": _fkey(),
    "stop": _fkey(),
    "step": _fkey(*_POS),
    "t": _fkey(*_POS),
    "terminals": _Key(_to_terminals, "terminal list",
                      domain="comma-separated subset of L, M, R"),
}

_BLP_KEYS: Dict[str, _Key] = {
    "grid_theta": _ikey(lambda v: v >= 2, "must be >= 2"),
    "grid_phi": _ikey(lambda v: v >= 2, "must be >= 2"),
    "refine_tol": _fkey(*_POS),
    "general_pairs": _bkey(),
}

_SECTIONS = {"run": _RUN_KEYS, "model": _MODEL_KEYS, "sweep": _SWEEP_KEYS,
             "blp": _BLP_KEYS}


@dataclass(frozen=True)
class SweepSpec:
    """An explicit one-axis sweep: grid plus evaluation settings."""

    axis: str
    start: float
    stop: float
    step: float
    t: Optional[float] = None
    terminals: Optional[Tuple[str, ...]] = None

    def grid(self) -> np.ndarray:
        n = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return np.round(self.start + self.step * np.arange(n), 12)


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description (scenario or explicit sweep)."""

    scenario: Optional[str]
    sweep: Optional[SweepSpec]
    overrides: Dict[str, Any]          # model keys plus t / t_max
    out_dir: Optional[str] = None
    workers: int = 1
    boundary: str = "left"
    search: SearchConfig = SearchConfig()

    def model_overrides(self) -> Dict[str, Any]:
        return {k: v for k, v in self.overrides.items()
                if k not in ("t", "t_max")}

    def resolved_model(self) -> ModelConfig:
        over = self.model_overrides()
        preset = over.pop("preset", "baseline")
        return ModelConfig.default(preset, **over)


def _problem_order(problem: str) -> Tuple[int, str]:
    # "line N: ..." first, by N; document-level diagnostics after
    if problem.startswith("line "):
        head = problem[5:].split(":", 1)[0]
        if head.isdigit():
            return (int(head), problem)
    return (10 ** 9, problem)


def _line_map(text: str) -> Dict[Tuple[str, Optional[str]], int]:
    """1-based line numbers of section headers and key assignments."""
    out: Dict[Tuple[str, Optional[str]], int] = {}
    section: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            out.setdefault((section, None), lineno)
            continue
        if raw[:1] in (" ", "\t"):
            continue  # continuation of the previous value
        for delim in "=:":
            if delim in line:
                key = line.split(delim, 1)[0].strip()
                if section is not None and key:
                    out.setdefault((section, key), lineno)
                break
    return out


def _read_ini(text: str) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    parser.optionxform = str  # temperatures are case-sensitive (T_L vs T_l)
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        # subclasses ParsingError, so it must be caught first
        raise ConfigError(
            [f"line {exc.lineno}: key outside any [section]"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError(
            [f"line {lineno}: cannot parse {line.strip()!r}"
             for lineno, line in exc.errors]) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(
            [f"line {exc.lineno}: duplicate key {exc.option!r} in "
             f"[{exc.section}]"]) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(
            [f"line {exc.lineno}: duplicate section [{exc.section}]"]
        ) from None
    except configparser.Error as exc:
        raise ConfigError([str(exc)]) from None
    return parser


def parse_config(text: str) -> RunConfig:
    """Validate an INI document and resolve it into a RunConfig."""
    parser = _read_ini(text)
    lines = _line_map(text)
    problems: List[str] = []

    def at(section: str, key: Optional[str] = None) -> str:
        n = lines.get((section, key))
        return f"line {n}: " if n else ""

    for section in parser.sections():
        if section not in _SECTIONS:
            problems.append(
                f"{at(section)}unknown section [{section}]; expected one of "
                + ", ".join(f"[{s}]" for s in _SECTIONS))

    values: Dict[str, Dict[str, Any]] = {s: {} for s in _SECTIONS}
    for section, table in _SECTIONS.items():
        if not parser.has_section(section):
            continue
        for key, raw in parser.items(section):
            spec = table.get(key)
            if spec is None:
                problems.append(
                    f"{at(section, key)}unknown key {key!r} in [{section}]; "
                    "expected one of " + ", ".join(sorted(table)))
                continue
            try:
                val = spec.convert(raw)
            except (ValueError, TypeError):
                problems.append(
                    f"{at(section, key)}{key} = {raw!r} is not a valid "
                    f"{spec.type_name}")
                continue
            if spec.check is not None and not spec.check(val):
                problems.append(
                    f"{at(section, key)}{key} = {raw!r} out of domain "
                    f"({spec.domain})")
                continue
            values[section][spec.dest or key] = val

    run = values["run"]
    # raw presence, so a misspelled scenario name is reported only once
    has_scenario = parser.has_section("run") and \
        parser.has_option("run", "scenario")
    has_sweep = parser.has_section("sweep")
    if has_scenario == has_sweep:
        which = "both given" if has_scenario else "neither given"
        problems.append(
            "exactly one of run.scenario and a [sweep] section is required "
            f"({which})")

    sweep_spec: Optional[SweepSpec] = None
    if has_sweep and not has_scenario:
        sw = values["sweep"]
        missing = [k for k in ("axis", "start", "stop", "step")
                   if k not in sw]
        for k in missing:
            problems.append(
                f"{at('sweep')}missing required key {k!r} in [sweep]")
        if not missing and not problems:
            if sw["stop"] < sw["start"]:
                problems.append(
                    f"{at('sweep', 'stop')}sweep stop {sw['stop']} is below "
                    f"start {sw['start']}")
            t_eval = sw.get("t", run.get("t"))
            if sw["axis"] != "t" and t_eval is None:
                problems.append(
                    f"{at('sweep')}axis {sw['axis']!r} needs an evaluation "
                    "time: set t in [sweep] or [run]")
            if sw["axis"] == "epsilon" and \
                    values["model"].get("kind") != "qutrit-nonlinear":
                problems.append(
                    f"{at('sweep', 'axis')}epsilon sweep requires "
                    "kind = qutrit-nonlinear in [model]")
            if not problems:
                sweep_spec = SweepSpec(
                    axis=sw["axis"], start=sw["start"], stop=sw["stop"],
                    step=sw["step"], t=t_eval, terminals=sw.get("terminals"))

    if problems:
        raise ConfigError(sorted(problems, key=_problem_order))

    overrides = dict(values["model"])
    for k in ("t", "t_max"):
        if k in run:
            overrides[k] = run[k]

    rc = RunConfig(
        scenario=run.get("scenario"),
        sweep=sweep_spec,
        overrides=overrides,
        out_dir=run.get("out"),
        workers=run.get("workers", 1),
        boundary=run.get("boundary", "left"),
        search=SearchConfig(**values["blp"]) if values["blp"]
        else SearchConfig(),
    )
    try:
        rc.resolved_model()  # combined-value validation (divisibility etc.)
    except (ValueError, TypeError) as exc:
        raise ConfigError([f"{at('model')}model rejected: {exc}"]) from None
    return rc


_SET_KEYS: Dict[str, Tuple[str, _Key]] = {}
for _table_name, _table in (("model", _MODEL_KEYS), ("blp", _BLP_KEYS)):
    for _k, _spec in _table.items():
        _SET_KEYS[_k] = (_table_name, _spec)
for _k in ("t", "t_max"):
    _SET_KEYS[_k] = ("run", _RUN_KEYS[_k])


def parse_set_overrides(pairs: List[str]) -> Tuple[Dict[str, Any],
                                                   Dict[str, Any]]:
    """Validate ``--set key=value`` pairs.

    Returns (model-and-time overrides, blp overrides); diagnostics carry
    the offending pair instead of a line number.
    """
    problems: List[str] = []
    overrides: Dict[str, Any] = {}
    blp: Dict[str, Any] = {}
    for pair in pairs:
        if "=" not in pair:
            problems.append(f"--set {pair!r}: expected key=value")
            continue
        key, raw = (s.strip() for s in pair.split("=", 1))
        entry = _SET_KEYS.get(key)
        if entry is None:
            problems.append(
                f"--set {pair!r}: unknown key {key!r}; expected one of "
                + ", ".join(sorted(_SET_KEYS)))
            continue
        table_name, spec = entry
        try:
            val = spec.convert(raw)
        except (ValueError, TypeError):
            problems.append(
                f"--set {pair!r}: not a valid {spec.type_name}")
            continue
        if spec.check is not None and not spec.check(val):
            problems.append(f"--set {pair!r}: out of domain ({spec.domain})")
            continue
        target = blp if table_name == "blp" else overrides
        target[spec.dest or key] = val
    if problems:
        raise ConfigError(problems)
    return overrides, blp


def manifest_parameters(rc: RunConfig) -> Dict[str, Any]:
    """Parameter block for the manifest; enough to re-run bit-exactly."""
    model = rc.resolved_model()
    params: Dict[str, Any] = {
        "boundary": rc.boundary,
        "workers": rc.workers,
        "overrides": dict(rc.overrides),
        "blp_search": dataclasses.asdict(rc.search),
        "base_model": {
            "coupling": dataclasses.asdict(model.coupling),
            "env": dataclasses.asdict(model.env),
            "g": model.g,
            "dt_collision": model.dt_collision,
            "sample_dt": model.sample_dt,
            "stencil_h": model.stencil_h,
            "n_qubits": model.n_qubits,
        },
    }
    if rc.scenario is not None:
        params["scenario"] = rc.scenario
    if rc.sweep is not None:
        params["sweep"] = dataclasses.asdict(rc.sweep)
    return params
