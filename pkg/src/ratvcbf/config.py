"""Flat key-value experiment configuration (INI sections per concern).

Sections:
  [scenario]  ScenarioConfig fields (tuples as comma-separated values)
  [filter]    mode, alpha0, C, delta, issf_epsilon, input_box; the three
              tuning values override the scenario-level defaults when present
  [run]       seed

Unknown keys are rejected so experiment files stay diff-able and honest.
"""

from __future__ import annotations

import configparser
import dataclasses

from ratvcbf.harness import RunConfig
from ratvcbf.scenario import ScenarioConfig

_TUPLE_FIELDS = {"plate", "theta_true", "theta_hat0", "vartheta0", "gamma_gain"}
_OPTIONAL_FLOAT_FIELDS = {"force_band_frac", "duration", "schedule_grid"}
_BOOL_FIELDS = {"warm_start"}
_INT_FIELDS = {"smid_batch"}
_STR_FIELDS = {"disturbance_kind", "reference"}


class ConfigError(ValueError):
    pass


def _parse_tuple(raw: str) -> tuple:
    try:
        return tuple(float(part) for part in raw.split(","))
    except ValueError as exc:
        raise ConfigError(f"cannot parse tuple value {raw!r}") from exc


def parse_scenario(section) -> ScenarioConfig:
    valid = {f.name for f in dataclasses.fields(ScenarioConfig)}
    kwargs = {}
    for key, raw in section.items():
        if key not in valid:
            raise ConfigError(f"unknown [scenario] key {key!r}")
        if key in _TUPLE_FIELDS:
            kwargs[key] = _parse_tuple(raw)
        elif key in _BOOL_FIELDS:
            kwargs[key] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif key in _INT_FIELDS:
            kwargs[key] = int(raw)
        elif key in _STR_FIELDS:
            kwargs[key] = raw.strip()
        elif key in _OPTIONAL_FLOAT_FIELDS:
            kwargs[key] = None if raw.strip().lower() == "none" else float(raw)
        else:
            kwargs[key] = float(raw)
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid scenario configuration: {exc}") from exc


def load_run_config(path: str | None) -> RunConfig:
    """Build a RunConfig from an INI file; None yields the built-in defaults."""
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file not found: {path}")
    known = {"scenario", "filter", "run"}
    unknown = set(parser.sections()) - known
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    scenario = parse_scenario(parser["scenario"]) if parser.has_section("scenario") \
        else ScenarioConfig()
    kwargs: dict = {"scenario": scenario}
    if parser.has_section("filter"):
        sec = parser["filter"]
        for key in sec:
            if key == "mode":
                kwargs["mode"] = sec[key].strip()
            elif key == "c":
                kwargs["C"] = float(sec[key])
            elif key == "alpha0":
                kwargs["alpha0"] = float(sec[key])
            elif key == "delta":
                kwargs["filter_delta"] = float(sec[key])
            elif key == "issf_epsilon":
                kwargs["issf_epsilon"] = float(sec[key])
            elif key == "input_box":
                kwargs["input_box"] = _parse_tuple(sec[key])
            else:
                raise ConfigError(f"unknown [filter] key {key!r}")
    if parser.has_section("run"):
        sec = parser["run"]
        for key in sec:
            if key == "seed":
                kwargs["seed"] = int(sec[key])
            else:
                raise ConfigError(f"unknown [run] key {key!r}")
    try:
        return RunConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc


def write_default_config(path: str):
    """Write the built-in defaults in the accepted format, as a starting point."""
    sc = ScenarioConfig()
    lines = ["[scenario]"]
    for f in dataclasses.fields(ScenarioConfig):
        value = getattr(sc, f.name)
        if value is None:
            continue
        if f.name in _TUPLE_FIELDS:
            value = ", ".join(repr(v) for v in value)
        lines.append(f"{f.name} = {value}")
    lines += ["", "[filter]", "mode = ratvcbf", f"alpha0 = {sc.alpha0}",
              f"delta = {sc.filter_delta}", f"issf_epsilon = {sc.issf_epsilon}",
              "", "[run]", "seed = 0", ""]
    with open(path, "w") as fh:
        fh.write("\n".join(lines))
