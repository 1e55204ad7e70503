"""Configuration documents: YAML in, validated run configuration out.

The document has four blocks. ``model`` describes the equation, ``simulation``
the Monte Carlo settings, ``output`` where results go, and the optional
``reference`` block carries published values to cross-check in reports.
Errors name the offending field by its path in the document.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Any, Optional

import yaml

from .ensemble import EnsembleConfig
from .errors import ConfigError
from .model import GeneratorMatrix, InitialHistory, ModelSpec, RegimeParams


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    emit_paths: bool = False
    emit_stats: bool = True
    emit_raw: bool = False


@dataclass(frozen=True)
class RunConfig:
    model: ModelSpec
    simulation: EnsembleConfig
    output: OutputConfig
    reference: Optional[dict] = None


def _require(block: dict, key: str, path: str) -> Any:
    if key not in block:
        raise ConfigError(f"{path}.{key}: missing required field")
    return block[key]


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return value


def _parse_model(block: Any) -> ModelSpec:
    if not isinstance(block, dict):
        raise ConfigError("model: expected a mapping")
    raw_regimes = _require(block, "regimes", "model")
    if not isinstance(raw_regimes, list) or not raw_regimes:
        raise ConfigError("model.regimes: expected a non-empty list")
    regimes = []
    for i, entry in enumerate(raw_regimes, start=1):
        if not isinstance(entry, dict):
            raise ConfigError(f"model.regimes[{i}]: expected a mapping")
        where = f"model.regimes[{i}]"
        regimes.append(RegimeParams(
            delta=_number(_require(entry, "delta", where), f"{where}.delta"),
            p=_number(_require(entry, "p", where), f"{where}.p"),
            tau=_number(_require(entry, "tau", where), f"{where}.tau"),
            a=_number(_require(entry, "a", where), f"{where}.a"),
            sigma=_number(_require(entry, "sigma", where), f"{where}.sigma"),
        ))

    raw_q = _require(block, "q_matrix", "model")
    if not isinstance(raw_q, list) or not all(isinstance(r, list) for r in raw_q):
        raise ConfigError("model.q_matrix: expected a list of rows")
    q = GeneratorMatrix.from_array([
        [_number(v, f"model.q_matrix[{i + 1}][{j + 1}]") for j, v in enumerate(row)]
        for i, row in enumerate(raw_q)
    ])

    raw_hist = _require(block, "history", "model")
    if not isinstance(raw_hist, dict):
        raise ConfigError("model.history: expected a mapping with 'constant' or 'samples'")
    tau_max = max(r.tau for r in regimes)
    if "tau_max" in raw_hist:
        tau_max = _number(raw_hist["tau_max"], "model.history.tau_max")
    if ("constant" in raw_hist) == ("samples" in raw_hist):
        raise ConfigError("model.history: exactly one of 'constant' or 'samples' required")
    if "constant" in raw_hist:
        history = InitialHistory.from_constant(
            _number(raw_hist["constant"], "model.history.constant"), tau_max
        )
    else:
        samples = raw_hist["samples"]
        if not isinstance(samples, list):
            raise ConfigError("model.history.samples: expected a list of [time, value] pairs")
        pts = []
        for i, pair in enumerate(samples, start=1):
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(f"model.history.samples[{i}]: expected [time, value]")
            pts.append((
                _number(pair[0], f"model.history.samples[{i}][0]"),
                _number(pair[1], f"model.history.samples[{i}][1]"),
            ))
        history = InitialHistory.from_samples(pts, tau_max)

    initial_regime = _integer(block.get("initial_regime", 1), "model.initial_regime")
    return ModelSpec(
        regimes=tuple(regimes), generator=q, history=history, initial_regime=initial_regime
    )


def _parse_simulation(block: Any) -> EnsembleConfig:
    if not isinstance(block, dict):
        raise ConfigError("simulation: expected a mapping")
    where = "simulation"
    kwargs = dict(
        dt=_number(_require(block, "dt", where), "simulation.dt"),
        horizon=_number(_require(block, "t_max", where), "simulation.t_max"),
        n_paths=_integer(block.get("n_paths", 1), "simulation.n_paths"),
        seed=_integer(block.get("seed", 0), "simulation.seed"),
        scheme=block.get("scheme", "voc"),
        theta=_number(block.get("theta", 1.0), "simulation.theta"),
        tail_window=_number(block.get("tail_window", 0.2), "simulation.tail_window"),
    )
    for opt in ("alpha", "vartheta"):
        if block.get(opt) is not None:
            kwargs[opt] = _number(block[opt], f"simulation.{opt}")
    try:
        return EnsembleConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from exc


def _parse_output(block: Any) -> OutputConfig:
    if block is None:
        return OutputConfig()
    if not isinstance(block, dict):
        raise ConfigError("output: expected a mapping")
    cfg = OutputConfig()
    known = {"directory", "emit_paths", "emit_stats", "emit_raw"}
    for key in block:
        if key not in known:
            raise ConfigError(f"output.{key}: unknown field")
    return replace(
        cfg,
        directory=str(block.get("directory", cfg.directory)),
        emit_paths=bool(block.get("emit_paths", cfg.emit_paths)),
        emit_stats=bool(block.get("emit_stats", cfg.emit_stats)),
        emit_raw=bool(block.get("emit_raw", cfg.emit_raw)),
    )


def parse_config(data: Any) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    model = _parse_model(_require(data, "model", "top level"))
    simulation = _parse_simulation(_require(data, "simulation", "top level"))
    output = _parse_output(data.get("output"))
    reference = data.get("reference")
    if reference is not None and not isinstance(reference, dict):
        raise ConfigError("reference: expected a mapping")
    return RunConfig(model=model, simulation=simulation, output=output, reference=reference)


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML ({exc})") from exc
    return parse_config(data)


def dump_config(cfg: RunConfig) -> dict:
    """Serialize back to the document structure; re-parsing gives an equal RunConfig."""
    hist: dict[str, Any] = {"tau_max": cfg.model.history.tau_max}
    if cfg.model.history.constant is not None:
        hist["constant"] = cfg.model.history.constant
    else:
        hist["samples"] = [[t, x] for t, x in cfg.model.history.samples]
    sim = cfg.simulation
    return {
        "model": {
            "regimes": [
                {"delta": r.delta, "p": r.p, "tau": r.tau, "a": r.a, "sigma": r.sigma}
                for r in cfg.model.regimes
            ],
            "q_matrix": [list(row) for row in cfg.model.generator.rows],
            "history": hist,
            "initial_regime": cfg.model.initial_regime,
        },
        "simulation": {
            "dt": sim.dt, "t_max": sim.horizon, "n_paths": sim.n_paths,
            "seed": sim.seed, "scheme": sim.scheme, "theta": sim.theta,
            "alpha": sim.alpha, "vartheta": sim.vartheta, "tail_window": sim.tail_window,
        },
        "output": asdict(cfg.output),
        **({"reference": cfg.reference} if cfg.reference is not None else {}),
    }
