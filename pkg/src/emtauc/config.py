"""Typed run configuration parsed from JSON dicts.

Parsing is strict: unknown keys are errors, as are missing required keys.
Every ``from_dict`` raises ConfigError with the offending key path so CLI
users get an actionable message instead of a traceback.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .data import DataError, as_rate
from .solvers import SOLVER_KINDS, SolverConfig


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return d[key]


def _reject_unknown(d: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(map(repr, unknown))}")


def _as_int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{where}: must be >= {minimum}, got {value}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_str(value, where: str) -> str:
    if not isinstance(value, str) or not value:
        raise ConfigError(f"{where}: expected a non-empty string, got {value!r}")
    return value


def _parse_rate(value, where: str) -> Fraction:
    try:
        return as_rate(value, where)
    except (DataError, TypeError) as exc:
        raise ConfigError(str(exc)) from None


def _parse_budget(value, where: str) -> Fraction:
    try:
        budget = Fraction(str(value)) if isinstance(value, float) else Fraction(value)
    except (ValueError, TypeError, ZeroDivisionError):
        raise ConfigError(f"{where}: expected a positive number, got {value!r}") from None
    if budget <= 0:
        raise ConfigError(f"{where}: must be positive, got {value!r}")
    return budget


def parse_solver(d, where: str = "solver") -> SolverConfig:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {d!r}")
    allowed = {
        "kind",
        "pop_size",
        "rmp",
        "transfer_interval",
        "transfer_count",
        "sbx_eta",
        "pm_eta",
        "pm_prob",
    }
    _reject_unknown(d, allowed, where)
    kind = _as_str(_require(d, "kind", where), f"{where}.kind")
    if kind not in SOLVER_KINDS:
        raise ConfigError(
            f"{where}.kind: expected one of {', '.join(SOLVER_KINDS)}, got {kind!r}"
        )
    kwargs = {}
    if "pop_size" in d:
        kwargs["pop_size"] = _as_int(d["pop_size"], f"{where}.pop_size", minimum=2)
    if "rmp" in d:
        kwargs["rmp"] = _as_number(d["rmp"], f"{where}.rmp")
    if "transfer_interval" in d:
        kwargs["transfer_interval"] = _as_int(d["transfer_interval"], f"{where}.transfer_interval", minimum=1)
    if "transfer_count" in d:
        kwargs["transfer_count"] = _as_int(d["transfer_count"], f"{where}.transfer_count", minimum=0)
    if "sbx_eta" in d:
        kwargs["sbx_eta"] = _as_number(d["sbx_eta"], f"{where}.sbx_eta")
    if "pm_eta" in d:
        kwargs["pm_eta"] = _as_number(d["pm_eta"], f"{where}.pm_eta")
    if "pm_prob" in d and d["pm_prob"] is not None:
        kwargs["pm_prob"] = _as_number(d["pm_prob"], f"{where}.pm_prob")
    try:
        return SolverConfig(kind=kind, **kwargs)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    solver: SolverConfig
    s: Fraction = Fraction(1, 10)
    lam: float = 0.125
    delta: int | None = 30
    budget: Fraction = Fraction(101000)
    seed: int = 0
    output_dir: str | None = None
    trace_stride: int = 1
    jobs: int = 1

    @staticmethod
    def from_dict(d) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError(f"run config: expected an object, got {d!r}")
        allowed = {
            "dataset",
            "solver",
            "s",
            "lambda",
            "delta",
            "budget",
            "seed",
            "output_dir",
            "trace_stride",
            "jobs",
        }
        _reject_unknown(d, allowed, "run config")
        dataset = _as_str(_require(d, "dataset", "run config"), "run config.dataset")
        solver = parse_solver(_require(d, "solver", "run config"), "run config.solver")
        # no wall-clock fallback: a run must name its seed (file or --seed)
        kwargs = {"seed": _as_int(_require(d, "seed", "run config"), "run config.seed", minimum=0)}
        if "s" in d:
            kwargs["s"] = _parse_rate(d["s"], "run config.s")
        if "lambda" in d:
            kwargs["lam"] = _as_number(d["lambda"], "run config.lambda")
        if "delta" in d:
            kwargs["delta"] = None if d["delta"] is None else _as_int(d["delta"], "run config.delta", minimum=1)
        if "budget" in d:
            kwargs["budget"] = _parse_budget(d["budget"], "run config.budget")
        if "output_dir" in d:
            kwargs["output_dir"] = _as_str(d["output_dir"], "run config.output_dir")
        if "trace_stride" in d:
            kwargs["trace_stride"] = _as_int(d["trace_stride"], "run config.trace_stride", minimum=1)
        if "jobs" in d:
            kwargs["jobs"] = _as_int(d["jobs"], "run config.jobs", minimum=1)
        return RunConfig(dataset=dataset, solver=solver, **kwargs)


@dataclass(frozen=True)
class BenchmarkSolverSpec:
    label: str
    config: SolverConfig
    delta: int | None


def _parse_benchmark_solver(d, where: str, default_delta: int | None) -> BenchmarkSolverSpec:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object, got {d!r}")
    inner = dict(d)
    label = None
    if "label" in inner:
        label = _as_str(inner.pop("label"), f"{where}.label")
    delta = default_delta
    if "delta" in inner:
        raw = inner.pop("delta")
        delta = None if raw is None else _as_int(raw, f"{where}.delta", minimum=1)
    config = parse_solver(inner, where)
    return BenchmarkSolverSpec(label=label or config.kind, config=config, delta=delta)


@dataclass(frozen=True)
class BenchmarkConfig:
    datasets: tuple[str, ...]
    solvers: tuple[BenchmarkSolverSpec, ...]
    trials: int = 5
    folds: int = 5
    baseline: str | None = None
    s: Fraction = Fraction(1, 10)
    lam: float = 0.125
    delta: int | None = 30
    budget: Fraction = Fraction(101000)
    seed: int = 0
    output_dir: str | None = None
    jobs: int = 1

    @staticmethod
    def from_dict(d) -> "BenchmarkConfig":
        if not isinstance(d, dict):
            raise ConfigError(f"benchmark config: expected an object, got {d!r}")
        allowed = {
            "datasets",
            "solvers",
            "trials",
            "folds",
            "baseline",
            "s",
            "lambda",
            "delta",
            "budget",
            "seed",
            "output_dir",
            "jobs",
        }
        _reject_unknown(d, allowed, "benchmark config")
        raw_datasets = _require(d, "datasets", "benchmark config")
        if not isinstance(raw_datasets, list) or not raw_datasets:
            raise ConfigError("benchmark config.datasets: expected a non-empty list")
        datasets = tuple(
            _as_str(v, f"benchmark config.datasets[{i}]") for i, v in enumerate(raw_datasets)
        )
        if len(set(datasets)) != len(datasets):
            raise ConfigError("benchmark config.datasets: duplicate entries")

        kwargs = {
            "seed": _as_int(_require(d, "seed", "benchmark config"), "benchmark config.seed", minimum=0)
        }
        if "delta" in d:
            kwargs["delta"] = None if d["delta"] is None else _as_int(d["delta"], "benchmark config.delta", minimum=1)
        default_delta = kwargs.get("delta", 30)

        raw_solvers = _require(d, "solvers", "benchmark config")
        if not isinstance(raw_solvers, list) or not raw_solvers:
            raise ConfigError("benchmark config.solvers: expected a non-empty list")
        solvers = tuple(
            _parse_benchmark_solver(v, f"benchmark config.solvers[{i}]", default_delta)
            for i, v in enumerate(raw_solvers)
        )
        labels = [spec.label for spec in solvers]
        if len(set(labels)) != len(labels):
            raise ConfigError(
                "benchmark config.solvers: duplicate labels; set a distinct 'label' per entry"
            )

        if "trials" in d:
            kwargs["trials"] = _as_int(d["trials"], "benchmark config.trials", minimum=1)
        if "folds" in d:
            kwargs["folds"] = _as_int(d["folds"], "benchmark config.folds", minimum=2)
        if "baseline" in d:
            baseline = _as_str(d["baseline"], "benchmark config.baseline")
            if baseline not in labels:
                raise ConfigError(
                    f"benchmark config.baseline: {baseline!r} does not match any solver label"
                )
            kwargs["baseline"] = baseline
        if "s" in d:
            kwargs["s"] = _parse_rate(d["s"], "benchmark config.s")
        if "lambda" in d:
            kwargs["lam"] = _as_number(d["lambda"], "benchmark config.lambda")
        if "budget" in d:
            kwargs["budget"] = _parse_budget(d["budget"], "benchmark config.budget")
        if "output_dir" in d:
            kwargs["output_dir"] = _as_str(d["output_dir"], "benchmark config.output_dir")
        if "jobs" in d:
            kwargs["jobs"] = _as_int(d["jobs"], "benchmark config.jobs", minimum=1)
        return BenchmarkConfig(datasets=datasets, solvers=solvers, **kwargs)


@dataclass(frozen=True)
class LandscapeConfig:
    dataset: str
    s: Fraction = Fraction(1, 10)
    lam: float = 0.125
    n_points: int = 2000
    repeats: int = 10
    seed: int = 0
    output_dir: str | None = None

    @staticmethod
    def from_dict(d) -> "LandscapeConfig":
        if not isinstance(d, dict):
            raise ConfigError(f"landscape config: expected an object, got {d!r}")
        allowed = {"dataset", "s", "lambda", "n_points", "repeats", "seed", "output_dir"}
        _reject_unknown(d, allowed, "landscape config")
        dataset = _as_str(_require(d, "dataset", "landscape config"), "landscape config.dataset")
        kwargs = {}
        if "s" in d:
            kwargs["s"] = _parse_rate(d["s"], "landscape config.s")
        if "lambda" in d:
            kwargs["lam"] = _as_number(d["lambda"], "landscape config.lambda")
        if "n_points" in d:
            kwargs["n_points"] = _as_int(d["n_points"], "landscape config.n_points", minimum=2)
        if "repeats" in d:
            kwargs["repeats"] = _as_int(d["repeats"], "landscape config.repeats", minimum=1)
        if "seed" in d:
            kwargs["seed"] = _as_int(d["seed"], "landscape config.seed", minimum=0)
        if "output_dir" in d:
            kwargs["output_dir"] = _as_str(d["output_dir"], "landscape config.output_dir")
        return LandscapeConfig(dataset=dataset, **kwargs)


@dataclass(frozen=True)
class CostModelConfig:
    dataset: str
    rates: tuple[Fraction, ...] = field(
        default_factory=lambda: (
            Fraction(1, 10),
            Fraction(1, 5),
            Fraction(1, 2),
            Fraction(1),
        )
    )
    repetitions: int = 50
    seed: int = 0
    output_dir: str | None = None

    @staticmethod
    def from_dict(d) -> "CostModelConfig":
        if not isinstance(d, dict):
            raise ConfigError(f"costmodel config: expected an object, got {d!r}")
        allowed = {"dataset", "rates", "repetitions", "seed", "output_dir"}
        _reject_unknown(d, allowed, "costmodel config")
        dataset = _as_str(_require(d, "dataset", "costmodel config"), "costmodel config.dataset")
        kwargs = {}
        if "rates" in d:
            raw = d["rates"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError("costmodel config.rates: expected a non-empty list")
            kwargs["rates"] = tuple(
                _parse_rate(v, f"costmodel config.rates[{i}]") for i, v in enumerate(raw)
            )
        if "repetitions" in d:
            kwargs["repetitions"] = _as_int(d["repetitions"], "costmodel config.repetitions", minimum=1)
        if "seed" in d:
            kwargs["seed"] = _as_int(d["seed"], "costmodel config.seed", minimum=0)
        if "output_dir" in d:
            kwargs["output_dir"] = _as_str(d["output_dir"], "costmodel config.output_dir")
        return CostModelConfig(dataset=dataset, **kwargs)
