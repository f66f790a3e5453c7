"""Scenario orchestration: single runs, parameter sweeps, and the self-check.

A ScenarioConfig bundles everything one acquisition needs: the two pair
parameter sets, the measurement setting, the selection rule, sample count,
seed, and which engine generates the samples (direct Gaussian sampling or
the full synthesize/demodulate chain). run_scenario always evaluates both
the conditioned and the unconditioned statistics of the same record, the
way a paired acquisition would, and overlays the closed-form prediction.

Everything here is deterministic per (config, seed): sweep row seeds derive
from (base seed, row index), so results do not depend on execution order or
worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .dsp_chain import SignalChainConfig, demodulate, synthesize
from .errors import ConfigurationError, TwinBeamError, ValidationError
from .model import (
    MeasurementSetting,
    SampleBatch,
    TwinPairParams,
    build_covariance,
    sample_batch,
)
from .oracle import TransferPrediction, predict_transfer
from .selection import SelectionConfig, conditional_statistics, derived_seed, select
from .stats import Histogram, TransferReport, histogram

SWEEP_PARAMETERS = (
    "squeezing_db",
    "efficiency",
    "rotation_deg",
    "bandwidth_delta",
    "excess_sum_db",
)

ENGINES = ("direct", "chain")

# seed tags for streams derived from the batch seed; selection.py owns 0xB00F
_SCATTER_TAG_CONDITIONED = 0x5CA0
_SCATTER_TAG_UNCONDITIONED = 0x5CA1


def _reject_unknown(data: dict, known: tuple[str, ...], context: str) -> None:
    unknown = sorted(set(data) - set(known))
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {unknown} in {context}; known keys: {sorted(known)}")


def _build_strict(cls, data: Any, context: str):
    """Construct a dataclass from a plain dict, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigurationError(f"{context} must be an object, got {type(data).__name__}")
    names = tuple(f.name for f in dataclasses.fields(cls))
    _reject_unknown(data, names, context)
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigurationError(f"bad {context}: {exc}") from exc


@dataclass(frozen=True)
class SweepAxis:
    """One swept parameter: name, range, step count, and spacing."""

    parameter: str
    minimum: float
    maximum: float
    steps: int
    scale: str = "linear"

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigurationError(
                f"sweep parameter must be one of {SWEEP_PARAMETERS}, "
                f"got {self.parameter!r}")
        lo, hi = float(self.minimum), float(self.maximum)
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValidationError(f"sweep range must be finite with minimum < maximum, "
                                  f"got [{self.minimum}, {self.maximum}]")
        object.__setattr__(self, "minimum", lo)
        object.__setattr__(self, "maximum", hi)
        if int(self.steps) < 2:
            raise ValidationError(f"sweep steps must be >= 2, got {self.steps}")
        object.__setattr__(self, "steps", int(self.steps))
        if self.scale not in ("linear", "log"):
            raise ConfigurationError(f"sweep scale must be 'linear' or 'log', "
                                     f"got {self.scale!r}")
        if self.scale == "log" and lo <= 0.0:
            raise ValidationError(f"log-scale sweep requires minimum > 0, got {lo}")

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.minimum, self.maximum, self.steps)
        return np.linspace(self.minimum, self.maximum, self.steps)

    def to_dict(self) -> dict[str, Any]:
        return {"parameter": self.parameter, "minimum": self.minimum,
                "maximum": self.maximum, "steps": self.steps, "scale": self.scale}


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one acquisition (or one sweep of acquisitions)."""

    pair1: TwinPairParams = TwinPairParams(squeezing_db=7.0)
    pair2: TwinPairParams = TwinPairParams(squeezing_db=7.0)
    setting: MeasurementSetting = MeasurementSetting.TWIN_BEAMS_0DEG
    selection: SelectionConfig = SelectionConfig(bandwidth_delta=0.03)
    n_points: int = 300_000
    seed: int = 0
    engine: str = "direct"
    signal_chain: SignalChainConfig = SignalChainConfig()
    sweep: SweepAxis | None = None
    scatter_points: int = 20_000

    def __post_init__(self):
        for name, cls in (("pair1", TwinPairParams), ("pair2", TwinPairParams),
                          ("selection", SelectionConfig),
                          ("signal_chain", SignalChainConfig)):
            if not isinstance(getattr(self, name), cls):
                raise ConfigurationError(f"{name} must be a {cls.__name__}")
        if not isinstance(self.setting, MeasurementSetting):
            raise ConfigurationError("setting must be a MeasurementSetting")
        if self.sweep is not None and not isinstance(self.sweep, SweepAxis):
            raise ConfigurationError("sweep must be a SweepAxis or None")
        if self.engine not in ENGINES:
            raise ConfigurationError(f"engine must be one of {ENGINES}, got {self.engine!r}")
        for name, minimum in (("n_points", 2), ("scatter_points", 1), ("seed", 0)):
            value = getattr(self, name)
            if int(value) != value or int(value) < minimum:
                raise ValidationError(f"{name} must be an integer >= {minimum}, got {value}")
            object.__setattr__(self, name, int(value))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        if not isinstance(data, dict):
            raise ConfigurationError(f"config must be an object, got {type(data).__name__}")
        names = tuple(f.name for f in dataclasses.fields(cls))
        _reject_unknown(data, names, "config")
        kwargs: dict[str, Any] = dict(data)
        for name in ("pair1", "pair2"):
            if name in kwargs:
                kwargs[name] = _build_strict(TwinPairParams, kwargs[name], name)
        if "setting" in kwargs:
            try:
                kwargs["setting"] = MeasurementSetting(kwargs["setting"])
            except ValueError as exc:
                raise ConfigurationError(
                    f"unknown setting {kwargs['setting']!r}; valid settings: "
                    f"{[s.value for s in MeasurementSetting]}") from exc
        if "selection" in kwargs:
            kwargs["selection"] = _build_strict(SelectionConfig, kwargs["selection"],
                                                "selection")
        if "signal_chain" in kwargs:
            kwargs["signal_chain"] = _build_strict(SignalChainConfig,
                                                   kwargs["signal_chain"], "signal_chain")
        if kwargs.get("sweep") is not None:
            kwargs["sweep"] = _build_strict(SweepAxis, kwargs["sweep"], "sweep")
        return cls(**kwargs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "pair1": dataclasses.asdict(self.pair1),
            "pair2": dataclasses.asdict(self.pair2),
            "setting": self.setting.value,
            "selection": self.selection.to_echo(),
            "n_points": self.n_points,
            "seed": self.seed,
            "engine": self.engine,
            "signal_chain": dataclasses.asdict(self.signal_chain),
            "sweep": self.sweep.to_dict() if self.sweep is not None else None,
            "scatter_points": self.scatter_points,
        }


def load_config(path) -> ScenarioConfig:
    """Parse a JSON config file into a ScenarioConfig, strictly."""
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(data)


def generate_batch(cfg: ScenarioConfig, workers: int = 1) -> SampleBatch:
    """Produce the sample batch for a config through its chosen engine."""
    cov = build_covariance(cfg.pair1, cfg.pair2, cfg.setting)
    if cfg.engine == "direct":
        return sample_batch(cov, cfg.n_points, cfg.seed, workers=workers)
    chain_cfg = dataclasses.replace(cfg.signal_chain, record_points=cfg.n_points)
    record = synthesize(cov, chain_cfg, cfg.seed)
    return demodulate(record, chain_cfg)


@dataclass(frozen=True)
class ScenarioResult:
    """Everything one run produces, before any file is written."""

    conditioned: TransferReport
    unconditioned: TransferReport
    oracle: TransferPrediction
    conditioned_histogram: Histogram
    unconditioned_histogram: Histogram
    conditioned_scatter: np.ndarray
    unconditioned_scatter: np.ndarray
    config: ScenarioConfig


def _subsample(indices: np.ndarray, count: int, seed: int) -> np.ndarray:
    if indices.size <= count:
        return indices
    rng = np.random.Generator(np.random.Philox(seed))
    chosen = rng.choice(indices.size, size=count, replace=False)
    chosen.sort()
    return indices[chosen]


def run_scenario(cfg: ScenarioConfig, out_dir=None, workers: int = 1,
                 resamples: int = 1000) -> ScenarioResult:
    """One paired acquisition: conditioned and unconditioned statistics.

    When out_dir is given, also writes scatter, histogram, and report files
    there (see _write_scenario_outputs for the exact set).
    """
    batch = generate_batch(cfg, workers=workers)
    selected = select(batch, cfg.selection)
    conditioned = conditional_statistics(batch, selected, cfg.selection,
                                         resamples=resamples)
    keep_all = dataclasses.replace(cfg.selection, bandwidth_delta=math.inf)
    everything = select(batch, keep_all)
    unconditioned = conditional_statistics(batch, everything, keep_all,
                                           resamples=resamples)
    prediction = predict_transfer(cfg.pair1, cfg.pair2,
                                  cfg.selection.bandwidth_delta, cfg.setting)

    tgt_a, tgt_b = cfg.selection.target_channels
    difference = batch.channel(tgt_a) - batch.channel(tgt_b)
    cond_hist = histogram(difference[selected.kept_indices])
    uncond_hist = histogram(difference)

    cond_idx = _subsample(selected.kept_indices, cfg.scatter_points,
                          derived_seed(batch.seed, _SCATTER_TAG_CONDITIONED))
    uncond_idx = _subsample(np.arange(batch.n), cfg.scatter_points,
                            derived_seed(batch.seed, _SCATTER_TAG_UNCONDITIONED))
    cond_scatter = np.column_stack([batch.channel(tgt_a)[cond_idx],
                                    batch.channel(tgt_b)[cond_idx]])
    uncond_scatter = np.column_stack([batch.channel(tgt_a)[uncond_idx],
                                      batch.channel(tgt_b)[uncond_idx]])

    result = ScenarioResult(
        conditioned=conditioned,
        unconditioned=unconditioned,
        oracle=prediction,
        conditioned_histogram=cond_hist,
        unconditioned_histogram=uncond_hist,
        conditioned_scatter=cond_scatter,
        unconditioned_scatter=uncond_scatter,
        config=cfg,
    )
    if out_dir is not None:
        _write_scenario_outputs(result, Path(out_dir))
    return result


def _comment_lines(cfg: ScenarioConfig) -> list[str]:
    compact = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return [f"twinbeam-transfer {__version__}", f"config: {compact}"]


def _write_csv(path: Path, comments: list[str], header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _report_dict(report: TransferReport) -> dict[str, Any]:
    return {
        "squeezing_db": report.squeezing_db,
        "ci_low_db": report.ci_low_db,
        "ci_high_db": report.ci_high_db,
        "kept_count": report.kept_count,
        "preparation_probability": report.preparation_probability,
        "config_echo": report.config_echo,
    }


def _write_scenario_outputs(result: ScenarioResult, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = result.config
    comments = _comment_lines(cfg)
    tgt_a, tgt_b = cfg.selection.target_channels

    for name, scatter in (("scatter_conditioned.csv", result.conditioned_scatter),
                          ("scatter_unconditioned.csv", result.unconditioned_scatter)):
        rows = [(float(a), float(b)) for a, b in scatter]
        _write_csv(out_dir / name, comments, [tgt_a, tgt_b], rows)

    hist_header = ["bin_left_delta", "bin_right_delta", "count"]
    hist_comments = comments + ["bin edges are in units of delta (coherent-difference sigma)"]
    for name, hist in (("histogram_conditioned.csv", result.conditioned_histogram),
                       ("histogram_unconditioned.csv", result.unconditioned_histogram)):
        rows = [(float(left), float(right), int(count))
                for left, right, count in zip(hist.bin_edges[:-1], hist.bin_edges[1:],
                                              hist.counts)]
        _write_csv(out_dir / name, hist_comments, hist_header, rows)

    payload = {
        "version": __version__,
        "config": cfg.to_dict(),
        "conditioned": _report_dict(result.conditioned),
        "unconditioned": _report_dict(result.unconditioned),
        "oracle": {
            "conditional_variance": result.oracle.conditional_variance,
            "transferred_db": result.oracle.transferred_db,
            "selection_probability": result.oracle.selection_probability,
        },
    }
    (out_dir / "report.json").write_text(json.dumps(payload, sort_keys=True, indent=2)
                                         + "\n")


SWEEP_COLUMNS = (
    "axis_value",
    "transferred_db",
    "ci_low_db",
    "ci_high_db",
    "kept_count",
    "preparation_probability",
    "oracle_transferred_db",
    "oracle_probability",
    "error",
)


def _apply_axis(cfg: ScenarioConfig, parameter: str, value: float) -> ScenarioConfig:
    if parameter == "bandwidth_delta":
        selection = dataclasses.replace(cfg.selection, bandwidth_delta=value)
        return dataclasses.replace(cfg, selection=selection, sweep=None)
    pair1 = dataclasses.replace(cfg.pair1, **{parameter: value})
    pair2 = dataclasses.replace(cfg.pair2, **{parameter: value})
    return dataclasses.replace(cfg, pair1=pair1, pair2=pair2, sweep=None)


def _sweep_row(cfg: ScenarioConfig, index: int, value: float,
               resamples: int) -> dict[str, Any]:
    row: dict[str, Any] = dict.fromkeys(SWEEP_COLUMNS, math.nan)
    row["axis_value"] = value
    row["kept_count"] = 0
    row["error"] = ""
    try:
        row_cfg = _apply_axis(cfg, cfg.sweep.parameter, value)
        row_cfg = dataclasses.replace(row_cfg, seed=derived_seed(cfg.seed, index))
        batch = generate_batch(row_cfg)
        selected = select(batch, row_cfg.selection)
        report = conditional_statistics(batch, selected, row_cfg.selection,
                                        resamples=resamples)
        prediction = predict_transfer(row_cfg.pair1, row_cfg.pair2,
                                      row_cfg.selection.bandwidth_delta,
                                      row_cfg.setting)
        row.update(
            transferred_db=report.squeezing_db,
            ci_low_db=report.ci_low_db,
            ci_high_db=report.ci_high_db,
            kept_count=report.kept_count,
            preparation_probability=report.preparation_probability,
            oracle_transferred_db=prediction.transferred_db,
            oracle_probability=prediction.selection_probability,
        )
    except TwinBeamError as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def run_sweep(cfg: ScenarioConfig, out_dir=None, workers: int = 1,
              resamples: int = 1000) -> list[dict[str, Any]]:
    """One row per sweep point; failed rows carry the error, never abort.

    Row seeds derive from (cfg.seed, row index), so the table is identical
    for any worker count. When out_dir is given, writes sweep.csv there.
    """
    if cfg.sweep is None:
        raise ConfigurationError("sweep requires a config with a sweep axis")
    values = [float(v) for v in cfg.sweep.values()]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda iv: _sweep_row(cfg, iv[0], iv[1], resamples),
                enumerate(values)))
    else:
        rows = [_sweep_row(cfg, i, v, resamples) for i, v in enumerate(values)]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table = [[row[c] for c in SWEEP_COLUMNS] for row in rows]
        comments = _comment_lines(cfg) + [
            f"sweep: {cfg.sweep.parameter} from {cfg.sweep.minimum} to "
            f"{cfg.sweep.maximum} in {cfg.sweep.steps} steps ({cfg.sweep.scale})"]
        _write_csv(out / "sweep.csv", comments, list(SWEEP_COLUMNS), table)
    return rows


def run_selftest(seed: int = 0, points: int = 1_000_000, cases: int = 8,
                 resamples: int = 400) -> list[dict[str, Any]]:
    """Randomized closed-form-vs-Monte-Carlo agreement check.

    Each case draws squeezing in [0, 12] dB, sum-mode variance in [2, 1e4]
    (log-uniform), and a selection half-width in [0.01, 3] delta
    (log-uniform), then requires the measured conditional noise to match the
    prediction within 3 bootstrap standard errors and the kept count to
    match the predicted probability within 4 binomial sigma.
    """
    if cases < 1:
        raise ValidationError(f"cases must be >= 1, got {cases}")
    rng = np.random.Generator(np.random.Philox(seed))
    results = []
    for index in range(cases):
        squeezing = float(rng.uniform(0.0, 12.0))
        v_plus = float(10.0 ** rng.uniform(math.log10(2.0), 4.0))
        delta_i = float(10.0 ** rng.uniform(math.log10(0.01), math.log10(3.0)))
        pair = TwinPairParams(squeezing_db=squeezing,
                              excess_sum_db=10.0 * math.log10(v_plus / 2.0))
        sel_cfg = SelectionConfig(bandwidth_delta=delta_i, min_kept=30)
        batch = sample_batch(build_covariance(pair, pair), points,
                             derived_seed(seed, index))
        report = conditional_statistics(batch, select(batch, sel_cfg), sel_cfg,
                                        resamples=resamples)
        prediction = predict_transfer(pair, pair, delta_i)

        se = max((report.ci_high_db - report.ci_low_db) / 2.0, 1e-9)
        db_gap = abs(report.squeezing_db - prediction.transferred_db)
        p = prediction.selection_probability
        count_sigma = math.sqrt(points * p * (1.0 - p)) if p < 1.0 else 1.0
        count_gap = abs(report.kept_count - points * p)
        ok = bool(db_gap <= 3.0 * se and count_gap <= 4.0 * count_sigma)
        results.append({
            "case": index,
            "squeezing_db": squeezing,
            "v_plus": v_plus,
            "bandwidth_delta": delta_i,
            "mc_db": report.squeezing_db,
            "oracle_db": prediction.transferred_db,
            "se_db": se,
            "kept_count": report.kept_count,
            "expected_count": points * p,
            "ok": ok,
        })
    return results
