"""Experiment harness: published tables, parameter sweeps and oracle comparison.

Configuration files are TOML with one table per section::

    [market]          # MarketParams fields, plus P_ba / P_br / adoption
    r_h = 100
    P_ba = 0.03

    [policy]          # InsurancePolicy fields; omit the section for no insurance
    T_d = 100

    [sim]             # runs (0 disables simulation), seed, horizon_slots,
    runs = 10000      # uncensored, tail_correction, workers

    [sweep]           # parameter name -> list of values (Cartesian product)
    P_ba = [0.01, 0.02]

    [pricing]
    epsilon = 0.01

    [output]
    path = "out.csv"  # relative paths resolve against $REPINSURE_OUTPUT_DIR
    record_runtime = false

Unknown sections or keys are errors.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import itertools
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .baseline import BaselineMeasures, baseline_measures
from .errors import ConfigError, ReputationModelError
from .insurance import (
    InsurancePolicy,
    InsuredMeasures,
    insured_measures,
    min_clearing_time,
    min_deposit_threshold,
    policy_warnings,
)
from .market import FunctionalAdoption, MarketParams, TabulatedAdoption
from .simulator import MonteCarloMeasures, SimConfig, monte_carlo_measures

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger(__name__)

OUTPUT_DIR_ENV = "REPINSURE_OUTPUT_DIR"
CSV_TAIL = ("measure", "analytic", "sim_mean", "sim_stderr", "runtime_s")
MEASURES = ("expected_ramp_up_days", "drop_out_prob", "seller_gain", "operator_gain")
PROBABILITY_MEASURES = ("drop_out_prob", "insured_drop_out_prob")
_SIM_KEY = {
    "expected_ramp_up_days": "ramp_up",
    "drop_out_prob": "drop_out",
    "seller_gain": "seller_gain",
    "operator_gain": "operator_gain",
}
FLOAT_ALLOWANCE = 1e-9

_MARKET_FIELDS = {f.name for f in dataclasses.fields(MarketParams)} - {"adoption"}
_ADOPTION_KEYS = {"adoption", "P_ba", "P_br", "adoption_scale", "adoption_price_exponent"}
_POLICY_FIELDS = {f.name for f in dataclasses.fields(InsurancePolicy)}
_SIM_KEYS = {"runs", "seed", "horizon_slots", "uncensored", "tail_correction", "workers"}
_SECTIONS = {"market", "policy", "sim", "sweep", "pricing", "output"}


def fmt(x: float | None) -> str:
    """17-significant-digit float, or the empty string for a missing value."""
    if x is None:
        return ""
    return "%.17g" % x


# published tables

TABLE2_LAMBDA1 = (5, 10, 15, 20, 25)
TABLE2_ETR = {
    200: (2001.7, 1001.4, 668.2, 501.5, 401.6),
    150: (1501.4, 751.5, 501.5, 376.5, 301.5),
    100: (1001.4, 501.5, 334.8, 251.5, 201.5),
}
TABLE3_PBA = (0.01, 0.02, 0.03, 0.04, 0.05)
TABLE3_PD = {
    200: (1.00000, 1.00000, 1.00000, 0.99999, 0.92514),
    150: (1.00000, 1.00000, 0.99992, 0.68056, 0.00991),
    100: (1.00000, 0.99897, 0.20819, 0.00005, 0.00000),
}
TABLE4_PBA = TABLE3_PBA
TABLE4_GS = {
    200: (26.833, 53.342, 80.705, 107.312, 198.059),
    150: (26.980, 53.594, 80.812, 369.951, 1006.017),
    100: (26.941, 54.433, 760.511, 1054.507, 1142.670),
}
TABLE4_GE = {
    200: (2.6833, 5.3342, 8.0705, 10.7312, 19.8059),
    150: (2.6980, 5.3594, 8.0812, 36.9951, 100.6017),
    100: (2.6941, 5.4433, 76.0511, 105.4507, 114.2670),
}
TABLE5_RH = (100, 150, 200)
TABLE5 = {
    "expected_ramp_up_days": (168.1, 251.6, 334.9),
    "insured_expected_ramp_up_days": (21.5, 31.5, 41.5),
    "drop_out_prob": (0.20819, 0.99992, 1.0),
    "insured_drop_out_prob": (0.0, 0.0, 0.0),
    "seller_gain": (760.51, 80.81, 80.71),
    "insured_seller_gain": (1485.04, 1485.03, 1485.01),
    "operator_gain": (76.051, 8.081, 8.071),
    "insured_operator_gain": (148.504, 148.503, 148.501),
}
TABLE5_POLICY = InsurancePolicy(C_I=100.0, T_d=100.0, T_c=3.0, D_I=100.0, D_hat=50.0)

# (kind, value): "abs" is an absolute bound, "rel" a fraction of the printed value
TOLERANCES = {
    "expected_ramp_up_days": ("abs", 0.1),
    "insured_expected_ramp_up_days": ("abs", 0.1),
    "drop_out_prob": ("abs", 1e-4),
    "insured_drop_out_prob": ("abs", 1e-12),
    "seller_gain": ("rel", 0.01),
    "insured_seller_gain": ("rel", 0.01),
    "operator_gain": ("rel", 0.01),
    "insured_operator_gain": ("rel", 0.01),
}
TABLE_IDS = ("table2", "table3", "table4", "table5")
_TABLE_ALIASES = {"insurance": "table5"}


def table_market(table_id: str, **point) -> MarketParams:
    """Market parameters of one cell of a published table."""
    if table_id == "table2":
        return MarketParams(lambda1=float(point["lambda1"]), r_h=point["r_h"], d=3.0).with_values(P_ba=0.02)
    if table_id == "table3":
        return MarketParams(lambda1=20.0, T_w=180.0, d=3.0, r_h=point["r_h"]).with_values(P_ba=point["P_ba"])
    gains = dict(lambda1=20.0, lambda2=50.0, u=1.0, fee=0.1, delta=0.99, T_w=180.0, d=3.0)
    if table_id == "table4":
        return MarketParams(r_h=point["r_h"], **gains).with_values(P_ba=point["P_ba"], P_br=0.1)
    if table_id == "table5":
        return MarketParams(r_h=point["r_h"], C_S=0.5, **gains).with_values(P_ba=0.03, P_br=0.1)
    raise ConfigError(f"unknown table {table_id!r}; expected one of {TABLE_IDS}")


def table_cells(table_id: str) -> list[tuple[dict, str, float]]:
    """``(point, measure, printed value)`` for every cell of a published table."""
    table_id = _TABLE_ALIASES.get(table_id, table_id)
    cells = []
    if table_id == "table2":
        for r_h, row in TABLE2_ETR.items():
            for lam, v in zip(TABLE2_LAMBDA1, row):
                cells.append(({"lambda1": lam, "r_h": r_h}, "expected_ramp_up_days", v))
    elif table_id == "table3":
        for r_h, row in TABLE3_PD.items():
            for P_ba, v in zip(TABLE3_PBA, row):
                cells.append(({"P_ba": P_ba, "r_h": r_h}, "drop_out_prob", v))
    elif table_id == "table4":
        for name, table in (("seller_gain", TABLE4_GS), ("operator_gain", TABLE4_GE)):
            for r_h, row in table.items():
                for P_ba, v in zip(TABLE4_PBA, row):
                    cells.append(({"P_ba": P_ba, "r_h": r_h}, name, v))
    elif table_id == "table5":
        for name, row in TABLE5.items():
            for r_h, v in zip(TABLE5_RH, row):
                cells.append(({"r_h": r_h}, name, v))
    else:
        raise ConfigError(f"unknown table {table_id!r}; expected one of {TABLE_IDS}")
    return cells


def within_tolerance(measure: str, value: float, printed: float) -> bool:
    kind, tol = TOLERANCES[measure]
    bound = tol if kind == "abs" else tol * abs(printed)
    return abs(value - printed) <= bound + FLOAT_ALLOWANCE * max(1.0, abs(printed))


@dataclass
class TableReproduction:
    table_id: str
    param_names: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    runtime_s: float = 0.0

    @property
    def failures(self) -> list[dict]:
        return [r for r in self.rows if not r["within_tolerance"]]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([*self.param_names, "measure", "analytic", "reference", "abs_error",
                    "within_tolerance", "sim_mean", "sim_stderr"])
        for r in self.rows:
            w.writerow([
                *(r["point"][k] for k in self.param_names),
                r["measure"],
                fmt(r["analytic"]),
                fmt(r["reference"]),
                fmt(abs(r["analytic"] - r["reference"])),
                "yes" if r["within_tolerance"] else "no",
                fmt(r.get("sim_mean")),
                fmt(r.get("sim_stderr")),
            ])
        return buf.getvalue()

    def diff_report(self) -> str:
        lines = []
        for r in self.failures:
            kind, tol = TOLERANCES[r["measure"]]
            lines.append(
                f"{self.table_id} {r['point']} {r['measure']}: computed {r['analytic']:.6g}, "
                f"printed {r['reference']:.6g} (|diff| {abs(r['analytic'] - r['reference']):.3g}, "
                f"{kind} tolerance {tol:g})"
            )
        return "\n".join(lines)


def _analytic_all(params: MarketParams, policy: InsurancePolicy | None) -> dict[str, float]:
    out = dataclasses.asdict(baseline_measures(params))
    if policy is not None:
        out.update({f"insured_{k}": v for k, v in dataclasses.asdict(insured_measures(params, policy)).items()})
    return out


def reproduce_table(
    table_id: str,
    simulate: bool = False,
    runs: int = 10_000,
    seed: int = 0,
) -> TableReproduction:
    """Recompute every cell of a published table and compare with the printed value."""
    table_id = _TABLE_ALIASES.get(table_id, table_id)
    cells = table_cells(table_id)
    names = tuple(cells[0][0])
    result = TableReproduction(table_id, names)
    start = time.perf_counter()
    cache: dict[tuple, dict[str, float]] = {}
    sims: dict[tuple, MonteCarloMeasures] = {}
    policy = TABLE5_POLICY if table_id == "table5" else None
    for point, measure, printed in cells:
        key = tuple(point.items())
        params = table_market(table_id, **point)
        if key not in cache:
            cache[key] = _analytic_all(params, policy)
        value = cache[key][measure]
        row = {
            "point": point,
            "measure": measure,
            "analytic": value,
            "reference": printed,
            "within_tolerance": within_tolerance(measure, value, printed),
        }
        if simulate:
            insured = measure.startswith("insured_")
            skey = (key, insured)
            if skey not in sims:
                cfg = SimConfig(runs=runs, seed=seed, regime="insured" if insured else "baseline",
                                policy=policy if insured else None)
                sims[skey] = monte_carlo_measures(params, cfg)
            est = getattr(sims[skey], _SIM_KEY[measure.removeprefix("insured_")])
            row["sim_mean"], row["sim_stderr"] = est.mean, est.stderr
        result.rows.append(row)
    result.runtime_s = time.perf_counter() - start
    return result


# configuration


@dataclass(frozen=True)
class ExperimentConfig:
    market: MarketParams
    policy: InsurancePolicy | None = None
    sweep: tuple[tuple[str, tuple], ...] = ()
    sim: SimConfig | None = None
    workers: int = 1
    epsilon: float = 0.01
    output_path: Path | None = None
    record_runtime: bool = False

    def points(self) -> list[dict[str, Any]]:
        names = [n for n, _ in self.sweep]
        return [dict(zip(names, combo)) for combo in itertools.product(*(v for _, v in self.sweep))]

    def resolve(self, point: dict[str, Any]) -> tuple[MarketParams, InsurancePolicy | None]:
        """Market and policy with a sweep point applied."""
        market_changes = {k: v for k, v in point.items() if k not in _POLICY_FIELDS}
        policy_changes = {k: v for k, v in point.items() if k in _POLICY_FIELDS}
        try:
            market = self.market.with_values(**market_changes) if market_changes else self.market
            policy = self.policy
            if policy_changes:
                policy = dataclasses.replace(policy, **policy_changes)
        except ReputationModelError as exc:
            raise ConfigError(f"sweep point {point}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"sweep point {point}: {exc}") from exc
        return market, policy


def _check_keys(section: str, table: dict, allowed: set[str]) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(section + '.' + k for k in unknown)}")


def _build_market(table: dict) -> MarketParams:
    _check_keys("market", table, _MARKET_FIELDS | _ADOPTION_KEYS)
    kind = table.get("adoption", "tabulated")
    values = {k: v for k, v in table.items() if k in _MARKET_FIELDS}
    try:
        if kind == "tabulated":
            for k in ("adoption_scale", "adoption_price_exponent"):
                if k in table:
                    raise ConfigError(f"market.{k} needs market.adoption = \"functional\"")
            adoption = TabulatedAdoption(
                P_ba=float(table.get("P_ba", TabulatedAdoption.P_ba)),
                P_br=float(table.get("P_br", TabulatedAdoption.P_br)),
            )
        elif kind == "functional":
            for k in ("P_ba", "P_br"):
                if k in table:
                    raise ConfigError(f"market.{k} needs market.adoption = \"tabulated\"")
            adoption = FunctionalAdoption(
                scale=float(table.get("adoption_scale", 1.0)),
                price_exponent=float(table.get("adoption_price_exponent", 1.0)),
            )
        else:
            raise ConfigError(f"market.adoption must be \"tabulated\" or \"functional\", got {kind!r}")
        return MarketParams(adoption=adoption, **values)
    except (ReputationModelError, ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"[market]: {exc}") from exc


def load_config(path: str | os.PathLike, seed: int | None = None) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises:
        ConfigError: malformed file, unknown key, or a value violating a
            parameter invariant (the message names the entry).
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return build_config(raw, base_dir=path.parent, default_name=path.stem, seed=seed)


def build_config(
    raw: dict,
    base_dir: Path | None = None,
    default_name: str = "experiment",
    seed: int | None = None,
) -> ExperimentConfig:
    unknown = sorted(set(raw) - _SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}")
    for name in raw:
        if not isinstance(raw[name], dict):
            raise ConfigError(f"{name} must be a table of keys")
    market = _build_market(raw.get("market", {}))

    policy = None
    if "policy" in raw:
        _check_keys("policy", raw["policy"], _POLICY_FIELDS)
        try:
            policy = InsurancePolicy(**{k: float(v) for k, v in raw["policy"].items()})
        except (ReputationModelError, ValueError, TypeError) as exc:
            raise ConfigError(f"[policy]: {exc}") from exc

    sweep = []
    for name, values in raw.get("sweep", {}).items():
        if name not in _MARKET_FIELDS | {"P_ba", "P_br"} | _POLICY_FIELDS:
            raise ConfigError(f"sweep.{name} is not a market or policy parameter")
        if name in _POLICY_FIELDS and policy is None:
            raise ConfigError(f"sweep.{name} needs a [policy] section")
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{name} must be a nonempty list")
        sweep.append((name, tuple(values)))

    sim_raw = dict(raw.get("sim", {}))
    _check_keys("sim", sim_raw, _SIM_KEYS)
    workers = int(sim_raw.pop("workers", 1))
    runs = int(sim_raw.pop("runs", 0))
    if seed is not None:
        sim_raw["seed"] = seed
    sim = None
    if runs:
        try:
            sim = SimConfig(
                runs=runs,
                regime="insured" if policy is not None else "baseline",
                policy=policy,
                **sim_raw,
            )
        except (ReputationModelError, ValueError, TypeError) as exc:
            raise ConfigError(f"[sim]: {exc}") from exc

    pricing = raw.get("pricing", {})
    _check_keys("pricing", pricing, {"epsilon"})
    epsilon = float(pricing.get("epsilon", 0.01))
    if not 0.0 < epsilon < 1.0:
        raise ConfigError(f"pricing.epsilon must lie in (0, 1), got {epsilon!r}")

    out = raw.get("output", {})
    _check_keys("output", out, {"path", "record_runtime"})
    out_path = Path(out.get("path", f"{default_name}.csv"))
    if not out_path.is_absolute():
        out_path = Path(os.environ.get(OUTPUT_DIR_ENV, ".")) / out_path

    cfg = ExperimentConfig(
        market=market,
        policy=policy,
        sweep=tuple(sweep),
        sim=sim,
        workers=workers,
        epsilon=epsilon,
        output_path=out_path,
        record_runtime=bool(out.get("record_runtime", False)),
    )
    for point in cfg.points():  # fail on any invalid point before computing
        market_p, policy_p = cfg.resolve(point)
        if cfg.sim is not None:
            try:
                dataclasses.replace(cfg.sim, policy=policy_p)
            except (ReputationModelError, ValueError) as exc:
                raise ConfigError(f"sweep point {point}: {exc}") from exc
    return cfg


def describe(params: MarketParams, policy: InsurancePolicy | None, sim: SimConfig | None) -> str:
    """One-line JSON record of a fully resolved parameter set."""

    def plain(obj):
        if obj is None:
            return None
        d = dataclasses.asdict(obj)
        return {k: (v.value if hasattr(v, "value") else v) for k, v in d.items()}

    market = plain(params)
    market["adoption"] = {"kind": type(params.adoption).__name__, **dataclasses.asdict(params.adoption)}
    return json.dumps({"market": market, "policy": plain(policy), "sim": plain(sim)}, sort_keys=True)


# sweeps


@dataclass(frozen=True)
class PointResult:
    point: dict
    rows: tuple[tuple[str, float | None, float | None, float | None], ...]
    runtime_s: float
    warnings: tuple[str, ...] = ()


def _analytic(params: MarketParams, policy: InsurancePolicy | None):
    tab = params.tabulated()
    base = baseline_measures(tab)
    ins = insured_measures(tab, policy) if policy is not None else None
    return base, ins


def _simulate(params: MarketParams, policy: InsurancePolicy | None, sim: SimConfig | None, workers: int):
    if sim is None:
        return None, None
    base_cfg = dataclasses.replace(sim, regime="baseline", policy=None)
    base = monte_carlo_measures(params, base_cfg, workers=workers)
    ins = None
    if policy is not None:
        ins = monte_carlo_measures(params, dataclasses.replace(sim, regime="insured", policy=policy), workers=workers)
    return base, ins


def evaluate_point(cfg: ExperimentConfig, point: dict) -> PointResult:
    """Analytic measures, pricing outputs and optional estimates for one sweep point."""
    start = time.perf_counter()
    params, policy = cfg.resolve(point)
    log.info("point %s params %s", json.dumps(point, sort_keys=True), describe(params, policy, cfg.sim))
    base, ins = _analytic(params, policy)
    sim_base, sim_ins = _simulate(params, policy, cfg.sim, cfg.workers)
    rows = []

    def add(prefix, measures, est):
        for name in MEASURES:
            value = getattr(measures, name)
            if est is None:
                rows.append((prefix + name, value, None, None))
            else:
                e = getattr(est, _SIM_KEY[name])
                rows.append((prefix + name, value, e.mean, e.stderr))

    add("", base, sim_base)
    notes: tuple[str, ...] = ()
    if ins is not None:
        add("insured_", ins, sim_ins)
        max_price = ins.seller_gain - base.seller_gain
        threshold = min_deposit_threshold(cfg.epsilon, params.tabulated(), policy)
        rows.append(("max_insurance_price", max_price, None, None))
        rows.append(("min_deposit_threshold", threshold, None, None))
        rows.append(("min_clearing_time", min_clearing_time(params), None, None))
        notes = tuple(policy_warnings(params.tabulated(), policy, cfg.epsilon, max_price, emit=False))
        for msg in notes:
            log.warning("point %s: %s", json.dumps(point, sort_keys=True), msg)
        if policy.D_hat < threshold:
            rows.append(("warning_deposit_bound", threshold, None, None))
        if policy.T_c < params.d:
            rows.append(("warning_clearing_time", params.d, None, None))
        if policy.C_I >= max_price:
            rows.append(("warning_price_bound", max_price, None, None))
    return PointResult(point, tuple(rows), time.perf_counter() - start, notes)


def run_points(cfg: ExperimentConfig, jobs: int = 1) -> list[PointResult]:
    """Evaluate every sweep point; results keep sweep order for any ``jobs``."""
    points = cfg.points()
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(evaluate_point, [cfg] * len(points), points))
    return [evaluate_point(cfg, p) for p in points]


def results_csv(cfg: ExperimentConfig, results: Iterable[PointResult]) -> str:
    names = [n for n, _ in cfg.sweep]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*names, *CSV_TAIL])
    for res in results:
        runtime = fmt(res.runtime_s) if cfg.record_runtime else ""
        for measure, analytic, mean, stderr in res.rows:
            w.writerow([
                *(_cell(res.point[n]) for n in names),
                measure,
                fmt(analytic),
                fmt(mean),
                fmt(stderr),
                runtime,
            ])
    return buf.getvalue()


def _cell(v: Any) -> str:
    return fmt(v) if isinstance(v, float) else str(v)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1, output: Path | None = None) -> Path:
    """Run the sweep and write its CSV; returns the file written."""
    results = run_points(cfg, jobs)
    path = Path(output or cfg.output_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(results_csv(cfg, results))
    return path


# analytic vs simulated


@dataclass(frozen=True)
class ComparisonRow:
    point: dict
    measure: str
    analytic: float
    sim_mean: float
    stderr: float
    z: float

    @property
    def flagged(self) -> bool:
        return self.z > 3.0


def z_score(measure: str, analytic: float, mean: float, stderr: float, n: int) -> float:
    """``|analytic - mean| / se``.

    For probabilities the standard error is floored at the Bernoulli value
    implied by the analytic probability, so an all-zero or all-one sample
    (zero sample variance) is not declared infinitely significant.
    """
    if n == 0 and math.isinf(analytic):
        return 0.0  # no run ramped up, consistent with an infinite expectation
    diff = abs(analytic - mean)
    if diff == 0.0:
        return 0.0
    se = stderr if math.isfinite(stderr) else 0.0
    if measure in PROBABILITY_MEASURES and n > 0:
        p = min(max(analytic, 0.0), 1.0)
        se = max(se, math.sqrt(p * (1.0 - p) / n))
    return diff / se if se > 0.0 else math.inf


def compare_estimates(
    analytic: dict[str, float], estimates: dict[str, Any], point: dict | None = None
) -> list[ComparisonRow]:
    """Z-scores for every measure present in both mappings."""
    out = []
    for measure, value in analytic.items():
        est = estimates.get(measure)
        if est is None:
            continue
        out.append(ComparisonRow(point or {}, measure, value, est.mean, est.stderr,
                                 z_score(measure, value, est.mean, est.stderr, est.n)))
    return out


def _estimate_map(prefix: str, mc: MonteCarloMeasures | None) -> dict:
    if mc is None:
        return {}
    return {prefix + name: getattr(mc, key) for name, key in _SIM_KEY.items()}


def _measure_map(prefix: str, m: BaselineMeasures | InsuredMeasures | None) -> dict:
    if m is None:
        return {}
    return {prefix + k: v for k, v in dataclasses.asdict(m).items()}


def compare(cfg: ExperimentConfig) -> list[ComparisonRow]:
    if cfg.sim is None or cfg.sim.runs < 100:
        raise ConfigError("compare needs sim.runs >= 100")
    rows = []
    for point in cfg.points():
        params, policy = cfg.resolve(point)
        log.info("compare %s params %s", json.dumps(point, sort_keys=True), describe(params, policy, cfg.sim))
        base, ins = _analytic(params, policy)
        sim_base, sim_ins = _simulate(params, policy, cfg.sim, cfg.workers)
        analytic = {**_measure_map("", base), **_measure_map("insured_", ins)}
        est = {**_estimate_map("", sim_base), **_estimate_map("insured_", sim_ins)}
        rows.extend(compare_estimates(analytic, est, point))
    return rows


def format_comparison(rows: list[ComparisonRow]) -> str:
    lines = []
    for r in rows:
        flag = "FLAG" if r.flagged else "ok"
        lines.append(
            f"{flag:4} {json.dumps(r.point, sort_keys=True)} {r.measure}: analytic {r.analytic:.8g} "
            f"sim {r.sim_mean:.8g} +/- {r.stderr:.3g} z={r.z:.2f}"
        )
    return "\n".join(lines)


# pricing


@dataclass(frozen=True)
class PricingReport:
    point: dict
    max_insurance_price: float
    min_deposit_threshold: float
    min_clearing_time: float
    epsilon: float
    warnings: tuple[str, ...]


def price(cfg: ExperimentConfig) -> list[PricingReport]:
    if cfg.policy is None:
        raise ConfigError("price needs a [policy] section")
    out = []
    for point in cfg.points():
        params, policy = cfg.resolve(point)
        log.info("price %s params %s", json.dumps(point, sort_keys=True), describe(params, policy, None))
        base, ins = _analytic(params, policy)
        max_price = ins.seller_gain - base.seller_gain
        tab = params.tabulated()
        out.append(PricingReport(
            point,
            max_price,
            min_deposit_threshold(cfg.epsilon, tab, policy),
            min_clearing_time(params),
            cfg.epsilon,
            tuple(policy_warnings(tab, policy, cfg.epsilon, max_price, emit=False)),
        ))
    return out
