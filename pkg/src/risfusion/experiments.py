"""Experiment runners and result files.

An :class:`ExperimentConfig` is resolved from defaults, an optional JSON
document and explicit overrides. Each runner returns a :class:`ResultTable`
whose rows share one flat schema (``CSV_COLUMNS``); :func:`emit_results`
writes them as CSV or JSON, plus an optimizer-trace sidecar when the
long-term RIS design ran.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .channel import rician_amplitude
from .detect import (TrialConfig, observation_bound_at, observation_bound_curve,
                     run_trials)
from .fusion import RULES
from .risopt import build_design_inputs, g_objective, noise_proxy
from .scenario import RIS_MODES, ChannelDefaults, build_scenario

EXPERIMENTS = ("pd_vs_n", "pd_vs_rician", "roc", "optimize_only")
CSV_COLUMNS = ("experiment", "rule", "ris_mode", "sweep_name", "sweep_value",
               "pf0_target", "pf0_achieved", "pd0", "pd0_stderr", "trials_h0",
               "trials_h1", "seed")
BOUND_RULE = "OBSERVATION_BOUND"


@dataclass
class ExperimentConfig:
    experiment: str = "pd_vs_n"
    # layout
    n_sensors: int = 10
    field_side: float = 40.0
    ris_position: list = field(default_factory=lambda: [40.0, 20.0, 5.0])
    fc_position: list = field(default_factory=lambda: [65.0, 40.0, 2.0])
    ris_rows: int = 5
    ris_cols: int = 5
    n_antennas: int = 128
    # sweeps
    n_list: list = field(default_factory=lambda: [16, 32, 64, 128])
    rician_db_list: list = field(default_factory=lambda: [15.0, 25.0, 35.0, 45.0])
    rician_rf_db_sweep: float = 20.0
    roc_pf0_grid: list = field(default_factory=lambda: [
        0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0])
    # sensors
    pd: float = 0.5
    pf: float = 0.05
    alpha: float = 1.0
    # channel
    mu_db: float = -20.0
    d0: float = 1.0
    nu1: float = 2.0
    nu2: float = 4.0
    sigma_w2_dbm: float = -70.0
    tx_power_dbm: float = 0.0
    rician_low_db: float = 10.0
    rician_high_db: float = 20.0
    # Monte Carlo
    target_pf0: float = 0.01
    trials_h0: int = 200_000
    trials_h1: int = 50_000
    noise_draws_per_channel: int = 1
    rules: list = field(default_factory=lambda: list(RULES))
    ris_modes: list = field(default_factory=lambda: list(RIS_MODES))
    seed: int = 0
    workers: int = 1
    # RIS design
    design_restarts: int = 10
    design_max_iter: int = 500
    design_rel_tol: float = 1e-8
    # output
    out: str = "results"
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}; "
                             f"choose from {', '.join(EXPERIMENTS)}")
        if self.format not in ("csv", "json"):
            raise ValueError("format must be 'csv' or 'json'")
        for rule in self.rules:
            if rule not in RULES:
                raise ValueError(f"unknown rule {rule!r}")
        for mode in self.ris_modes:
            if mode not in RIS_MODES:
                raise ValueError(f"unknown RIS mode {mode!r}")
        if self.trials_h0 < 1 or self.trials_h1 < 1 or self.noise_draws_per_channel < 1:
            raise ValueError("trial counts must be positive")
        if not 0.0 < self.target_pf0 < 1.0:
            raise ValueError("target_pf0 must lie in (0, 1)")

    @classmethod
    def resolve(cls, path=None, **overrides) -> "ExperimentConfig":
        """Defaults, then the JSON file at ``path``, then non-None overrides."""
        values = {}
        if path is not None:
            with open(path) as fh:
                doc = json.load(fh)
            if not isinstance(doc, dict):
                raise ValueError(f"{path}: configuration must be a JSON object")
            values.update(doc)
        values.update({k: v for k, v in overrides.items() if v is not None})
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ValueError(f"unknown configuration keys: {', '.join(unknown)}")
        return cls(**values)

    def to_dict(self):
        return dataclasses.asdict(self)

    def channel_defaults(self) -> ChannelDefaults:
        return ChannelDefaults(mu_db=self.mu_db, d0=self.d0, nu1=self.nu1, nu2=self.nu2,
                               sigma_w2_dbm=self.sigma_w2_dbm,
                               tx_power_dbm=self.tx_power_dbm,
                               rician_low_db=self.rician_low_db,
                               rician_high_db=self.rician_high_db)

    def trial_config(self, ris_mode, target_pf0=None) -> TrialConfig:
        t = self.noise_draws_per_channel
        return TrialConfig(n_channel_draws=max(1, self.trials_h0 // t),
                           n_noise_draws_per_channel=t,
                           target_pf0=self.target_pf0 if target_pf0 is None else target_pf0,
                           master_seed=self.seed, rule=self.rules[0], ris_mode=ris_mode,
                           n_channel_draws_h1=max(1, self.trials_h1 // t))


@dataclass
class ResultTable:
    experiment: str
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _build(config: ExperimentConfig, n_antennas, rician_wr_db=None, rician_rf_db=None):
    return build_scenario(seed=config.seed, n_sensors=config.n_sensors,
                          n_antennas=n_antennas, ris_rows=config.ris_rows,
                          ris_cols=config.ris_cols, field_side=config.field_side,
                          ris_position=config.ris_position, fc_position=config.fc_position,
                          pd=config.pd, pf=config.pf, alpha=config.alpha,
                          channel=config.channel_defaults(),
                          rician_wr_db=rician_wr_db, rician_rf_db=rician_rf_db,
                          design_restarts=config.design_restarts,
                          design_max_iter=config.design_max_iter,
                          design_rel_tol=config.design_rel_tol)


def _row(config, rule, ris_mode, sweep_name, sweep_value, pf0_target, point=None, **extra):
    row = dict(experiment=config.experiment, rule=rule, ris_mode=ris_mode,
               sweep_name=sweep_name, sweep_value=sweep_value, pf0_target=pf0_target,
               pf0_achieved=None, pd0=None, pd0_stderr=None, trials_h0=None,
               trials_h1=None, seed=config.seed)
    if point is not None:
        row.update(pf0_achieved=point.pf0_achieved, pd0=point.pd0,
                   pd0_stderr=point.std_err_pd0, trials_h0=point.trials_h0,
                   trials_h1=point.trials_h1)
        extra.setdefault("threshold", point.threshold)
        extra.setdefault("failures", point.failures)
    row.update(extra)
    return row


def _bound_row(config, sweep_name, pf0):
    pd0 = observation_bound_at(pf0, config.n_sensors, config.pd, config.pf)
    return _row(config, BOUND_RULE, "none", sweep_name, None, pf0,
                pf0_achieved=pf0, pd0=pd0, pd0_stderr=0.0)


def _sweep_points(config, scenario, sweep_name, sweep_value, table):
    n = scenario.layout.n_fc_antennas
    for mode in config.ris_modes:
        rules, skipped = [], []
        for rule in config.rules:
            if rule == "ZFC" and n < scenario.layout.n_sensors:
                skipped.append((rule, f"zero forcing needs N >= K (N={n})"))
            else:
                rules.append(rule)
        if rules:
            sets = run_trials(scenario, config.trial_config(mode), rules=rules,
                              workers=config.workers)
        for rule in config.rules:
            reason = dict(skipped).get(rule)
            if reason is not None:
                table.rows.append(_row(config, rule, mode, sweep_name, sweep_value,
                                       config.target_pf0, skipped=reason))
            else:
                point = sets.roc_point(rule, config.target_pf0)
                table.rows.append(_row(config, rule, mode, sweep_name, sweep_value,
                                       config.target_pf0, point))


def _record_design(config, scenario, table):
    if "long_term_design" in config.ris_modes and scenario.design_trace is not None:
        table.traces["long_term_design"] = list(scenario.design_trace.g_values)


def run_pd_vs_n(config: ExperimentConfig) -> ResultTable:
    """P_D0 at the target P_F0 versus the number of FC antennas."""
    if not config.n_list:
        raise ValueError("n_list must not be empty")
    table = ResultTable(config.experiment, config=config.to_dict())
    base = _build(config, int(config.n_list[0]))
    _record_design(config, base, table)
    for n in config.n_list:
        _sweep_points(config, base.with_antennas(int(n)), "n_antennas", int(n), table)
    table.rows.append(_bound_row(config, "n_antennas", config.target_pf0))
    return table


def run_pd_vs_rician(config: ExperimentConfig) -> ResultTable:
    """P_D0 versus a common sensor->RIS Rician factor, RIS->FC factor held fixed."""
    if not config.rician_db_list:
        raise ValueError("rician_db_list must not be empty")
    table = ResultTable(config.experiment, config=config.to_dict())
    base = _build(config, config.n_antennas, rician_rf_db=config.rician_rf_db_sweep)
    _record_design(config, base, table)
    for db in config.rician_db_list:
        scenario = base.with_rician(b_wr=rician_amplitude(float(db)))
        _sweep_points(config, scenario, "rician_wr_db", float(db), table)
    table.rows.append(_bound_row(config, "rician_wr_db", config.target_pf0))
    return table


def run_roc(config: ExperimentConfig) -> ResultTable:
    """(P_F0, P_D0) over a grid of false-alarm targets at ``n_antennas``."""
    table = ResultTable(config.experiment, config=config.to_dict())
    scenario = _build(config, config.n_antennas)
    _record_design(config, scenario, table)
    for mode in config.ris_modes:
        sets = run_trials(scenario, config.trial_config(mode), rules=config.rules,
                          workers=config.workers)
        for rule in config.rules:
            for target in config.roc_pf0_grid:
                point = sets.roc_point(rule, float(target))
                table.rows.append(_row(config, rule, mode, "pf0_target", float(target),
                                       float(target), point))
    for nu, (pf0, pd0) in enumerate(observation_bound_curve(config.n_sensors, config.pd,
                                                            config.pf)):
        table.rows.append(_row(config, BOUND_RULE, "none", "nu", nu, None,
                               pf0_achieved=pf0, pd0=pd0, pd0_stderr=0.0))
    return table


def run_optimize_only(config: ExperimentConfig) -> ResultTable:
    """Run the long-term RIS design alone and report its objective."""
    table = ResultTable(config.experiment, config=config.to_dict())
    scenario = _build(config, config.n_antennas)
    inputs = build_design_inputs(scenario.los, scenario.params.gains, scenario.sensors.alpha)
    table.traces["long_term_design"] = list(scenario.design_trace.g_values)
    summary = {}
    for mode in RIS_MODES:
        theta = scenario.theta(mode)
        summary[mode] = {
            "g": g_objective(theta, inputs),
            "noise_proxy": noise_proxy(theta, scenario.los, scenario.params.gains,
                                       scenario.sensors.alpha),
            "phases_rad": np.angle(theta.theta).tolist(),
        }
    summary["iterations"] = scenario.design_trace.iterations
    summary["converged"] = scenario.design_trace.converged
    table.extra["design"] = summary
    return table


RUNNERS = {
    "pd_vs_n": run_pd_vs_n,
    "pd_vs_rician": run_pd_vs_rician,
    "roc": run_roc,
    "optimize_only": run_optimize_only,
}


def run_experiment(config: ExperimentConfig) -> ResultTable:
    return RUNNERS[config.experiment](config)


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def table_to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in table.rows:
        writer.writerow([_cell(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if np.isfinite(v) else repr(v)
    if isinstance(value, np.integer):
        return int(value)
    return value


def table_to_json(table: ResultTable, timestamp=None) -> str:
    doc = {
        "experiment": table.experiment,
        "columns": list(CSV_COLUMNS),
        "records": _jsonable(table.rows),
        "config": _jsonable(table.config),
        "metadata": {"created": timestamp or datetime.datetime.now(
            datetime.timezone.utc).isoformat()},
    }
    if table.extra:
        doc["extra"] = _jsonable(table.extra)
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def table_from_json(text) -> ResultTable:
    doc = json.loads(text)

    def restore(v):
        if v in ("inf", "-inf", "nan"):
            return float(v)
        return v

    rows = [{k: restore(v) for k, v in rec.items()} for rec in doc["records"]]
    return ResultTable(doc["experiment"], rows=rows, config=doc["config"],
                       extra=doc.get("extra", {}))


def _output_path(path, fmt):
    root, ext = os.path.splitext(str(path))
    if ext.lower() in (".csv", ".json"):
        return root + "." + fmt
    return str(path) + "." + fmt


def emit_results(table: ResultTable, path, format="csv"):
    """Write ``table`` to ``path`` (extension added if missing).

    Returns the list of files written; the optimizer trace goes to a
    ``<stem>.trace.csv`` sidecar with columns ``iteration,g``.
    """
    if format not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    target = _output_path(path, format)
    text = table_to_csv(table) if format == "csv" else table_to_json(table)
    written = []
    try:
        parent = os.path.dirname(target)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(target, "w", newline="") as fh:
            fh.write(text)
        written.append(target)
        for name, values in table.traces.items():
            stem = os.path.splitext(target)[0]
            sidecar = f"{stem}.trace.csv" if name == "long_term_design" else \
                f"{stem}.{name}.trace.csv"
            with open(sidecar, "w", newline="") as fh:
                fh.write("iteration,g\n")
                for i, g in enumerate(values):
                    fh.write(f"{i},{float(g)!r}\n")
            written.append(sidecar)
    except OSError as exc:
        raise OSError(f"cannot write results to {target}: {exc}") from exc
    return written
