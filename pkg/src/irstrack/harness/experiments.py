"""Monte-Carlo experiment presets and CSV output.

Every trial ``i`` of a run with master seed ``s`` draws its randomness from
``s ^ i``, so any single trial can be replayed on its own.  A preset returns
a mapping ``series -> metric -> (trials, intervals)`` array, which
:func:`write_results` turns into one CSV per series and metric.
"""

import copy
import csv
import logging
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np
import scipy
import sklearn

from .. import __version__
from ..channel import SystemConfig
from ..exceptions import ConfigurationError
from ..measurement import reference_matrix
from ..predictor import OBLSTMPredictor, ob_nmse, rollout, simulate_corpus
from .config import config_hash, config_to_mapping
from .metrics import anmse
from .protocol import (
    ProtocolSchedule,
    continue_tracking,
    run_channel_estimation,
    run_first_stage,
    run_second_stage,
    training_overhead,
    trial_streams,
)

logger = logging.getLogger(__name__)

__all__ = [
    "ExperimentResult",
    "PRESETS",
    "DESK_PREDICTOR_CONFIG",
    "DESK_HYPER",
    "tracking_trials",
    "channel_estimation_trials",
    "train_predictor",
    "two_stage_trials",
    "observation_prediction_trials",
    "overhead_table",
    "run_experiment",
    "write_results",
    "summarize",
]

DEFAULT_TRIALS = 100
DEFAULT_HORIZON = 40

# small enough that training an observation predictor takes about a minute on one CPU
DESK_PREDICTOR_CONFIG = dict(n_elements=7, tau1=2, t1=6, t2=6)
DESK_HYPER = dict(
    expansion=3.0, n_layers=2, learning_rate=1e-3, batch_size=10, max_iter=10000, eval_every=100,
    n_samples=10_000,
)


@dataclass
class ExperimentResult:
    """Per-series metric arrays plus bookkeeping for the manifest."""

    scenario: str
    series: dict
    cfg: SystemConfig
    seed: int
    trials: int
    tables: dict = field(default_factory=dict)
    elapsed: float = 0.0


def tracking_trials(cfg, kind, n_intervals, trials, seed, q="dft", cga="II"):
    """NMSE of stage-1 tracking, shape ``(trials, n_intervals)``."""
    out = np.empty((trials, n_intervals))
    for i in range(trials):
        c_rng, n_rng, q_rng = trial_streams(seed ^ i)
        # random reference matrices come from their own stream
        q_arg = q if q != "random" else _random_reference(cfg, q_rng)
        out[i] = run_first_stage(cfg, kind, c_rng, n_rng, n_intervals=n_intervals, q=q_arg, cga=cga).nmse
    return out


def _random_reference(cfg, rng):
    return reference_matrix("random", cfg.n, rng=rng)


def channel_estimation_trials(cfg, n_intervals, trials, seed):
    out = np.empty((trials, n_intervals))
    for i in range(trials):
        c_rng, n_rng, _ = trial_streams(seed ^ i)
        out[i] = run_channel_estimation(cfg, c_rng, n_rng, n_intervals)
    return out


def train_predictor(cfg, strategy, hyper=None, seed=0, n_samples=None):
    """Fit an observation predictor for ``strategy`` on simulated pilots of ``cfg``.

    Strategy A gets ``input_len = t1`` and ``pred_len = t2``; strategy B
    gets ``input_len = t1`` and ``pred_len = 1``.
    """
    hyper = dict(DESK_HYPER if hyper is None else hyper)
    n_samples = hyper.pop("n_samples", 10_000) if n_samples is None else n_samples
    hyper.pop("n_samples", None)
    hyper.pop("strategy", None)
    strategy = str(strategy).upper()
    if strategy == "A":
        lens = dict(input_len=cfg.t1, pred_len=cfg.t2)
    elif strategy == "B":
        lens = dict(input_len=min(hyper.pop("input_len", cfg.t1), cfg.t1), pred_len=1)
    else:
        raise ConfigurationError(f"unknown strategy {strategy!r}")
    hyper.pop("input_len", None)
    hyper.pop("pred_len", None)
    rng = np.random.default_rng(seed)
    X, Y = simulate_corpus(cfg, n_samples, lens["input_len"], lens["pred_len"], rng)
    hyper.setdefault("random_state", seed)
    return OBLSTMPredictor(**lens, **hyper).fit(X, Y)


def two_stage_trials(cfg, predictor, strategy, trials, seed, kind="special"):
    """Pure tracking vs predicted-observation tracking on shared channel realizations.

    Returns arrays over ``t1 + t2`` intervals: ``"ct"`` keeps measuring in
    stage 2, ``"two_stage"`` switches to the predictor.
    """
    n = cfg.t1 + cfg.t2
    ct = np.empty((trials, n))
    ts = np.empty((trials, n))
    for i in range(trials):
        c_rng, n_rng, _ = trial_streams(seed ^ i)
        first = run_first_stage(cfg, kind, c_rng, n_rng)
        c_copy = copy.deepcopy(c_rng)
        cont = continue_tracking(first, c_rng, noise_rng=n_rng)
        pred = run_second_stage(first, predictor, strategy, c_copy)
        ct[i] = np.r_[first.nmse, cont.nmse]
        ts[i] = np.r_[first.nmse, pred.nmse]
    return {"ct": ct, "two_stage": ts}


def observation_prediction_trials(cfg, predictor, strategy, trials, seed, kind="special"):
    """Per-trial OB-NMSE of the ``t2`` predicted blocks, shape ``(trials, t2)``."""
    out = np.empty((trials, cfg.t2))
    for i in range(trials):
        c_rng, n_rng, _ = trial_streams(seed ^ i)
        first = run_first_stage(cfg, kind, c_rng, n_rng)
        actual = continue_tracking(first, c_rng, noise_rng=n_rng)
        future_vs = [b.v for b in actual.blocks]
        pred = rollout(predictor, first.blocks, future_vs, strategy)
        out[i] = ob_nmse(np.array([[b.y for b in pred]]), np.array([[b.y for b in actual.blocks]]))
    return out


def overhead_table(total=3600, n_elements=35, tau1=6, tau=100):
    """Pilot slots of each training scheme over ``total`` intervals."""
    schemes = {
        "ct": ProtocolSchedule(total, total, 0, tau1, tau),
        "ce": ProtocolSchedule(total, total, 0, n_elements + 1, tau),
        "two_stage_a": ProtocolSchedule(total, 6, 6, tau1, tau),
        "two_stage_b": ProtocolSchedule(total, 6, 3, tau1, tau),
    }
    return {
        name: {"T": s.total, "t1": s.t1, "t2": s.t2, "tau1": s.tau1, "pilot_slots": training_overhead(s)}
        for name, s in schemes.items()
    }


def _tracking_series(cfg, kind, horizon, trials, seed, **kw):
    nm = tracking_trials(cfg, kind, horizon, trials, seed, **kw)
    return {"nmse": nm, "anmse": anmse(nm)}


def _fig6(base, trials, seed, horizon, **_):
    cfg = base if base is not None else SystemConfig.special_case()
    series = {f"tau1_{t}": _tracking_series(cfg.replace(tau1=t), "special", horizon, trials, seed)
              for t in (2, 6, 10)}
    series["ce"] = {"nmse": channel_estimation_trials(cfg, horizon, trials, seed)}
    return cfg, series, {}


def _fig7(base, trials, seed, horizon, **_):
    cfg = (base if base is not None else SystemConfig.special_case()).replace(tau1=6)
    series = {kind: _tracking_series(cfg, "special", horizon, trials, seed, q=kind) for kind in ("dft", "random")}
    return cfg, series, {}


def _fig10(base, trials, seed, horizon, tau1=6, **_):
    cfg = (base if base is not None else SystemConfig.general_case()).replace(tau1=tau1)
    series = {f"cga_{m}": _tracking_series(cfg, "general", horizon, trials, seed, cga=m) for m in ("I", "II")}
    return cfg, series, {}


def _fig12(base, trials, seed, horizon, **kw):
    return _fig10(base, trials, seed, horizon, tau1=2)


def _fig11(base, trials, seed, horizon, **_):
    cfg = base if base is not None else SystemConfig.general_case()
    series = {f"tau1_{t}": _tracking_series(cfg.replace(tau1=t), "general", horizon, trials, seed, cga="II")
              for t in (2, 4, 6, 8)}
    series["ce"] = {"nmse": channel_estimation_trials(cfg, horizon, trials, seed)}
    return cfg, series, {}


def _desk(base, case):
    if base is not None:
        return base
    maker = SystemConfig.special_case if case == "special" else SystemConfig.general_case
    return maker(**DESK_PREDICTOR_CONFIG)


def _two_stage_preset(base, trials, seed, case, scenarios, predictors=None, hyper=None):
    cfg = _desk(base, case)
    series = {}
    for name, (t2, strategy) in scenarios.items():
        sc_cfg = cfg.replace(t2=t2)
        pred = (predictors or {}).get(name) or train_predictor(sc_cfg, strategy, hyper, seed)
        res = two_stage_trials(sc_cfg, pred, strategy, trials, seed, case)
        series.setdefault(f"ct_t2_{t2}", {"nmse": res["ct"]})
        series[name] = {"nmse": res["two_stage"]}
    return cfg, series, {}


def _fig9(base, trials, seed, horizon, predictors=None, hyper=None, **_):
    scenarios = {"scenario_a": (6, "A"), "scenario_b": (3, "B")}
    return _two_stage_preset(base, trials, seed, "special", scenarios, predictors, hyper)


def _fig13(base, trials, seed, horizon, predictors=None, hyper=None, **_):
    scenarios = {"scenario_a": (3, "A"), "scenario_b": (3, "B")}
    return _two_stage_preset(base, trials, seed, "general", scenarios, predictors, hyper)


def _table1(base, trials, seed, horizon, predictors=None, hyper=None, **_):
    cfg = _desk(base, "special")
    series = {}
    for strategy in ("A", "B"):
        pred = (predictors or {}).get(strategy) or train_predictor(cfg, strategy, hyper, seed)
        series[f"strategy_{strategy.lower()}"] = {
            "ob_nmse": observation_prediction_trials(cfg, pred, strategy, trials, seed)
        }
    return cfg, series, {}


def _table2(base, trials, seed, horizon, **_):
    cfg = base if base is not None else SystemConfig.special_case()
    return cfg, {}, {"overhead": overhead_table(3600, cfg.n, cfg.tau1, cfg.tau)}


def _custom(base, trials, seed, horizon, case="special", cga="II", **_):
    if base is None:
        raise ConfigurationError("the custom scenario needs a configuration file")
    return base, {"tracking": _tracking_series(base, case, horizon, trials, seed, cga=cga)}, {}


PRESETS = {
    "fig6": _fig6,
    "fig7": _fig7,
    "fig9": _fig9,
    "fig10": _fig10,
    "fig11": _fig11,
    "fig12": _fig12,
    "fig13": _fig13,
    "table1": _table1,
    "table2": _table2,
    "custom": _custom,
}


def run_experiment(scenario, trials=DEFAULT_TRIALS, seed=0, cfg=None, horizon=DEFAULT_HORIZON, **options):
    """Run a named preset; raises :class:`ConfigurationError` for unknown names."""
    if scenario not in PRESETS:
        raise ConfigurationError(f"unknown scenario {scenario!r}; choose from {sorted(PRESETS)}")
    if trials < 1 or horizon < 1:
        raise ConfigurationError("trials and horizon must be positive")
    start = time.perf_counter()
    used_cfg, series, tables = PRESETS[scenario](cfg, trials, seed, horizon, **options)
    return ExperimentResult(scenario, series, used_cfg, seed, trials, tables, time.perf_counter() - start)


def _write_series_csv(path, values):
    values = np.atleast_2d(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["interval", "mean", "std", "trials"])
        for k in range(values.shape[1]):
            col = values[:, k]
            writer.writerow([k + 1, repr(float(col.mean())), repr(float(col.std())), values.shape[0]])


def write_results(result, out_dir):
    """Write one CSV per series/metric plus a ``manifest.txt``; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, metrics in result.series.items():
        for metric, values in metrics.items():
            path = os.path.join(out_dir, f"{result.scenario}_{name}_{metric}.csv")
            _write_series_csv(path, values)
            paths.append(path)
    for name, rows in result.tables.items():
        path = os.path.join(out_dir, f"{result.scenario}_{name}.csv")
        cols = list(next(iter(rows.values())))
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["scheme"] + cols)
            for scheme, row in rows.items():
                writer.writerow([scheme] + [row[c] for c in cols])
        paths.append(path)
    manifest = os.path.join(out_dir, "manifest.txt")
    with open(manifest, "w") as fh:
        fh.write(f"scenario: {result.scenario}\n")
        fh.write(f"seed: {result.seed}\n")
        fh.write(f"trials: {result.trials}\n")
        fh.write(f"config_hash: {config_hash(result.cfg)}\n")
        fh.write(f"config: {config_to_mapping(result.cfg)}\n")
        fh.write(f"irstrack: {__version__}\n")
        fh.write(f"python: {platform.python_version()}\n")
        fh.write(f"numpy: {np.__version__}\nscipy: {scipy.__version__}\nscikit-learn: {sklearn.__version__}\n")
    paths.append(manifest)
    return paths


def summarize(out_dir):
    """Final-interval mean of every series CSV in ``out_dir``: ``{file stem: (intervals, mean)}``."""
    summary = {}
    for name in sorted(os.listdir(out_dir)):
        if not name.endswith(".csv"):
            continue
        with open(os.path.join(out_dir, name), newline="") as fh:
            rows = list(csv.DictReader(fh))
        if rows and "mean" in rows[0]:
            summary[name[:-4]] = (len(rows), float(rows[-1]["mean"]))
    return summary
