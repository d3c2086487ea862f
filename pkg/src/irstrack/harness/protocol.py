"""Two-stage tracking/prediction protocol and pilot accounting.

Stage 1 measures pilots every interval and runs the tracker.  Stage 2 stops
measuring: a predictor emits imaginary observations which the tracker
consumes exactly like real ones, while the channel keeps evolving underneath
for scoring only.
"""

import copy
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from ..channel import SystemConfig, derive_statistics, equivalent_channel, evolve, init_channels
from ..exceptions import ConfigurationError
from ..measurement import ObservationBlock, measurement_matrix, observe, reference_matrix
from ..predictor.estimator import rollout
from ..tracker import KalmanTracker, batch_mmse_estimate
from .metrics import anmse, nmse

__all__ = [
    "ProtocolSchedule",
    "TrialResult",
    "StageResult",
    "trial_streams",
    "training_overhead",
    "run_first_stage",
    "continue_tracking",
    "run_second_stage",
    "run_channel_estimation",
]


@dataclass(frozen=True)
class ProtocolSchedule:
    """Frame layout of ``total`` intervals of ``tau`` slots each.

    With ``cycling`` the pattern of ``t1`` training intervals followed by
    ``t2`` predicted ones repeats over the whole frame; otherwise one
    training stage is followed by prediction for the rest of the frame.
    ``t2 = 0`` means every interval is trained.
    """

    total: int
    t1: int
    t2: int
    tau1: int
    tau: int = 100
    cycling: bool = True

    def __post_init__(self):
        if self.total < 0 or self.t1 < 0 or self.t2 < 0:
            raise ConfigurationError("interval counts must be nonnegative")
        if not 1 <= self.tau1 <= self.tau:
            raise ConfigurationError(f"need 1 <= tau1 <= tau, got tau1={self.tau1}, tau={self.tau}")
        if self.t1 + self.t2 == 0:
            raise ConfigurationError("t1 + t2 must be positive")
        if self.cycling and self.t1 + self.t2 > self.total:
            raise ConfigurationError("t1 + t2 exceeds the frame length")

    def training_mask(self):
        """Boolean per interval: True where pilots are transmitted."""
        idx = np.arange(self.total)
        if self.t2 == 0:
            return np.ones(self.total, dtype=bool)
        if self.cycling:
            return (idx % (self.t1 + self.t2)) < self.t1
        return idx < self.t1

    def pilot_slots(self):
        return int(self.tau1 * np.count_nonzero(self.training_mask()))

    def data_slots(self):
        return int(self.tau * self.total - self.pilot_slots())


def training_overhead(schedule):
    """Number of slots spent on pilots over the frame."""
    return schedule.pilot_slots()


@dataclass
class TrialResult:
    """Metrics of one Monte-Carlo trial."""

    nmse: np.ndarray
    pilot_slots: int
    wall_clock: float
    ob_nmse: Optional[np.ndarray] = None

    @property
    def anmse(self):
        return anmse(self.nmse)


@dataclass
class StageResult:
    """Everything produced by a run of consecutive intervals.

    ``truth`` holds the hidden equivalent channel of each interval and is
    used only for scoring.
    """

    cfg: SystemConfig
    tracker: KalmanTracker
    blocks: List[ObservationBlock]
    estimates: np.ndarray
    truth: np.ndarray
    channel_state: object
    stats: object
    q: object
    links: list = field(default_factory=list)

    @property
    def nmse(self):
        return nmse(self.estimates, self.truth)


def trial_streams(seed):
    """Independent generators for channel evolution, pilot noise and reference draws."""
    return tuple(np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))


def _make_tracker(cfg, kind, cga, noise_model, stats, g):
    if kind not in ("special", "general"):
        raise ConfigurationError(f"unknown tracker kind {kind!r}")
    tracker = KalmanTracker(cfg, case=kind, cga=cga, noise_model=noise_model)
    return tracker.fit(stats, g=g if kind == "special" and noise_model == "oracle" else None)


def run_first_stage(
    cfg,
    tracker_kind="special",
    rng=None,
    noise_rng=None,
    n_intervals=None,
    q="dft",
    cga="II",
    noise_model="oracle",
    observation_noise=True,
):
    """Track over intervals ``t = 1..n_intervals`` (default ``cfg.t1``) with real pilots.

    Parameters
    ----------
    rng : Generator
        Drives channel initialization and evolution.
    noise_rng : Generator, optional
        Drives pilot noise; defaults to ``rng``.  Keeping them separate lets
        two runs share a channel realization while differing in noise.
    q : {"dft", "random"} or ReferenceMatrix
        Random matrices are drawn from ``noise_rng``.
    """
    rng = np.random.default_rng(rng)
    noise_rng = rng if noise_rng is None else noise_rng
    n_intervals = cfg.t1 if n_intervals is None else n_intervals
    stats = derive_statistics(cfg)
    if isinstance(q, str):
        q = reference_matrix(q, cfg.n, rng=noise_rng)
    state = init_channels(stats, rng)
    tracker = _make_tracker(cfg, tracker_kind, cga, noise_model, stats, state.g)
    first = StageResult(cfg, tracker, [], np.empty((0, cfg.n + 1), complex),
                        np.empty((0, cfg.n + 1), complex), state, stats, q)
    return _advance(first, n_intervals, rng, noise_rng, observation_noise, inplace=True)


def _advance(stage, n_intervals, rng, noise_rng, observation_noise, inplace=False):
    """Continue ``stage`` with ``n_intervals`` measured intervals."""
    if not inplace:
        stage = _fork(stage)
    cfg = stage.cfg
    state = stage.channel_state
    noise_var = cfg.noise_var if observation_noise else 0.0
    est, truth = list(stage.estimates), list(stage.truth)
    for _ in range(n_intervals):
        state = evolve(state, stage.stats, cfg, rng)
        t = state.t
        h = equivalent_channel(state)
        v = measurement_matrix(t, cfg.tau1, stage.q)
        block = ObservationBlock(observe(h, v, cfg.p, noise_var, noise_rng), v, t)
        links = (state.h_r, state.g)
        est.append(stage.tracker.step(block, links))
        truth.append(h)
        stage.blocks.append(block)
        stage.links.append(links)
    stage.channel_state = state
    stage.estimates = np.array(est).reshape(-1, cfg.n + 1)
    stage.truth = np.array(truth).reshape(-1, cfg.n + 1)
    return stage


def _fork(stage):
    out = copy.copy(stage)
    out.tracker = copy.deepcopy(stage.tracker)
    out.blocks = list(stage.blocks)
    out.links = list(stage.links)
    return out


def continue_tracking(first, rng, n_intervals=None, noise_rng=None, observation_noise=True):
    """Keep measuring real pilots after ``first``; returns only the new intervals.

    ``first`` is left untouched.  With ``observation_noise=False`` the pilots
    are noiseless, which is the reference for the oracle-predictor check.
    """
    n_intervals = first.cfg.t2 if n_intervals is None else n_intervals
    noise_rng = rng if noise_rng is None else noise_rng
    full = _advance(first, n_intervals, rng, noise_rng, observation_noise)
    k = len(first.blocks)
    return StageResult(first.cfg, full.tracker, full.blocks[k:], full.estimates[k:], full.truth[k:],
                       full.channel_state, full.stats, full.q, full.links[k:])


def run_second_stage(first, predictor, strategy, rng, n_intervals=None):
    """Predicted-observation tracking for the ``n_intervals`` (default ``cfg.t2``) after ``first``.

    The predictor only sees the first-stage pilot log and the known future
    measurement matrices; the channel drawn from ``rng`` is recorded for
    scoring and never reaches the filter or the predictor.  ``first`` is
    left untouched.
    """
    cfg = first.cfg
    n_intervals = cfg.t2 if n_intervals is None else n_intervals
    tracker = copy.deepcopy(first.tracker)
    if tracker.case == "general" and str(tracker.cga).upper() == "I":
        raise ConfigurationError("CGA-I needs the true links and cannot run without pilots")
    t0 = len(first.blocks)
    future_vs = [measurement_matrix(t0 + k + 1, cfg.tau1, first.q) for k in range(n_intervals)]
    predicted = rollout(predictor, first.blocks, future_vs, strategy)

    state = first.channel_state
    est, truth, links = [], [], []
    for block in predicted:
        state = evolve(state, first.stats, cfg, rng)
        truth.append(equivalent_channel(state))
        links.append((state.h_r, state.g))
        est.append(tracker.step(block))
    return StageResult(cfg, tracker, predicted, np.array(est), np.array(truth), state,
                       first.stats, first.q, links)


def run_channel_estimation(cfg, rng, noise_rng=None, n_intervals=None):
    """Per-interval linear MMSE estimation with all ``N + 1`` DFT patterns.

    The benchmark without temporal tracking: every interval spends ``N + 1``
    pilot slots and is estimated from its own block only.  Returns the
    per-interval NMSE.
    """
    rng = np.random.default_rng(rng)
    noise_rng = rng if noise_rng is None else noise_rng
    n_intervals = cfg.t1 if n_intervals is None else n_intervals
    stats = derive_statistics(cfg)
    q = reference_matrix("dft", cfg.n)
    v = q.q
    mean = stats.equivalent_mean()
    prior = np.diag(stats.covariance()).astype(complex)
    state = init_channels(stats, rng)
    out = np.empty(n_intervals)
    for k in range(n_intervals):
        state = evolve(state, stats, cfg, rng)
        h = equivalent_channel(state)
        block = ObservationBlock(observe(h, v, cfg.p, cfg.noise_var, noise_rng), v, state.t)
        out[k] = nmse(batch_mmse_estimate(prior, block, cfg.p, cfg.noise_var, mean), h)
    return out


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start
