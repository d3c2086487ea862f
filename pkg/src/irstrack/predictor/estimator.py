"""Estimator wrapper, rollout strategies and checkpoints for the observation predictor."""

import json
import logging

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..exceptions import ConfigurationError, TrainingError
from ..measurement import ObservationBlock
from ..numerics import make_rng
from . import network
from .dataset import sequence_features
from .normalize import Normalizer, complex_to_real, real_to_complex

logger = logging.getLogger(__name__)

__all__ = [
    "OBLSTMPredictor",
    "ob_nmse",
    "predict_observations",
    "rollout",
    "save_checkpoint",
    "load_checkpoint",
    "CHECKPOINT_VERSION",
]

CHECKPOINT_VERSION = 1


def ob_nmse(predicted, actual):
    """Per-interval normalized error of predicted blocks, averaged over samples.

    Both arrays are ``(J, L, tau1)``; returns length ``L``.
    """
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    err = np.sum(np.abs(predicted - actual) ** 2, axis=-1)
    ref = np.sum(np.abs(actual) ** 2, axis=-1)
    return np.mean(err / ref, axis=0)


class OBLSTMPredictor(BaseEstimator):
    """Predicts future pilot observations from a window of past ones.

    Inputs are complex feature sequences ``(J, input_len, D_I)`` built with
    :func:`~irstrack.predictor.dataset.block_features`; targets are the
    un-normalized received samples ``(J, pred_len, tau1)``.  Training
    minimizes the mean summed squared error with mini-batch Adam.

    Parameters
    ----------
    expansion : float
        Width of the LSTM layers as a multiple of ``D_I``.
    n_layers : int
        Number of stacked LSTM layers.
    input_len, pred_len : int
        Window lengths ``L_I`` and ``L_P``.
    learning_rate, batch_size, max_iter : Adam schedule.
    validation_fraction : float
        Held-out share of the training windows for the loss history.
    eval_every : int
        Iterations between validation-loss evaluations.
    beta1, beta2, epsilon : Adam constants.
    random_state : int, Generator or None
        Seeds initialization, the validation split and batch shuffling.
    """

    def __init__(
        self,
        expansion=3.0,
        n_layers=4,
        input_len=6,
        pred_len=1,
        learning_rate=1e-4,
        batch_size=10,
        max_iter=20000,
        validation_fraction=0.1,
        eval_every=200,
        beta1=0.9,
        beta2=0.999,
        epsilon=1e-8,
        random_state=None,
    ):
        self.expansion = expansion
        self.n_layers = n_layers
        self.input_len = input_len
        self.pred_len = pred_len
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.max_iter = max_iter
        self.validation_fraction = validation_fraction
        self.eval_every = eval_every
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state

    def _validate_xy(self, X, Y=None):
        X = np.asarray(X, dtype=complex)
        if X.ndim != 3 or X.shape[1] != self.input_len:
            raise ValueError(f"X must have shape (J, {self.input_len}, D_I), got {X.shape}")
        if Y is None:
            return X, None
        Y = np.asarray(Y, dtype=complex)
        if Y.ndim != 3 or Y.shape[0] != X.shape[0] or Y.shape[1] != self.pred_len:
            raise ValueError(f"Y must have shape ({X.shape[0]}, {self.pred_len}, tau1), got {Y.shape}")
        if X.shape[2] % Y.shape[2]:
            raise ValueError(f"D_I={X.shape[2]} is not a multiple of tau1={Y.shape[2]}")
        return X, Y

    def _normalized(self, X):
        return real_to_complex(self.normalizer_.transform(complex_to_real(X)))

    def fit(self, X, Y):
        """Train on windows ``X`` with labels ``Y``; returns ``self``.

        The validation-loss trajectory is kept in ``history_`` with keys
        ``iteration``, ``train_loss`` and ``val_loss`` (both in the units of
        the received samples).
        """
        X, Y = self._validate_xy(X, Y)
        rng = make_rng(self.random_state)
        tau1 = Y.shape[2]
        n_elements = X.shape[2] // tau1 - 1
        self.normalizer_ = Normalizer().fit(complex_to_real(X))
        Xn = self._normalized(X)
        # one scalar for both parts keeps the real/imaginary symmetry
        self.label_scale_ = float(max(np.sqrt(np.mean(np.abs(Y) ** 2)), np.finfo(float).tiny))
        Yn = Y / self.label_scale_
        params = network.init_params(
            tau1, n_elements, self.expansion, self.n_layers, self.input_len, self.pred_len, rng
        )

        n = X.shape[0]
        perm = rng.permutation(n)
        n_val = int(round(self.validation_fraction * n)) if n > 1 else 0
        val_idx, train_idx = perm[:n_val], perm[n_val:]
        if train_idx.size == 0:
            raise ValueError("no training samples left after the validation split")
        batch = min(self.batch_size, train_idx.size)
        scale2 = self.label_scale_ ** 2

        hist = {"iteration": [], "train_loss": [], "val_loss": []}
        order = rng.permutation(train_idx)
        pos = 0
        running = []
        for it in range(1, self.max_iter + 1):
            if pos + batch > order.size:
                order = rng.permutation(train_idx)
                pos = 0
            idx = order[pos:pos + batch]
            pos += batch
            value, grads = network.loss_and_grads(params, Xn[idx], Yn[idx])
            if not np.isfinite(value):
                raise TrainingError(f"non-finite training loss at iteration {it}")
            running.append(value)
            network.adam_step(params, grads, self.learning_rate, self.beta1, self.beta2, self.epsilon)
            if it % self.eval_every == 0 or it == self.max_iter:
                ref = val_idx if val_idx.size else train_idx
                val = network.loss(network.predict_raw(params, Xn[ref]), Yn[ref]) * scale2
                if not np.isfinite(val):
                    raise TrainingError(f"non-finite validation loss at iteration {it}")
                hist["iteration"].append(it)
                hist["train_loss"].append(float(np.mean(running)) * scale2)
                hist["val_loss"].append(val)
                running = []
                logger.debug("iteration %d: train %.4g, validation %.4g", it, hist["train_loss"][-1], val)

        self.params_ = params
        self.tau1_ = tau1
        self.n_elements_ = n_elements
        self.n_features_in_ = X.shape[2]
        self.history_ = {k: np.asarray(v) for k, v in hist.items()}
        return self

    def predict(self, X):
        """Predicted received samples ``(J, pred_len, tau1)``."""
        check_is_fitted(self, "params_")
        X, _ = self._validate_xy(X)
        return self.label_scale_ * network.predict_raw(self.params_, self._normalized(X))

    def score(self, X, Y):
        """Negative mean OB-NMSE (higher is better)."""
        return -float(np.mean(ob_nmse(self.predict(X), Y)))


def _blocks_from(pred, vs, t0):
    return [ObservationBlock(pred[k], vs[k], t0 + k, imaginary=True) for k in range(len(vs))]


def predict_observations(predictor, blocks, future_vs):
    """One network call on ``blocks`` paired with the known future matrices."""
    if len(future_vs) != predictor.pred_len:
        raise ConfigurationError(f"expected {predictor.pred_len} future matrices, got {len(future_vs)}")
    X = sequence_features(blocks)[None]
    pred = predictor.predict(X)[0]
    return _blocks_from(pred, future_vs, blocks[-1].t + 1)


def rollout(predictor, history, future_vs, strategy):
    """Imaginary observations for the ``len(future_vs)`` intervals after ``history``.

    Strategy ``"A"`` predicts the whole horizon from the full first-stage
    history in one call (needs ``input_len == len(history)`` and
    ``pred_len == horizon``).  Strategy ``"B"`` predicts one block at a time,
    sliding the window so each prediction feeds the next (needs
    ``pred_len == 1`` and ``input_len <= len(history)``).
    """
    horizon = len(future_vs)
    strategy = str(strategy).upper()
    if strategy == "A":
        if predictor.input_len != len(history) or predictor.pred_len != horizon:
            raise ConfigurationError(
                f"strategy A needs input_len == T1 ({len(history)}) and pred_len == T2 ({horizon}); "
                f"got input_len={predictor.input_len}, pred_len={predictor.pred_len}"
            )
        return predict_observations(predictor, list(history), list(future_vs))
    if strategy == "B":
        if predictor.pred_len != 1 or not 1 <= predictor.input_len <= len(history):
            raise ConfigurationError(
                f"strategy B needs pred_len == 1 and 1 <= input_len <= T1 ({len(history)}); "
                f"got input_len={predictor.input_len}, pred_len={predictor.pred_len}"
            )
        window = list(history[-predictor.input_len:])
        out = []
        for v in future_vs:
            block = predict_observations(predictor, window, [v])[0]
            out.append(block)
            window = window[1:] + [block]
        return out
    raise ConfigurationError(f"unknown strategy {strategy!r}; expected 'A' or 'B'")


def save_checkpoint(predictor, path):
    """Write a fitted predictor to ``path`` (``.npz``); arrays round-trip bit-exactly."""
    check_is_fitted(predictor, "params_")
    p = predictor.params_
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "estimator_params": {k: v for k, v in predictor.get_params().items() if k != "random_state"},
        "shapes": {
            "d_in": p.d_in, "hidden": p.hidden, "n_layers": p.n_layers,
            "input_len": p.input_len, "pred_len": p.pred_len, "tau1": p.tau1,
            "n_elements": predictor.n_elements_,
        },
        "step": p.step,
    }
    arrays = {
        "meta": np.array(json.dumps(meta)),
        "normalizer_mean": predictor.normalizer_.mean_,
        "normalizer_scale": predictor.normalizer_.scale_,
        "label_scale": np.array(predictor.label_scale_),
    }
    for group, store in (("w", p.weights), ("m", p.adam_m), ("v", p.adam_v)):
        for comp, named in store.items():
            for name, arr in named.items():
                arrays[f"{group}/{comp}/{name}"] = arr
    for key in ("iteration", "train_loss", "val_loss"):
        arrays[f"history/{key}"] = predictor.history_[key]
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Restore a predictor written by :func:`save_checkpoint`."""
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')}")
        est = OBLSTMPredictor(**meta["estimator_params"])
        shapes = meta["shapes"]
        stores = {"w": {}, "m": {}, "v": {}}
        for key in data.files:
            parts = key.split("/")
            if len(parts) == 3 and parts[0] in stores:
                stores[parts[0]].setdefault(parts[1], {})[parts[2]] = data[key].copy()
        params = network.NetworkParams(
            shapes["d_in"], shapes["hidden"], shapes["n_layers"], shapes["input_len"],
            shapes["pred_len"], shapes["tau1"], stores["w"], stores["m"], stores["v"], meta["step"],
        )
        norm = Normalizer()
        norm.mean_ = data["normalizer_mean"].copy()
        norm.scale_ = data["normalizer_scale"].copy()
        norm.n_features_in_ = norm.mean_.shape[0]
        est.normalizer_ = norm
        est.label_scale_ = float(data["label_scale"])
        est.params_ = params
        est.tau1_ = shapes["tau1"]
        est.n_elements_ = shapes["n_elements"]
        est.n_features_in_ = shapes["d_in"]
        est.history_ = {k: data[f"history/{k}"].copy() for k in ("iteration", "train_loss", "val_loss")}
    return est
