"""Estimation-quality metrics."""

import numpy as np

from ..predictor.estimator import ob_nmse

__all__ = [
    "nmse",
    "anmse",
    "ob_nmse",
    "plateau_level",
    "convergence_interval",
    "training_knee",
    "max_window_rise",
    "trend_slope",
]


def nmse(estimate, truth):
    """``||estimate - truth||^2 / ||truth||^2``; the last axis indexes entries.

    Raises
    ------
    ValueError
        If any ``truth`` vector is zero.
    """
    estimate = np.asarray(estimate)
    truth = np.asarray(truth)
    if estimate.shape != truth.shape:
        raise ValueError(f"shape mismatch: estimate {estimate.shape}, truth {truth.shape}")
    ref = np.sum(np.abs(truth) ** 2, axis=-1)
    if np.any(ref == 0):
        raise ValueError("NMSE is undefined for a zero truth vector")
    return np.sum(np.abs(estimate - truth) ** 2, axis=-1) / ref


def anmse(history):
    """Running mean of per-interval NMSE along the last axis."""
    history = np.asarray(history, dtype=float)
    return np.cumsum(history, axis=-1) / np.arange(1, history.shape[-1] + 1)


def plateau_level(curve, window=10):
    """Mean of the last ``window`` points of a convergence curve."""
    curve = np.asarray(curve, dtype=float)
    return float(np.mean(curve[-window:]))


def convergence_interval(curve, window=10, factor=1.5):
    """First 1-based interval after which ``curve`` stays within ``factor`` of its plateau.

    The plateau is :func:`plateau_level` over the last ``window`` points.
    """
    curve = np.asarray(curve, dtype=float)
    above = np.nonzero(curve > factor * plateau_level(curve, window))[0]
    return 1 if above.size == 0 else int(above[-1]) + 2


def training_knee(loss, fraction=0.1):
    """Index of the first evaluation that has covered ``1 - fraction`` of the total loss drop."""
    loss = np.asarray(loss, dtype=float)
    target = loss.min() + fraction * (loss[0] - loss.min())
    return int(np.argmax(loss <= target))


def max_window_rise(loss, window=10, start=0):
    """Largest relative rise of ``loss`` within any ``window``-point stretch from ``start`` on.

    For every window the rise is ``max(after) / first - 1``; returns 0 when
    fewer than two points remain.
    """
    loss = np.asarray(loss, dtype=float)[start:]
    worst = 0.0
    for j in range(max(len(loss) - 1, 0)):
        seg = loss[j:j + window]
        worst = max(worst, float(seg[1:].max() / seg[0] - 1.0)) if seg.size > 1 else worst
    return worst


def trend_slope(values):
    """Least-squares slope of ``values`` against their index."""
    values = np.asarray(values, dtype=float)
    return float(np.polyfit(np.arange(values.size), values, 1)[0])
