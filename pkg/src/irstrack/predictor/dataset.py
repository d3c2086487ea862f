"""Turning observation blocks into network inputs and training windows."""

import numpy as np

from ..channel import derive_statistics, equivalent_channel, evolve, init_channels
from ..measurement import ObservationBlock, measurement_matrix, observe, reference_matrix
from ..numerics import make_rng

__all__ = ["block_features", "sequence_features", "make_windows", "simulate_observations", "simulate_corpus"]


def block_features(block):
    """Complex feature vector of one interval, length ``tau1 * (N + 1)``.

    The ``tau1`` pilot samples followed by the reflection entries of ``V``;
    the first column of ``V`` (the direct path) is dropped, which keeps the
    length at ``tau1 * (N + 1)``.
    """
    return np.concatenate([block.y, block.v[:, 1:].ravel()])


def sequence_features(blocks):
    return np.stack([block_features(b) for b in blocks])


def make_windows(blocks, input_len, pred_len):
    """Sliding windows over one trajectory of blocks.

    Returns ``X`` of shape ``(J, input_len, D_I)`` and labels ``Y`` of shape
    ``(J, pred_len, tau1)`` holding the un-normalized received samples of
    the ``pred_len`` blocks following each input window.
    """
    n = len(blocks) - input_len - pred_len + 1
    if n < 1:
        return None, None
    feats = sequence_features(blocks)
    ys = np.stack([b.y for b in blocks])
    X = np.stack([feats[j:j + input_len] for j in range(n)])
    Y = np.stack([ys[j + input_len:j + input_len + pred_len] for j in range(n)])
    return X, Y


def simulate_observations(cfg, n_intervals, rng, q=None, stats=None):
    """Real pilot blocks of one trajectory ``t = 1..n_intervals`` and the true channels."""
    stats = derive_statistics(cfg) if stats is None else stats
    q = reference_matrix("dft", cfg.n) if q is None else q
    state = init_channels(stats, rng)
    blocks, truth = [], []
    for t in range(1, n_intervals + 1):
        state = evolve(state, stats, cfg, rng)
        h = equivalent_channel(state)
        v = measurement_matrix(t, cfg.tau1, q)
        blocks.append(ObservationBlock(observe(h, v, cfg.p, cfg.noise_var, rng), v, t))
        truth.append(h)
    return blocks, np.array(truth)


def simulate_corpus(cfg, n_samples, input_len, pred_len, rng=None, n_intervals=None, q=None,
                    windows_per_trajectory=None):
    """Training windows cut from independent protocol-length trajectories.

    Each trajectory covers ``n_intervals`` (default ``t1 + t2``) intervals
    starting at ``t = 1``, so window offsets match what the predictor sees
    during the second stage.  ``windows_per_trajectory`` keeps only that
    many randomly chosen windows of each trajectory (all by default), which
    makes the samples less correlated for the same corpus size.
    """
    rng = make_rng(rng)
    n_intervals = cfg.t1 + cfg.t2 if n_intervals is None else n_intervals
    if n_intervals < input_len + pred_len:
        raise ValueError("trajectories are shorter than one input + prediction window")
    stats = derive_statistics(cfg)
    xs, ys, total = [], [], 0
    while total < n_samples:
        blocks, _ = simulate_observations(cfg, n_intervals, rng, q=q, stats=stats)
        X, Y = make_windows(blocks, input_len, pred_len)
        if windows_per_trajectory is not None and windows_per_trajectory < X.shape[0]:
            keep = np.sort(rng.choice(X.shape[0], windows_per_trajectory, replace=False))
            X, Y = X[keep], Y[keep]
        xs.append(X)
        ys.append(Y)
        total += X.shape[0]
    return np.concatenate(xs)[:n_samples], np.concatenate(ys)[:n_samples]
