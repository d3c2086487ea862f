"""Kalman tracking of the equivalent channel.

Two trackers share the same predict/update core:

* the special case (static IRS-AP link) runs a plain Kalman filter with
  transition ``A_h``, noise gain ``B_h`` and a fixed noise covariance ``C_h``;
* the general case (all links drifting) runs the generalized filter whose
  process noise is a sum of Gaussian and product-Gaussian terms.  Its
  covariance is replaced every interval by a diagonal Gaussian approximation,
  either from the true per-link channels (``cga="I"``) or from the previous
  estimate alone (``cga="II"``).

The physical observation is ``y = sqrt(p) V h + z``; the filters work with the
scaled matrix ``sqrt(p) V`` so the gain and the observation model agree.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .channel import derive_statistics, state_matrices_general, state_matrices_special
from .exceptions import ConfigurationError
from .numerics import hermitian_solve
from .validation import check_cmatrix, check_cvector, check_psd

__all__ = [
    "KalmanState",
    "FilterModel",
    "kf_init",
    "kf_predict",
    "kf_update",
    "kf_step",
    "kf_step_rician",
    "cga1_covariance",
    "cga2_covariance",
    "theorem1_bound",
    "gkf_step",
    "batch_mmse_estimate",
    "KalmanTracker",
]

# eigenvalues of the posterior below this fraction of the prior spread are round-off
EIG_CLIP = 1e-12


@dataclass(frozen=True)
class KalmanState:
    """Filter posterior after interval ``t``.

    Attributes
    ----------
    h : ndarray, shape (N+1,)
        Correction ``h_KF(t)``.
    m : ndarray, shape (N+1, N+1)
        Estimation covariance ``M_KF(t)``.
    noise_cov : ndarray or None
        Diagonal process-noise covariance to use at the next prediction
        (general case only).
    t : int
    """

    h: np.ndarray
    m: np.ndarray
    noise_cov: Optional[np.ndarray] = None
    t: int = 0


@dataclass(frozen=True)
class FilterModel:
    """State-space description ``h(t) = A h(t-1) + B u(t)``.

    ``noise_cov`` is the static covariance of ``u``; leave it ``None`` to take
    the covariance carried by :class:`KalmanState` (general case).  ``mean``
    is the channel mean removed by the Rician wrapper.
    """

    a: np.ndarray
    b: np.ndarray
    noise_cov: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None

    def __post_init__(self):
        a = check_cmatrix(self.a, "A")
        n = a.shape[0]
        b = check_cmatrix(self.b, "B", (n, n))
        for name, mat in (("A", a), ("B", b)):
            if np.count_nonzero(mat - np.diag(np.diag(mat))):
                raise ValueError(f"{name} must be diagonal")
            d = np.diag(mat)
            if np.any(np.abs(d.imag) > 0) or np.any(d.real < 0) or np.any(d.real > 1):
                raise ValueError(f"{name} entries must be real and within [0, 1]")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if self.noise_cov is not None:
            object.__setattr__(self, "noise_cov", check_cmatrix(self.noise_cov, "noise_cov", (n, n)))
        if self.mean is not None:
            object.__setattr__(self, "mean", check_cvector(self.mean, "mean", n))

    @property
    def dim(self):
        return self.a.shape[0]


def _hermitize(m):
    return 0.5 * (m + m.conj().T)


def _clean_covariance(m, scale):
    """Hermitize and zero eigenvalues that are round-off relative to ``scale``."""
    m = _hermitize(m)
    eig, vec = np.linalg.eigh(m)
    cut = EIG_CLIP * scale
    small = eig <= cut
    if not np.any(small):
        return m
    if np.all(small):
        return np.zeros_like(m)
    eig = np.where(small, 0.0, eig)
    return _hermitize((vec * eig) @ vec.conj().T)


def kf_init(model, prior_cov, noise_cov=None):
    """Start the recursion: zero correction (or the mean), ``M_KF = prior_cov``.

    ``noise_cov`` seeds the general-case process-noise covariance used at the
    first prediction.
    """
    prior = check_psd(prior_cov, "prior_cov")
    if prior.shape[0] != model.dim:
        raise ValueError(f"prior_cov is {prior.shape}, model has dimension {model.dim}")
    h0 = np.zeros(model.dim, complex) if model.mean is None else model.mean.copy()
    if noise_cov is not None:
        noise_cov = check_cmatrix(noise_cov, "noise_cov", (model.dim, model.dim))
    return KalmanState(h=h0, m=_hermitize(prior), noise_cov=noise_cov, t=0)


def kf_predict(state, model):
    """Prediction step: ``h_hat = A h_KF`` and ``M = A M_KF A^H + B C B^H``."""
    cov = model.noise_cov if model.noise_cov is not None else state.noise_cov
    if cov is None:
        raise ValueError("no process-noise covariance in the model or the state")
    a, b = model.a, model.b
    h_hat = a @ state.h
    m = a @ state.m @ a.conj().T + b @ cov @ b.conj().T
    return h_hat, _hermitize(m)


def kf_update(state, h_hat, m, obs, p, noise_var):
    """Update step with the block ``obs`` and effective matrix ``sqrt(p) V``.

    Returns the new :class:`KalmanState`; ``noise_cov`` is carried over
    unchanged.
    """
    v = np.sqrt(p) * obs.v
    if v.shape[1] != h_hat.shape[0]:
        raise ValueError(f"V has {v.shape[1]} columns, state has {h_hat.shape[0]} entries")
    if not np.any(m):
        # no uncertainty left: nothing to learn from the innovation
        return KalmanState(h=h_hat.copy(), m=np.zeros_like(m), noise_cov=state.noise_cov, t=obs.t)
    vm = v @ m
    s = _hermitize(vm @ v.conj().T + noise_var * np.eye(v.shape[0]))
    gain = hermitian_solve(s, vm).conj().T
    innovation = obs.y - v @ h_hat
    h_new = h_hat + gain @ innovation
    scale = float(np.max(np.real(np.diag(m))))
    m_new = _clean_covariance(m - gain @ vm, scale)
    return KalmanState(h=h_new, m=m_new, noise_cov=state.noise_cov, t=obs.t)


def kf_step(state, model, obs, p, noise_var):
    """One predict + update interval."""
    h_hat, m = kf_predict(state, model)
    return kf_update(state, h_hat, m, obs, p, noise_var)


def kf_step_rician(state, model, obs, p, noise_var):
    """Track the zero-mean deviation ``h - mean`` and add the mean back.

    The observation is shifted by ``sqrt(p) V mean`` before the update.
    Without a model mean this is exactly :func:`kf_step`.
    """
    if model.mean is None:
        return kf_step(state, model, obs, p, noise_var)
    mean = model.mean
    centered = replace(state, h=state.h - mean)
    shifted = replace(obs, y=obs.y - np.sqrt(p) * (obs.v @ mean))
    h_hat, m = kf_predict(centered, model)
    new = kf_update(centered, h_hat, m, shifted, p, noise_var)
    return replace(new, h=new.h + mean)


def cga1_covariance(h_r_prev, g_prev, cfg):
    """Gaussian approximation of the composite process noise from the true links.

    The reflected entries add the variances of the two Gaussian cross terms
    and of the product term, matched in mean and variance.
    """
    h_r_prev = check_cvector(h_r_prev, "h_r_prev")
    g_prev = check_cvector(g_prev, "g_prev", h_r_prev.shape[0])
    s_ia, s_ui, s_ua = cfg.perturbation_variances()
    a_ia, a_ui = cfg.alpha_ia, cfg.alpha_ui
    refl = (
        a_ia * (1 - a_ui) * np.abs(h_r_prev) ** 2 * s_ia
        + a_ui * (1 - a_ia) * np.abs(g_prev) ** 2 * s_ui
        + a_ia * a_ui * s_ia * s_ui
    )
    return np.diag(np.concatenate([[cfg.alpha_ua * s_ua], refl])).astype(complex)


def cga_offsets(cfg):
    """``(delta1, delta2)`` of the estimate-driven approximation."""
    s_ia, s_ui, _ = cfg.perturbation_variances()
    a_ia, a_ui = cfg.alpha_ia, cfg.alpha_ui
    delta1 = np.sqrt(a_ia * (1 - a_ia) * a_ui * (1 - a_ui) * s_ia * s_ui)
    delta2 = a_ia * a_ui * s_ia * s_ui
    return float(delta1), float(delta2)


def cga2_covariance(h_prev, cfg):
    """Gaussian approximation of the composite process noise from ``h(t-1)`` only.

    The two link-dependent variances are replaced by their lower bound
    ``delta1 (|Re h_n| + |Im h_n|)``, so the per-link channels are not needed.
    """
    h_prev = check_cvector(h_prev, "h_prev", cfg.n + 1)
    _, _, s_ua = cfg.perturbation_variances()
    delta1, delta2 = cga_offsets(cfg)
    refl = delta1 * (np.abs(h_prev[1:].real) + np.abs(h_prev[1:].imag)) + delta2
    return np.diag(np.concatenate([[cfg.alpha_ua * s_ua], refl])).astype(complex)


def theorem1_bound(a, b):
    """Return ``(|a|^2 + |b|^2, |Re(ab)| + |Im(ab)|)``; the first never falls below the second."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ab = a * b
    return np.abs(a) ** 2 + np.abs(b) ** 2, np.abs(ab.real) + np.abs(ab.imag)


def gkf_step(state, model, obs, p, noise_var, cfg, cga="II", links=None):
    """One interval of the generalized filter.

    Predicts with the covariance carried in ``state.noise_cov`` (noise enters
    with ``B = I`` unless the model says otherwise), updates with ``obs`` and
    refreshes the covariance for the next interval: from the new correction
    for ``cga="II"``, or from the true links ``(h_r, g)`` of this interval for
    ``cga="I"``.
    """
    if state.noise_cov is None:
        raise ValueError("general-case state needs an initial noise covariance")
    h_hat, m = kf_predict(state, replace(model, noise_cov=None))
    new = kf_update(state, h_hat, m, obs, p, noise_var)
    mode = str(cga).upper()
    if mode == "II":
        cov = cga2_covariance(new.h, cfg)
    elif mode == "I":
        if links is None:
            raise ValueError("CGA-I needs the true (h_r, g) of the current interval")
        h_r, g = links
        cov = cga1_covariance(h_r, g, cfg)
    else:
        raise ValueError(f"unknown approximation {cga!r}; expected 'I' or 'II'")
    return replace(new, noise_cov=cov)


def batch_mmse_estimate(prior_cov, obs, p, noise_var, mean=None):
    """Linear MMSE estimate of ``h`` from a single block, given its prior covariance.

    ``mean + C V'^H (V' C V'^H + noise_var I)^{-1} (y - V' mean)`` with
    ``V' = sqrt(p) V``.  Serves as the per-interval channel-estimation
    benchmark and as a check on a single filter update.
    """
    c = check_cmatrix(prior_cov, "prior_cov")
    v = np.sqrt(p) * obs.v
    mean = np.zeros(c.shape[0], complex) if mean is None else check_cvector(mean, "mean", c.shape[0])
    s = v @ c @ v.conj().T + noise_var * np.eye(v.shape[0])
    return mean + c @ v.conj().T @ np.linalg.solve(s, obs.y - v @ mean)


class KalmanTracker(BaseEstimator):
    """Stateful tracker of the equivalent channel, in estimator form.

    Parameters
    ----------
    config : SystemConfig
        Physical constants; ``alpha_ia == 0`` is required for ``case="special"``.
    case : {"special", "general"}
        Plain Kalman filter or generalized filter.
    cga : {"I", "II"}
        Noise approximation of the generalized filter.
    noise_model : {"oracle", "statistical"}
        How the special-case noise covariance gets ``|g_n|^2``: from the true
        IRS-AP channel passed to :meth:`fit`, or from its mean power.
    """

    def __init__(self, config=None, case="special", cga="II", noise_model="oracle"):
        self.config = config
        self.case = case
        self.cga = cga
        self.noise_model = noise_model

    def fit(self, stats=None, g=None):
        """Build the state-space model and reset the posterior.

        Parameters
        ----------
        stats : ChannelStatistics, optional
            Derived from ``config`` when omitted.
        g : array_like, optional
            True IRS-AP channel, required by ``noise_model="oracle"`` in the
            special case.
        """
        cfg = self.config
        if cfg is None:
            raise ConfigurationError("KalmanTracker needs a SystemConfig")
        stats = derive_statistics(cfg) if stats is None else stats
        self.stats_ = stats
        mean = stats.equivalent_mean()
        rician = bool(np.any(mean != 0))
        if self.case == "special":
            if cfg.alpha_ia != 0:
                raise ConfigurationError("special-case tracking assumes a static IRS-AP link (alpha_ia = 0)")
            if self.noise_model == "oracle":
                if g is None:
                    raise ConfigurationError("oracle noise model needs the true IRS-AP channel g")
                g_assumed = g
            elif self.noise_model == "statistical":
                g_assumed = np.full(cfg.n, np.sqrt(stats.l_ia), complex)
            else:
                raise ConfigurationError(f"unknown noise_model {self.noise_model!r}")
            a, b, c = state_matrices_special(cfg, g_assumed)
            self.model_ = FilterModel(a, b, c, mean if rician else None)
            prior = np.diag(stats.covariance() if rician else stats.second_moment())
            self.state_ = kf_init(self.model_, prior)
        elif self.case == "general":
            if rician:
                raise ConfigurationError("general-case tracking assumes zero-mean (Rayleigh) links")
            if str(self.cga).upper() not in ("I", "II"):
                raise ConfigurationError(f"unknown approximation {self.cga!r}")
            a = state_matrices_general(cfg)
            self.model_ = FilterModel(a, np.eye(cfg.n + 1, dtype=complex))
            prior = np.diag(stats.second_moment()).astype(complex)
            self.state_ = kf_init(self.model_, prior, noise_cov=prior)
        else:
            raise ConfigurationError(f"unknown case {self.case!r}")
        return self

    def step(self, block, links=None):
        """Consume one observation block and return the new estimate ``h_KF(t)``."""
        check_is_fitted(self, "state_")
        cfg = self.config
        if self.case == "special":
            self.state_ = kf_step_rician(self.state_, self.model_, block, cfg.p, cfg.noise_var)
        else:
            self.state_ = gkf_step(
                self.state_, self.model_, block, cfg.p, cfg.noise_var, cfg, self.cga, links
            )
        return self.state_.h.copy()

    def transform(self, blocks, links=None):
        """Run :meth:`step` over a sequence of blocks; returns ``(len(blocks), N+1)`` estimates."""
        out = []
        for i, block in enumerate(blocks):
            out.append(self.step(block, None if links is None else links[i]))
        return np.array(out)
