"""Channel generation and Gauss-Markov evolution for a single-antenna IRS link.

Three links are modelled: IRS->AP (``g``, length N), user->IRS (``h_r``,
length N) and user->AP (``h_d``, scalar).  Each is Rician with a fixed LoS
part and a Gaussian NLoS part, and drifts over time intervals as a
first-order autoregression around its mean.  The tracker works on the
equivalent channel ``h = [h_d; conj(h_r) * g]``.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np

from .exceptions import ConfigurationError
from .numerics import sample_complex_gaussian
from .validation import check_cvector, check_unit_interval

__all__ = [
    "SystemConfig",
    "ChannelStatistics",
    "ChannelState",
    "path_loss",
    "ura_los_model",
    "derive_statistics",
    "init_channels",
    "evolve",
    "equivalent_channel",
    "composite_noise",
    "state_matrices_special",
    "state_matrices_general",
    "db_to_linear",
    "dbm_to_watt",
]

BETA_CAP = 1e12


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def dbm_to_watt(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Physical and protocol constants.

    Defaults are the reference special-case setup: a 5x7 IRS, AP at
    (3, 0, 0) m, IRS at (0, 50, 2) m, user at (2, 50, 0) m, l0 = -30 dB,
    p = 26 dBm and noise at -80 dBm.  Perturbation variances left as
    ``None`` default to the NLoS variance of their link.
    """

    n_elements: int = 35
    irs_shape: Optional[Tuple[int, int]] = None
    ap_position: Tuple[float, float, float] = (3.0, 0.0, 0.0)
    irs_position: Tuple[float, float, float] = (0.0, 50.0, 2.0)
    user_position: Tuple[float, float, float] = (2.0, 50.0, 0.0)
    d0: float = 1.0
    l0: float = 1e-3
    gamma_ia: float = 2.2
    gamma_ui: float = 2.2
    gamma_ua: float = 3.6
    beta_ia: float = 0.0
    beta_ui: float = 0.0
    beta_ua: float = 0.0
    alpha_ia: float = 0.0
    alpha_ui: float = 0.01
    alpha_ua: float = 0.01
    sigma2_ia: Optional[float] = None
    sigma2_ui: Optional[float] = None
    sigma2_ua: Optional[float] = None
    p: float = float(dbm_to_watt(26.0))
    noise_var: float = float(dbm_to_watt(-80.0))
    tau: int = 100
    tau1: int = 6
    t1: int = 6
    t2: int = 6

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise ConfigurationError("n_elements must be a positive integer")
        shape = self.irs_shape
        if shape is None:
            shape = (5, 7) if self.n_elements == 35 else (1, int(self.n_elements))
        shape = tuple(int(s) for s in shape)
        if len(shape) != 2 or shape[0] * shape[1] != self.n_elements:
            raise ConfigurationError(f"irs_shape {shape} does not hold {self.n_elements} elements")
        object.__setattr__(self, "irs_shape", shape)
        for name in ("ap_position", "irs_position", "user_position"):
            pos = tuple(float(v) for v in getattr(self, name))
            if len(pos) != 3:
                raise ConfigurationError(f"{name} must have three coordinates")
            object.__setattr__(self, name, pos)
        for link in ("ia", "ui", "ua"):
            try:
                check_unit_interval(getattr(self, f"alpha_{link}"), f"alpha_{link}")
            except ValueError as exc:
                raise ConfigurationError(str(exc)) from None
            if getattr(self, f"beta_{link}") < 0:
                raise ConfigurationError(f"beta_{link} must be nonnegative")
            s2 = getattr(self, f"sigma2_{link}")
            if s2 is not None and s2 < 0:
                raise ConfigurationError(f"sigma2_{link} must be nonnegative")
        if self.d0 <= 0 or self.l0 <= 0:
            raise ConfigurationError("d0 and l0 must be positive")
        if self.p < 0 or self.noise_var < 0:
            raise ConfigurationError("p and noise_var must be nonnegative")
        if not 1 <= self.tau1 <= self.tau:
            raise ConfigurationError(f"need 1 <= tau1 <= tau, got tau1={self.tau1}, tau={self.tau}")
        if self.t1 < 0 or self.t2 < 0:
            raise ConfigurationError("t1 and t2 must be nonnegative")

    @property
    def n(self):
        return int(self.n_elements)

    def distances(self):
        """Link distances ``(d_IA, d_UI, d_UA)`` in meters."""
        ap, irs, ue = (np.asarray(v) for v in (self.ap_position, self.irs_position, self.user_position))
        return (
            float(np.linalg.norm(irs - ap)),
            float(np.linalg.norm(ue - irs)),
            float(np.linalg.norm(ue - ap)),
        )

    def path_losses(self):
        d_ia, d_ui, d_ua = self.distances()
        return (
            path_loss(d_ia, self.gamma_ia, self),
            path_loss(d_ui, self.gamma_ui, self),
            path_loss(d_ua, self.gamma_ua, self),
        )

    def perturbation_variances(self):
        """``(sigma2_IA, sigma2_UI, sigma2_UA)``.

        Unset entries default to the NLoS variance ``l / (1 + beta)`` of their
        link, which keeps the recursion stationary; for Rayleigh links this
        is the path loss itself.
        """
        losses = self.path_losses()
        betas = (self.beta_ia, self.beta_ui, self.beta_ua)
        given = (self.sigma2_ia, self.sigma2_ui, self.sigma2_ua)
        return tuple(
            float(_rician_split(l, b)[1] if s is None else s) for s, l, b in zip(given, losses, betas)
        )

    def replace(self, **changes):
        """Copy with ``changes``; a new ``n_elements`` re-derives the IRS shape unless one is given."""
        if "n_elements" in changes and "irs_shape" not in changes:
            changes["irs_shape"] = None
        return replace(self, **changes)

    @classmethod
    def special_case(cls, **overrides):
        """Static IRS-AP link, user links drifting with alpha = 0.01."""
        params = dict(alpha_ia=0.0, alpha_ui=0.01, alpha_ua=0.01)
        params.update(overrides)
        return cls(**params)

    @classmethod
    def general_case(cls, **overrides):
        """All three links drifting with alpha = 0.01."""
        params = dict(alpha_ia=0.01, alpha_ui=0.01, alpha_ua=0.01)
        params.update(overrides)
        return cls(**params)


def path_loss(d, gamma, cfg):
    """Large-scale gain ``l0 * (d / d0) ** -gamma``."""
    if d <= 0:
        raise ValueError(f"distance must be positive, got {d}")
    return float(cfg.l0 * (d / cfg.d0) ** (-gamma))


def _ura_response(cfg, direction):
    # half-wavelength grid in the IRS (y, z) plane
    rows, cols = cfg.irs_shape
    m, k = np.meshgrid(np.arange(rows), np.arange(cols), indexing="ij")
    u = direction / np.linalg.norm(direction)
    return np.exp(1j * np.pi * (m.ravel() * u[1] + k.ravel() * u[2]))


def ura_los_model(cfg):
    """Unit-modulus LoS components ``(g_los, hr_los, hd_los)`` for a uniform rectangular IRS."""
    ap, irs, ue = (np.asarray(v) for v in (cfg.ap_position, cfg.irs_position, cfg.user_position))
    g_los = _ura_response(cfg, ap - irs)
    hr_los = _ura_response(cfg, ue - irs)
    return g_los, hr_los, np.complex128(1.0)


@dataclass(frozen=True)
class ChannelStatistics:
    """Means and per-element NLoS variances of the three links."""

    g_mean: np.ndarray
    hr_mean: np.ndarray
    hd_mean: complex
    l_ia: float
    l_ui: float
    l_ua: float
    var_ia: float
    var_ui: float
    var_ua: float

    @property
    def n(self):
        return self.g_mean.shape[0]

    def equivalent_mean(self):
        """Mean of ``h``; the links are independent so means multiply."""
        return np.concatenate([[self.hd_mean], np.conj(self.hr_mean) * self.g_mean])

    def second_moment(self):
        """Diagonal of ``E[h h^H]`` (off-diagonal terms vanish for independent elements)."""
        g2 = np.abs(self.g_mean) ** 2 + self.var_ia
        r2 = np.abs(self.hr_mean) ** 2 + self.var_ui
        return np.concatenate([[np.abs(self.hd_mean) ** 2 + self.var_ua], g2 * r2])

    def covariance(self):
        """Diagonal of ``Cov[h]``."""
        return self.second_moment() - np.abs(self.equivalent_mean()) ** 2


def _rician_split(loss, beta):
    beta = min(float(beta), BETA_CAP)
    return np.sqrt(loss * beta / (1.0 + beta)), loss / (1.0 + beta)


def derive_statistics(cfg, los_model: Optional[Callable] = None):
    """Link means and NLoS variances from geometry and Rician factors.

    ``los_model(cfg)`` must return unit-modulus LoS entries
    ``(g_los, hr_los, hd_los)``; the uniform-rectangular-array response is
    used when omitted.
    """
    los_model = ura_los_model if los_model is None else los_model
    g_los, hr_los, hd_los = los_model(cfg)
    g_los = check_cvector(g_los, "g_los", cfg.n)
    hr_los = check_cvector(hr_los, "hr_los", cfg.n)
    l_ia, l_ui, l_ua = cfg.path_losses()
    amp_ia, var_ia = _rician_split(l_ia, cfg.beta_ia)
    amp_ui, var_ui = _rician_split(l_ui, cfg.beta_ui)
    amp_ua, var_ua = _rician_split(l_ua, cfg.beta_ua)
    return ChannelStatistics(
        g_mean=amp_ia * g_los,
        hr_mean=amp_ui * hr_los,
        hd_mean=complex(amp_ua * complex(hd_los)),
        l_ia=l_ia,
        l_ui=l_ui,
        l_ua=l_ua,
        var_ia=var_ia,
        var_ui=var_ui,
        var_ua=var_ua,
    )


@dataclass(frozen=True)
class ChannelState:
    """Realized links at one time interval ``t``."""

    g: np.ndarray
    h_r: np.ndarray
    h_d: complex
    t: int = 0

    def __post_init__(self):
        g = check_cvector(self.g, "g")
        h_r = check_cvector(self.h_r, "h_r", g.shape[0])
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "h_r", h_r)
        object.__setattr__(self, "h_d", complex(self.h_d))


def init_channels(stats, rng):
    """Draw each link from its stationary Gaussian marginal, at ``t = 0``."""
    g = sample_complex_gaussian(stats.g_mean, np.full(stats.n, stats.var_ia), rng)
    h_r = sample_complex_gaussian(stats.hr_mean, np.full(stats.n, stats.var_ui), rng)
    h_d = sample_complex_gaussian(stats.hd_mean, stats.var_ua, rng)
    return ChannelState(g=g, h_r=h_r, h_d=complex(h_d), t=0)


def evolve(state, stats, cfg, rng, return_noise=False):
    """Advance every link by one interval of the Gauss-Markov recursion.

    ``x(t) = sqrt(1 - alpha) (x(t-1) - mean) + sqrt(alpha) u(t) + mean`` with
    ``u ~ CN(0, sigma2 I)`` drawn fresh and independent of ``x(t-1)``.

    With ``return_noise`` the perturbations ``(u_ia, u_ui, u_ua)`` are
    returned alongside the new state.
    """
    s_ia, s_ui, s_ua = cfg.perturbation_variances()
    n = state.g.shape[0]
    u_ia = sample_complex_gaussian(np.zeros(n), np.full(n, s_ia), rng)
    u_ui = sample_complex_gaussian(np.zeros(n), np.full(n, s_ui), rng)
    u_ua = complex(sample_complex_gaussian(0.0, s_ua, rng))

    def step(x, mean, alpha, u):
        return np.sqrt(1.0 - alpha) * (x - mean) + np.sqrt(alpha) * u + mean

    new = ChannelState(
        g=step(state.g, stats.g_mean, cfg.alpha_ia, u_ia),
        h_r=step(state.h_r, stats.hr_mean, cfg.alpha_ui, u_ui),
        h_d=step(state.h_d, stats.hd_mean, cfg.alpha_ua, u_ua),
        t=state.t + 1,
    )
    if return_noise:
        return new, (u_ia, u_ui, u_ua)
    return new


def equivalent_channel(state):
    """``[h_d; conj(h_r) * g]``, so that ``v^H h = h_r^H diag(theta) g + h_d``."""
    return np.concatenate([[state.h_d], np.conj(state.h_r) * state.g])


def composite_noise(prev, u_ia, u_ui, u_ua, cfg):
    """Process noise ``u_g`` of the general-case recursion for zero-mean links.

    With ``h(t) = A_g h(t-1) + u_g(t)`` the reflected entries collect the three
    cross terms of ``conj(h_r(t)) g(t)`` that involve a fresh perturbation.
    """
    a_ia, a_ui, a_ua = cfg.alpha_ia, cfg.alpha_ui, cfg.alpha_ua
    reflected = (
        np.sqrt(a_ia * (1 - a_ui)) * u_ia * np.conj(prev.h_r)
        + np.sqrt(a_ui * (1 - a_ia)) * prev.g * np.conj(u_ui)
        + np.sqrt(a_ia * a_ui) * u_ia * np.conj(u_ui)
    )
    return np.concatenate([[np.sqrt(a_ua) * u_ua], reflected])


def state_matrices_special(cfg, g_assumed):
    """``(A_h, B_h, C_h)`` for a static IRS-AP link.

    ``g_assumed`` supplies ``|g_n|^2`` for the reflected noise covariance:
    pass the true ``g`` for oracle tracking or ``sqrt(l_IA)`` per element for
    the statistical variant.
    """
    g = check_cvector(g_assumed, "g_assumed", cfg.n)
    _, s_ui, s_ua = cfg.perturbation_variances()
    n = cfg.n
    a = np.diag(np.concatenate([[np.sqrt(1 - cfg.alpha_ua)], np.full(n, np.sqrt(1 - cfg.alpha_ui))]))
    b = np.diag(np.concatenate([[np.sqrt(cfg.alpha_ua)], np.full(n, np.sqrt(cfg.alpha_ui))]))
    c = np.diag(np.concatenate([[s_ua], s_ui * np.abs(g) ** 2]))
    return a.astype(complex), b.astype(complex), c.astype(complex)


def state_matrices_general(cfg):
    """Transition matrix ``A_g`` when all three links drift."""
    n = cfg.n
    refl = np.sqrt((1 - cfg.alpha_ia) * (1 - cfg.alpha_ui))
    return np.diag(np.concatenate([[np.sqrt(1 - cfg.alpha_ua)], np.full(n, refl)])).astype(complex)
