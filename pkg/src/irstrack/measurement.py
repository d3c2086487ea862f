"""Reflection patterns, periodic measurement matrices and pilot observations."""

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .numerics import dft_matrix, sample_complex_gaussian
from .validation import check_cmatrix, check_cvector

__all__ = [
    "ReferenceMatrix",
    "ObservationBlock",
    "reference_matrix",
    "column_indices",
    "measurement_matrix",
    "observe",
]

REFERENCE_KINDS = ("dft", "random")


@dataclass(frozen=True)
class ReferenceMatrix:
    """Full-rank ``(N+1) x (N+1)`` matrix whose columns are cycled as pilot patterns."""

    q: np.ndarray
    kind: str

    @property
    def size(self):
        return self.q.shape[0]


@dataclass(frozen=True)
class ObservationBlock:
    """Pilot samples ``y`` of one interval and the matrix ``V`` that produced them.

    ``imaginary`` marks blocks produced by the predictor rather than measured.
    """

    y: np.ndarray
    v: np.ndarray
    t: int
    imaginary: bool = False

    def __post_init__(self):
        y = check_cvector(self.y, "y")
        v = check_cmatrix(self.v, "V", (y.shape[0], None))
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "v", v)


def reference_matrix(kind, n, rng=None, max_redraws=10):
    """Build the reference matrix for ``n`` IRS elements.

    ``kind="dft"`` gives the ``(n+1)``-point DFT matrix; ``kind="random"``
    draws iid ``CN(0, 1)`` entries, redrawing until numerically full rank.
    """
    if n < 1:
        raise ValueError(f"need at least one IRS element, got {n}")
    kind = str(kind).lower()
    size = n + 1
    if kind == "dft":
        return ReferenceMatrix(dft_matrix(size), "dft")
    if kind != "random":
        raise ValueError(f"unknown reference kind {kind!r}; expected one of {REFERENCE_KINDS}")
    if rng is None:
        raise ValueError("random reference matrix needs an rng")
    for _ in range(max_redraws):
        q = sample_complex_gaussian(np.zeros((size, size)), 1.0, rng)
        if np.linalg.matrix_rank(q) == size:
            return ReferenceMatrix(q, "random")
    raise NumericalError(f"random reference matrix rank-deficient after {max_redraws} draws")


def column_indices(t, tau1, size):
    """0-based columns of ``Q`` used in interval ``t`` (1-based).

    Slot ``i`` of interval ``t`` uses global pilot index ``k = tau1 (t-1) + i``
    and the wrap ``((k - 1) mod size) + 1`` so the columns cycle through all of ``Q``.
    """
    if t < 1:
        raise ValueError(f"interval index starts at 1, got {t}")
    k = tau1 * (t - 1) + np.arange(1, tau1 + 1)
    return (k - 1) % size


def measurement_matrix(t, tau1, q):
    """``V(t)``: row ``i`` is the transpose of the ``i``-th scheduled column of ``Q``."""
    q_arr = q.q if isinstance(q, ReferenceMatrix) else np.asarray(q, dtype=complex)
    return q_arr[:, column_indices(t, tau1, q_arr.shape[0])].T.copy()


def observe(h, v, p, noise_var, rng):
    """Received pilots ``sqrt(p) V h + z`` with ``z ~ CN(0, noise_var I)``."""
    v = check_cmatrix(v, "V")
    h = check_cvector(h, "h", v.shape[1])
    clean = np.sqrt(p) * (v @ h)
    if noise_var == 0:
        return clean
    return clean + sample_complex_gaussian(np.zeros(v.shape[0]), noise_var, rng)
