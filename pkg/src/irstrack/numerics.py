"""Complex linear-algebra primitives, Gaussian sampling and DFT construction."""

import numpy as np
import scipy.linalg

from .exceptions import NumericalError
from .validation import check_cmatrix, check_hermitian, check_nonnegative

__all__ = ["make_rng", "sample_complex_gaussian", "dft_matrix", "hermitian_solve"]


def make_rng(seed=None):
    """Return a :class:`numpy.random.Generator`; generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def sample_complex_gaussian(mean, cov_diag, rng):
    """Draw from a circularly-symmetric complex Gaussian with diagonal covariance.

    Each entry is ``mean_n + sqrt(cov_n / 2) * (a + j b)`` with ``a, b``
    independent standard normals, so ``E|x_n - mean_n|^2 = cov_n``.

    Parameters
    ----------
    mean : array_like, complex
        Mean vector (or scalar).
    cov_diag : array_like, float
        Per-entry complex variance; broadcast against ``mean``.
    rng : numpy.random.Generator

    Returns
    -------
    numpy.ndarray
        Complex array with the broadcast shape of ``mean`` and ``cov_diag``.
    """
    mean = np.asarray(mean, dtype=np.complex128)
    cov = check_nonnegative(cov_diag, "cov_diag")
    shape = np.broadcast_shapes(mean.shape, cov.shape)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return mean + np.sqrt(cov / 2.0) * noise


def dft_matrix(n):
    """Unnormalized ``n x n`` DFT matrix, entry ``(m, k) = exp(-2j pi m k / n)``."""
    if int(n) != n or n < 1:
        raise ValueError(f"DFT size must be a positive integer, got {n}")
    n = int(n)
    k = np.arange(n)
    # exact integer phase index keeps entries like exp(-j pi) = -1 clean
    phase = np.outer(k, k) % n
    return np.exp(-2j * np.pi * phase / n)


def hermitian_solve(a, b):
    """Solve ``A X = B`` for Hermitian positive-definite ``A`` via Cholesky.

    Raises
    ------
    ValueError
        If ``A`` is not square/Hermitian or shapes disagree.
    NumericalError
        If ``A`` is not numerically positive definite.
    """
    a = check_hermitian(a, "A")
    b_arr = np.asarray(b, dtype=np.complex128)
    vector = b_arr.ndim == 1
    b2 = b_arr.reshape(-1, 1) if vector else check_cmatrix(b_arr, "B")
    if b2.shape[0] != a.shape[0]:
        raise ValueError(f"B has {b2.shape[0]} rows, A is {a.shape[0]}x{a.shape[0]}")
    try:
        factor = scipy.linalg.cho_factor(0.5 * (a + a.conj().T), lower=True, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        diag = np.real(np.diag(a))
        raise NumericalError(
            f"matrix is not positive definite (size {a.shape[0]}, "
            f"min diagonal {diag.min():.3e}, max diagonal {diag.max():.3e}): {exc}"
        ) from exc
    x = scipy.linalg.cho_solve(factor, b2)
    return x.ravel() if vector else x
