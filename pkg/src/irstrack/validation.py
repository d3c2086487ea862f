"""Input validation helpers shared by the estimators and the filter routines."""

import numpy as np

HERMITIAN_ATOL = 1e-10


def check_cvector(x, name="x", size=None):
    """Return ``x`` as a 1-D complex128 array, checking its length if given."""
    arr = np.asarray(x, dtype=np.complex128)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be a vector, got shape {arr.shape}")
    if size is not None and arr.shape[0] != size:
        raise ValueError(f"{name} must have length {size}, got {arr.shape[0]}")
    return arr


def check_cmatrix(a, name="A", shape=None):
    """Return ``a`` as a 2-D complex128 array, checking its shape if given.

    ``shape`` entries may be ``None`` to leave that dimension free.
    """
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {arr.shape}")
    if shape is not None:
        for axis, want in enumerate(shape):
            if want is not None and arr.shape[axis] != want:
                raise ValueError(f"{name} must have shape {shape}, got {arr.shape}")
    return arr


def check_square(a, name="A"):
    arr = check_cmatrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def is_hermitian(a, atol=HERMITIAN_ATOL):
    """Hermitian test with a tolerance relative to the matrix scale."""
    a = np.asarray(a)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return bool(np.allclose(a, a.conj().T, rtol=0.0, atol=atol * scale))


def check_hermitian(a, name="A", atol=HERMITIAN_ATOL):
    arr = check_square(a, name)
    if not is_hermitian(arr, atol):
        raise ValueError(f"{name} is not Hermitian within {atol:g}")
    return arr


def check_psd(a, name="A", tol=1e-9):
    """Hermitian and no eigenvalue below ``-tol`` times the spectral radius."""
    arr = check_hermitian(a, name)
    eig = np.linalg.eigvalsh(0.5 * (arr + arr.conj().T))
    scale = max(float(np.max(np.abs(eig))), np.finfo(float).tiny) if eig.size else 1.0
    if eig.size and eig.min() < -tol * scale:
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {eig.min():.3e})")
    return arr


def check_nonnegative(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError(f"{name} must be finite and nonnegative")
    return arr


def check_unit_interval(value, name):
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value
