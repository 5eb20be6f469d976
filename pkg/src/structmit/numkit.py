"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy.ndarray`` objects. Every routine is a pure function
of its inputs and never mutates them.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import (
    NegativeEigenvalueError,
    NonHermitianError,
    NumericError,
    RankDeficientError,
    SingularCalibrationError,
)

RANK_TOL = 1e-12
HERMITIAN_TOL = 1e-8
PSD_CLIP = -1e-10
COND_LIMIT = 1e6


class IllConditionedWarning(RuntimeWarning):
    """Raised when a solve falls back to least squares."""


def _as_finite(a, dtype=complex):
    arr = np.asarray(a, dtype=dtype)
    if not np.all(np.isfinite(arr)):
        raise NumericError("matrix has non-finite entries")
    return arr


def _square(a):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def qr_positive(a):
    """QR factorization with a real, non-negative diagonal on R.

    Raises RankDeficientError naming the first diagonal entry of R whose
    magnitude falls below ``RANK_TOL`` times the largest one.
    """
    a = _square(_as_finite(a))
    q, r = np.linalg.qr(a)
    d = np.diag(r)
    mag = np.abs(d)
    phase = np.where(mag > 0, d / np.where(mag > 0, mag, 1.0), 1.0)
    q = q * phase[np.newaxis, :]
    r = np.conj(phase)[:, np.newaxis] * r
    # diagonal is real up to rounding after the phase fix
    r[np.diag_indices_from(r)] = mag
    scale = mag.max() if mag.size else 0.0
    small = np.nonzero(mag <= RANK_TOL * max(scale, 1.0))[0]
    if small.size:
        i = int(small[0])
        raise RankDeficientError(i, float(mag[i]))
    return q, r


def herm_eig(h):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    h = _square(_as_finite(h))
    norm = np.linalg.norm(h)
    if np.linalg.norm(h - h.conj().T) > HERMITIAN_TOL * norm:
        raise NonHermitianError("matrix is not Hermitian within tolerance")
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return w, v


def psd_sqrt(h):
    """Principal square root of a Hermitian positive semidefinite matrix."""
    w, v = herm_eig(h)
    if w.size and w[0] < PSD_CLIP:
        raise NegativeEigenvalueError(
            f"smallest eigenvalue {w[0]:.3e} is below {PSD_CLIP:g}; "
            "the normalization factor is probably not 1/sqrt(lambda_max)"
        )
    root = np.sqrt(np.clip(w, 0.0, None))
    s = (v * root[np.newaxis, :]) @ v.conj().T
    return 0.5 * (s + s.conj().T)


def expm(a):
    """Matrix exponential by scaling and squaring a truncated Taylor series.

    The argument is scaled by 2**-s so that its 1-norm is at most 1/2, the
    series is summed until the next term is below machine precision relative
    to the partial sum, and the result is squared s times.
    """
    a = _square(_as_finite(a))
    n = a.shape[0]
    norm = np.linalg.norm(a, 1)
    s = 0
    if norm > 0.5:
        s = int(np.ceil(np.log2(norm / 0.5)))
    x = a / (2.0 ** s)
    result = np.eye(n, dtype=complex)
    term = np.eye(n, dtype=complex)
    eps = np.finfo(float).eps
    for k in range(1, 60):
        term = term @ x / k
        result = result + term
        if np.linalg.norm(term, 1) <= eps * np.linalg.norm(result, 1):
            break
    for _ in range(s):
        result = result @ result
    return result


def condition_number(m):
    m = np.asarray(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(np.linalg.cond(m))


def solve(m, b):
    """Solve ``m @ x = b`` for a real calibration-style system.

    Uses LU with partial pivoting when the 2-norm condition number is at most
    ``COND_LIMIT``; beyond that the result comes from least squares and an
    IllConditionedWarning is emitted. Singular matrices raise.
    """
    m = _square(_as_finite(m, dtype=float))
    b = _as_finite(b, dtype=float)
    if b.shape[0] != m.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {m.shape}, vector {b.shape}")
    cond = condition_number(m)
    if not np.isfinite(cond) or cond > 1.0 / np.finfo(float).eps:
        raise SingularCalibrationError(
            f"calibration matrix is not invertible (condition number {cond:.3e})"
        )
    if cond <= COND_LIMIT:
        lu, piv = scipy.linalg.lu_factor(m, check_finite=False)
        return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)
    warnings.warn(
        f"calibration matrix condition number {cond:.3e} exceeds {COND_LIMIT:g}; "
        "using least squares",
        IllConditionedWarning,
        stacklevel=2,
    )
    x, *_ = np.linalg.lstsq(m, b, rcond=None)
    return x


def simplex_project(x):
    """Euclidean projection onto the probability simplex.

    Sort-based threshold search; output entries stay in input order.
    """
    x = _as_finite(x, dtype=float)
    n = x.size
    u = np.sort(x)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, n + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    tau = css[rho] / (rho + 1.0)
    y = np.maximum(x - tau, 0.0)
    # remove rounding drift so the sum is 1 to machine precision
    y /= y.sum()
    return y


def kron(*mats):
    """Kronecker product of one or more matrices, left to right.

    With qubit k stored in bit k of the basis index, ``kron(A, B)`` places
    ``A`` on the more significant qubit.
    """
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m))
    return out
